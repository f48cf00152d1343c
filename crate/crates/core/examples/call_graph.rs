//! Dependency graph of generated code: entry nodes, order, and how a hole
//! chooses its implementation among several functions.
//!
//!     cargo run --example call_graph | dot -Tsvg > graph.svg

#[path = "support/mod.rs"]
mod support;

use anpl::callgraph::{build_graph, resolve_hole_fill, Epoch, FillDecision, Provenance};
use anpl::sketch::AnplProgram;

fn main() {
    let g = build_graph(&support::read("darc_compiled.py"), Provenance::Llm, Epoch::New).expect("module scans");
    eprintln!("entry nodes: {:?}", g.entry_nodes());
    eprintln!("order:       {:?}", g.topo_order().expect("acyclic"));

    // a reply with a stray demo function still resolves for a named hole
    let reply = "def seperate_input(g):\n    return quarters(g)\n\ndef quarters(g):\n    return [g]\n\ndef demo():\n    print(seperate_input([[1]]))\n";
    let sketch = AnplProgram::parse("def seperate_input(input):\n    \"split the grid in four\"\n\ndef main(x):\n    return seperate_input(x)\n").unwrap();
    let hole = sketch.find_hole("seperate_input").unwrap();
    match resolve_hole_fill(&hole, &build_graph(reply, Provenance::Llm, Epoch::New).unwrap()) {
        FillDecision::Named { node, pruned } => eprintln!("{node} keeps {:?}", pruned.names().collect::<Vec<_>>()),
        other => eprintln!("{other:?}"),
    }

    println!("{}", g.to_dot());
}
