//! Pin a hole down with an input-output example and regenerate it: ten
//! candidates in one request, each run against the example.
//!
//!     cargo run --example resynthesize

#[path = "support/mod.rs"]
mod support;

use anpl::compiler::compile;
use anpl::llm::MockModel;
use anpl::resynth::{resynthesize, IoConstraint};
use anpl::sketch::AnplProgram;
use anpl::value::Value;

fn main() {
    let anpl = AnplProgram::parse(&support::read("darc.anpl")).unwrap();
    let program = compile(&anpl, &support::darc_mock()).unwrap();

    let pos = |r, c| Value::Tuple(vec![Value::Int(r), Value::Int(c)]);
    let example = IoConstraint {
        hole_id: "main@2".into(),
        input: vec![Value::List(vec![pos(2, 2), pos(2, 6)]), "[2, 1]".parse().unwrap()],
        expected_output: Value::Tuple(vec![Value::List(vec![pos(2, 2)]), Value::List(vec![pos(2, 6)])]),
    };

    // candidates of mixed quality, as a sampled batch would be
    let f = |body: &str| format!("```python\ndef best(centers, scores):\n{body}\n```");
    let batch = vec![
        f("    return (centers, [])"),
        f("    return centers[0]"),
        "Here is the function you asked for.".to_string(),
        f("    m = max(scores)\n    return ([c for c, s in zip(centers, scores) if s == m], [c for c, s in zip(centers, scores) if s != m])"),
        f("    return scores[7]"),
        f("    return ([], centers)"),
        f("    return None"),
        f("    return (centers[:1], centers[1:])"),
        f("    return tuple(centers)"),
        f("    return ([centers[-1]], [centers[0]])"),
    ];
    let llm = MockModel::new().with_batches(vec![batch]);
    let out = resynthesize(&program, "main@2", &[example], &llm, &support::harness()).expect("a candidate passes");

    for row in &out.report {
        println!("candidate {} : {:?} {}", row.candidate_index, row.status, row.detail.lines().last().unwrap_or(""));
    }
    println!("selected {} kept as `{}`:", out.selected, out.program.fill_name("main@2").unwrap());
    println!("{}", out.program.fill_source("main@2").unwrap());
}
