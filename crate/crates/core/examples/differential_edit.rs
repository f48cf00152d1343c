//! Edit one hole's description and recompile: only that hole goes back to
//! the model, every other fill stays byte-for-byte.
//!
//!     cargo run --example differential_edit

#[path = "support/mod.rs"]
mod support;

use anpl::compiler::compile;
use anpl::diff::compile_diff_traced;
use anpl::session::{apply_op, EditOp};
use anpl::sketch::AnplProgram;

fn main() {
    let anpl = AnplProgram::parse(&support::read("darc.anpl")).unwrap();
    let old = compile(&anpl, &support::darc_mock()).unwrap();

    let edited = apply_op(
        &anpl,
        &EditOp::EditDescription {
            hole_id: "main@1".into(),
            description: "for each position in the centers, count the yellow cells among its 8 neighbours".into(),
        },
    )
    .unwrap();
    let llm = support::darc_mock();
    let (new, delta, _) = compile_diff_traced(&old, &edited, &llm).unwrap();

    println!("delta: {}", serde_json::to_string_pretty(&delta).unwrap());
    println!("model calls: {}", llm.call_count());
    for h in edited.holes() {
        let same = new.fill_source(&h.id) == old.fill_source(&h.id);
        println!("{:<8} {:<40} {}", h.id, new.fill_name(&h.id).unwrap(), if same { "kept" } else { "regenerated" });
    }

    // a decomposition turns one hole into a function with its own holes
    let decomposed = apply_op(
        &edited,
        &EditOp::Decompose {
            hole_id: "main@4".into(),
            body: "for p in center_black:\n    output = \"make the 3*3 neighbor of p black\"(output, p)\nreturn output".into(),
            name: Some("blacken_all".into()),
        },
    )
    .unwrap();
    println!("\n{}", decomposed.render());
}
