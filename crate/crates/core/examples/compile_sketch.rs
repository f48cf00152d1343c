//! Compile the DARC sketch: each hole is filled by the model and spliced
//! into the sketch, which itself stays untouched.
//!
//!     cargo run --example compile_sketch

#[path = "support/mod.rs"]
mod support;

use anpl::compiler::{compile_traced, AttemptOutcome};
use anpl::sketch::AnplProgram;

fn main() {
    let anpl = AnplProgram::parse(&support::read("darc.anpl")).expect("sketch parses");
    for h in anpl.holes() {
        println!("{:<8} {}({})  {:?}", h.id, h.name(), h.params().join(", "), h.description);
    }

    let (program, attempts) = compile_traced(&anpl, support::model().as_ref()).expect("compiles");
    for a in &attempts {
        let outcome = match &a.outcome {
            AttemptOutcome::Filled(name) => format!("filled by {name}"),
            AttemptOutcome::Rejected(why) => format!("rejected: {why}"),
        };
        println!("{} attempt {} at T={}: {outcome}", a.hole_id, a.attempt_index, a.temperature);
    }
    println!("\n{}", program.target_source);
    assert_eq!(anpl::compiler::recover_sketch(&program), anpl.render());
}
