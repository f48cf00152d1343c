//! Drive a session, export its DARC log and replay it from the CSV alone.
//!
//!     cargo run --example session_replay > session.csv

#[path = "support/mod.rs"]
mod support;

use anpl::session::{logs_equivalent, replay, system_clock, EditOp, Session};

fn main() {
    let task = anpl::arc::load_task(support::data("tasks/darc_synthetic.json")).unwrap();
    let harness = support::harness();
    let llm = support::darc_mock();
    let input = task.train[0].input.to_value();

    let (mut s, compiled) = Session::create(task, &support::read("darc.anpl"), &llm, system_clock()).unwrap();
    compiled.unwrap();
    s.trace(&["get_max_score_center".into()], &input, &harness).unwrap();
    s.apply_edit(
        &EditOp::EditDescription {
            hole_id: "main@0".into(),
            description: "traverse the input which is a 2-dim numpy array, return positions which satisfies that there is no grey in its 3*3 neighbor".into(),
        },
        &llm,
    )
    .unwrap();
    let verdict = s.check(&harness).unwrap();
    eprintln!("train pass: {}", verdict.train_pass);

    let csv = s.export_log();
    let again = replay(&csv, &harness).expect("replay matches");
    eprintln!("{} rows replayed, identical: {}", again.log().len(), logs_equivalent(again.log(), s.log()));
    print!("{csv}");
}
