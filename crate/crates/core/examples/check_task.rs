//! Check a program against every train and test pair of an ARC task.
//!
//!     cargo run --example check_task [task.json]

#[path = "support/mod.rs"]
mod support;

use anpl::arc::{check, load_task};
use anpl::compiler::compile;
use anpl::sketch::AnplProgram;

fn main() {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| support::data("tasks/darc_synthetic.json"));
    let task = load_task(&path).expect("task loads");
    println!("{}: {} train, {} test", task.task_id, task.train.len(), task.test.len());
    for p in &task.train {
        println!("{}x{} -> {}x{}", p.input.height(), p.input.width(), p.output.height(), p.output.width());
    }

    let program = compile(&AnplProgram::parse(&support::read("darc.anpl")).unwrap(), &support::darc_mock()).unwrap();
    let v = check(&program, &task, &support::harness()).expect("harness runs");
    for p in &v.pairs {
        println!("{:?}[{}] {} {}", p.split, p.index, if p.pass { "pass" } else { "FAIL" }, p.detail);
    }
    println!("train {} / test {}", v.train_pass, v.test_pass);
}
