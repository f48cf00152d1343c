//! Run the compiled DARC program on its first training input and print what
//! every generated function received and returned.
//!
//!     cargo run --example trace_program
//!     ANPL_HARNESS="python3 -m anpl_harness" cargo run --example trace_program

#[path = "support/mod.rs"]
mod support;

use anpl::compiler::compile;
use anpl::harness::{ExecRequest, Harness};
use anpl::sketch::AnplProgram;

fn main() {
    let task = anpl::arc::load_task(support::data("tasks/darc_synthetic.json")).unwrap();
    let program = compile(&AnplProgram::parse(&support::read("darc.anpl")).unwrap(), &support::darc_mock()).unwrap();
    let watch: Vec<String> = program.fill_map.values().cloned().collect();

    let req = ExecRequest::new(program.target_source.clone(), "main", vec![task.train[0].input.to_value()]).watching(watch);
    let res = support::harness().run(&req).expect("harness runs");
    println!("status: {:?}", res.status);
    for e in &res.events {
        let args: Vec<String> = e.args.iter().map(|a| a.to_string()).collect();
        println!("#{} {}({})\n    -> {}", e.invocation_index, e.function, args.join(", "), e.ret);
    }
    if let Some(tb) = &res.traceback {
        println!("{tb}");
    }
}
