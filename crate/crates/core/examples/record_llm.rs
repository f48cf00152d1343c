//! Record model exchanges to JSON lines and answer later runs from them.
//!
//!     cargo run --example record_llm
//!     ANPL_LLM_ENDPOINT=... ANPL_LLM_API_KEY=... cargo run --example record_llm

#[path = "support/mod.rs"]
mod support;

use anpl::compiler::compile;
use anpl::llm::{RecordingModel, ReplayModel};
use anpl::sketch::AnplProgram;

fn main() {
    let anpl = AnplProgram::parse(&support::read("darc.anpl")).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();

    let rec = RecordingModel::new(support::model()).with_sink(file.reopen().unwrap());
    let first = compile(&anpl, &rec).expect("compiles");
    for e in rec.exchanges() {
        println!("{}  T={}  {:.3}s", &e.fingerprint[..12], e.request.temperature, e.wall_time);
    }

    let replay = ReplayModel::from_jsonl(std::io::BufReader::new(file.reopen().unwrap())).unwrap();
    let second = compile(&anpl, &replay).expect("replays");
    println!("replayed run identical: {}", first.target_source == second.target_source);
}
