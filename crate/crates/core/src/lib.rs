pub mod lex;
pub mod sketch;
pub mod target;
pub mod callgraph;
pub mod llm;
pub mod compiler;
pub mod diff;
pub mod value;
pub mod arc;
pub mod harness;
pub mod resynth;
pub mod session;
pub mod server;
