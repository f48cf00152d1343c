#![allow(dead_code)]

use anpl::harness::SubprocessHarness;
use anpl::llm::{ChatModel, ChatRequest, HttpConfig, HttpModel, MockModel};
use std::path::PathBuf;
use std::sync::Arc;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).expect("example data")
}

/// The five functions the paper's model wrote for the DARC example sketch.
pub fn darc_fills() -> Vec<String> {
    let src = read("darc_compiled.py");
    let defs: Vec<String> = src.split("\ndef ").skip(1).map(|c| format!("def {}", c.trim_end())).collect();
    [
        "find_positions_without_grey_neighbors",
        "count_yellow_neighbors",
        "get_max_score_center",
        "make_neighbors_yellow",
        "make_neighbors_black",
    ]
    .iter()
    .map(|n| defs.iter().find(|d| d.starts_with(&format!("def {n}("))).unwrap().clone())
    .collect()
}

/// Answers `_hole<k>` prompts of the DARC sketch with the k-th fill.
pub fn darc_mock() -> MockModel {
    let fills = darc_fills();
    MockModel::new().with_responder(move |req: &ChatRequest| {
        let tail = &req.user_text[req.user_text.rfind("\ndef _hole")? + 10..];
        let k: usize = tail[..tail.find('(')?].parse().ok()?;
        Some(vec![format!("```python\n{}\n```", fills.get(k)?)])
    })
}

/// A real endpoint when ANPL_LLM_ENDPOINT is set, the DARC mock otherwise.
pub fn model() -> Arc<dyn ChatModel> {
    if std::env::var_os("ANPL_LLM_ENDPOINT").is_some() {
        eprintln!("using {}", HttpConfig::from_env().endpoint);
        Arc::new(HttpModel::new(HttpConfig::from_env()).expect("http client"))
    } else {
        Arc::new(darc_mock())
    }
}

/// ANPL_HARNESS when set, else the protocol test double under python3.
pub fn harness() -> SubprocessHarness {
    SubprocessHarness::from_env().unwrap_or_else(|| SubprocessHarness::python(data("mini_harness.py")))
}
