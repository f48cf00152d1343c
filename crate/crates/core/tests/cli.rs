mod common;

use anpl::llm::RecordingModel;
use anpl::session::{system_clock, EditOp, Session};
use common::*;
use serde_json::Value as Json;
use std::path::Path;
use std::process::{Command, Output};

fn anpl(dir: &Path, args: &[&str]) -> Output {
    let harness = format!("python3 {}", fixture("mini_harness.py").display());
    Command::new(env!("CARGO_BIN_EXE_anpl"))
        .current_dir(dir)
        .env("ANPL_HARNESS", harness)
        .env("ANPL_TASKS_DIR", fixture("tasks"))
        .env_remove("ANPL_LLM_ENDPOINT")
        .args(args)
        .output()
        .unwrap()
}

fn json(o: &Output) -> Json {
    assert!(o.status.success(), "stderr: {}\nstdout: {}", String::from_utf8_lossy(&o.stderr), String::from_utf8_lossy(&o.stdout));
    serde_json::from_slice(&o.stdout).unwrap()
}

const EDIT: &str = r#"{"op":"edit_description","hole_id":"main@1","description":"for each position in the centers, count the yellow cells in its 3*3 neighbor"}"#;

#[test]
fn verbs_drive_one_session() {
    if !live_python() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    // record what the model would answer, once
    let rec = RecordingModel::new(darc_model());
    let (mut s, r) = Session::create(darc_task(), &read("darc.anpl"), &rec, system_clock()).unwrap();
    r.unwrap();
    s.apply_edit(&serde_json::from_str::<EditOp>(EDIT).unwrap(), &rec).unwrap();
    let lines: Vec<String> = rec.exchanges().iter().map(|e| e.to_json_line()).collect();
    std::fs::write(dir.path().join("llm.jsonl"), lines.join("\n")).unwrap();
    std::fs::copy(fixture("darc.anpl"), dir.path().join("darc.anpl")).unwrap();

    let c = json(&anpl(dir.path(), &["--llm-replay", "llm.jsonl", "compile", "darc.anpl", "--task", "darc_synthetic"]));
    assert_eq!(c["fill_map"].as_object().unwrap().len(), 5);
    assert!(dir.path().join("anpl-session.csv").exists());

    let e = json(&anpl(dir.path(), &["--llm-replay", "llm.jsonl", "edit", "--op", EDIT]));
    assert_eq!(e["delta"]["changed_holes"], serde_json::json!(["main@1"]));
    assert_eq!(e["compiled"]["target_source"], s.compiled.as_ref().unwrap().target_source.as_str());

    let input = serde_json::to_string(&darc_task().train[0].input).unwrap();
    let t = json(&anpl(dir.path(), &["trace", "count_yellow_neighbors", "--input", &input]));
    assert_eq!(t["events"].as_array().unwrap().len(), 1);

    let v = json(&anpl(dir.path(), &["check"]));
    assert_eq!(v["train_pass"], true);

    let out = anpl(dir.path(), &["replay", "anpl-session.csv"]);
    let r = json(&out);
    assert_eq!(r["ok"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("replayed"));
}

#[test]
fn failures_are_json_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = anpl(dir.path(), &["check"]);
    assert!(!o.status.success());
    let v: Json = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert!(!o.stderr.is_empty());
}

#[test]
fn help_lists_verbs() {
    let o = Command::new(env!("CARGO_BIN_EXE_anpl")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for verb in ["compile", "trace", "edit", "resynth", "check", "replay", "serve"] {
        assert!(text.contains(verb), "{verb} missing from:\n{text}");
    }
}
