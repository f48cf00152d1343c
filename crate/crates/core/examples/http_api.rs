//! Serve sessions over HTTP and talk to the server as the workbench would.
//!
//!     cargo run --example http_api

#[path = "support/mod.rs"]
mod support;

use anpl::arc::TaskStore;
use anpl::server::{serve, AppState};
use serde_json::{json, Value};
use std::sync::Arc;

fn main() {
    let state = AppState::new(Arc::new(support::darc_mock()), Arc::new(support::harness())).with_tasks(TaskStore::new(support::data("tasks")));
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    rt.spawn(serve(listener, state));

    let c = reqwest::blocking::Client::new();
    let s: Value = c
        .post(format!("{base}/sessions"))
        .json(&json!({"task_id": "darc_synthetic", "anpl": support::read("darc.anpl")}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let id = s["session_id"].as_str().unwrap();
    println!("POST /sessions -> {id}, holes {}", s["holes"].as_array().unwrap().len());

    let v: Value = c.post(format!("{base}/sessions/{id}/check")).send().unwrap().json().unwrap();
    println!("POST /sessions/{id}/check -> train_pass={} test_pass={}", v["train_pass"], v["test_pass"]);

    let r: Value = c
        .post(format!("{base}/sessions/{id}/constraints"))
        .json(&json!({"hole_id": "main@2", "input": [[{"t": [2, 2]}, {"t": [2, 6]}], [2, 1]], "expected_output": {"t": [[{"t": [2, 2]}], [{"t": [2, 6]}]]}}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("POST /sessions/{id}/constraints -> {r}");

    let r: Value = c
        .post(format!("{base}/sessions/{id}/edit"))
        .json(&json!({"op": "edit_description", "hole_id": "main@3", "description": "for each position in the position list, paint its 3*3 neighbor yellow"}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("POST /sessions/{id}/edit -> changed {}", r["delta"]["changed_holes"]);

    let csv = c.get(format!("{base}/sessions/{id}/log.csv")).send().unwrap().text().unwrap();
    println!("GET /sessions/{id}/log.csv -> {} rows", csv.lines().count() - 1);
}
