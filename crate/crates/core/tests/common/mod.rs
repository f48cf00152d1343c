#![allow(dead_code)]

use anpl::harness::{ExecRequest, ExecResult, Harness, HarnessError, RecordingHarness, SubprocessHarness, TranscriptHarness};
use anpl::llm::{ChatRequest, MockModel};
use rand::seq::SliceRandom;
use rand::Rng;
use std::path::PathBuf;
use std::sync::OnceLock;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// python3 with numpy on PATH, and transcripts not forced.
pub fn live_python() -> bool {
    static OK: OnceLock<bool> = OnceLock::new();
    *OK.get_or_init(|| {
        std::env::var_os("ANPL_USE_TRANSCRIPTS").is_none()
            && std::process::Command::new("python3")
                .args(["-c", "import numpy"])
                .output()
                .map(|o| o.status.success())
                .unwrap_or(false)
    })
}

pub fn mini_harness() -> SubprocessHarness {
    SubprocessHarness::python(fixture("mini_harness.py"))
}

/// The live mini harness when python is usable, otherwise answers recorded
/// in `transcripts/<name>.jsonl`. With ANPL_RECORD_TRANSCRIPTS set, live
/// runs are written back to that file.
pub struct TestHarness {
    live: Option<RecordingHarness<SubprocessHarness>>,
    replay: Option<TranscriptHarness>,
    path: PathBuf,
}

impl TestHarness {
    pub fn new(name: &str) -> Self {
        let path = fixture(&format!("transcripts/{name}.jsonl"));
        if live_python() {
            TestHarness {
                live: Some(RecordingHarness::new(mini_harness())),
                replay: None,
                path,
            }
        } else {
            let f = std::fs::File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            TestHarness {
                live: None,
                replay: Some(TranscriptHarness::from_jsonl(std::io::BufReader::new(f)).unwrap()),
                path,
            }
        }
    }

    pub fn is_live(&self) -> bool {
        self.live.is_some()
    }
}

impl Harness for TestHarness {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        match (&self.live, &self.replay) {
            (Some(h), _) => h.run(req),
            (_, Some(t)) => t.run(req),
            _ => unreachable!(),
        }
    }
}

impl Drop for TestHarness {
    fn drop(&mut self) {
        static WRITE: std::sync::Mutex<()> = std::sync::Mutex::new(());
        let (Some(h), Some(_)) = (&self.live, std::env::var_os("ANPL_RECORD_TRANSCRIPTS")) else {
            return;
        };
        let _guard = WRITE.lock().unwrap_or_else(|e| e.into_inner());
        std::fs::create_dir_all(self.path.parent().unwrap()).unwrap();
        // tests sharing a transcript merge their entries
        let mut lines: Vec<String> = std::fs::read_to_string(&self.path)
            .map(|t| t.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect())
            .unwrap_or_default();
        let mut seen: std::collections::HashSet<String> = lines
            .iter()
            .map(|l| serde_json::from_str::<anpl::harness::TranscriptEntry>(l).unwrap().request.key())
            .collect();
        for e in h.entries() {
            if seen.insert(e.request.key()) {
                lines.push(serde_json::to_string(&e).unwrap());
            }
        }
        std::fs::write(&self.path, lines.join("\n") + "\n").unwrap();
    }
}

pub const TASK64_ANPL: &str = "def seperate_input(input):\n    \"Change the input into four new arrays based on the central dividing line in the x and y directions\"\n\ndef main(input):\n    inputs = seperate_input(input)\n    output = \"Find an array that doesn't have just one color\"(inputs)\n    return output\n";

/// The five generated functions of the DARC example, in hole order.
pub fn darc_functions() -> Vec<String> {
    let src = read("darc_compiled.py");
    let mut defs: Vec<String> = Vec::new();
    for chunk in src.split("\ndef ").skip(1) {
        defs.push(format!("def {}", chunk.trim_end()));
    }
    let by_name = |n: &str| defs.iter().find(|d| d.starts_with(&format!("def {n}("))).unwrap().clone();
    [
        "find_positions_without_grey_neighbors",
        "count_yellow_neighbors",
        "get_max_score_center",
        "make_neighbors_yellow",
        "make_neighbors_black",
    ]
    .iter()
    .map(|n| by_name(n))
    .collect()
}

/// A model answering each DARC hole with its function from the paper.
pub fn darc_model() -> MockModel {
    let fns = darc_functions();
    MockModel::new().with_responder(move |req: &ChatRequest| {
        let k = stub_name(req)?.strip_prefix("_hole")?.parse::<usize>().ok()?;
        Some(vec![format!("```python\n{}\n```", fns.get(k)?)])
    })
}

/// Name and params of the hole stub at the end of a fill prompt.
pub fn stub(req: &ChatRequest) -> Option<(String, Vec<String>)> {
    let at = req.user_text.rfind("\ndef ")?;
    let line = req.user_text[at + 5..].lines().next()?;
    let (name, rest) = line.split_once('(')?;
    let params = rest.split_once(')')?.0;
    let params = params.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::to_string).collect();
    Some((name.to_string(), params))
}

pub fn stub_name(req: &ChatRequest) -> Option<String> {
    stub(req).map(|(n, _)| n)
}

pub fn darc_task() -> anpl::arc::ArcTask {
    anpl::arc::load_task(fixture("tasks/darc_synthetic.json")).unwrap()
}

// ---- random sketches ----

const WORDS: &[&str] = &[
    "rotate", "the", "grid", "count", "blue", "cells", "it's", "say \"hi\"", "a\\b", "{code}", "split", "рисунок", "max",
    "tab\there",
];

pub fn description(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..5);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub struct SketchGen {
    lines: Vec<String>,
    named: Vec<(String, usize)>,
    helpers: Vec<(String, usize)>,
    fresh: usize,
}

impl SketchGen {
    /// A random sketch that validates: helpers, named holes and `main`.
    pub fn program(rng: &mut impl Rng) -> String {
        let mut g = SketchGen {
            lines: Vec::new(),
            named: Vec::new(),
            helpers: Vec::new(),
            fresh: 0,
        };
        let mut defs: Vec<String> = Vec::new();
        for i in 0..rng.gen_range(0..3) {
            let arity = rng.gen_range(1..3);
            let params: Vec<String> = (0..arity).map(|k| format!("q{k}")).collect();
            defs.push(format!("def nh{i}({}):\n    {}\n", params.join(", "), anpl::lex::quote_string(&description(rng))));
            g.named.push((format!("nh{i}"), arity));
        }
        for i in 0..rng.gen_range(0..3) {
            let arity = rng.gen_range(1..3);
            let params: Vec<String> = (0..arity).map(|k| format!("a{k}")).collect();
            g.lines.clear();
            let mut env = params.clone();
            g.block(rng, &mut env, 1, 0);
            let ret = env.choose(rng).unwrap().clone();
            g.lines.push(format!("    return {ret}"));
            defs.push(format!("def h{i}({}):\n{}\n", params.join(", "), g.lines.join("\n")));
            g.helpers.push((format!("h{i}"), arity));
        }
        g.lines.clear();
        let mut env = vec!["x".to_string(), "y".to_string()];
        g.block(rng, &mut env, 1, 0);
        let ret = env.choose(rng).unwrap().clone();
        g.lines.push(format!("    return {ret}"));
        defs.push(format!("def main(x, y):\n{}\n", g.lines.join("\n")));
        defs.join("\n")
    }

    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn pick_args(rng: &mut impl Rng, env: &[String], n: usize) -> Vec<String> {
        (0..n).map(|_| env.choose(rng).unwrap().clone()).collect()
    }

    fn expr(&mut self, rng: &mut impl Rng, env: &[String], depth: usize) -> String {
        match rng.gen_range(0..if depth > 1 { 3 } else { 9 }) {
            0 => env.choose(rng).unwrap().clone(),
            1 => rng.gen_range(-3..50).to_string(),
            2 => format!("{:?}", description(rng)),
            3 => format!("{} + {}", self.expr(rng, env, depth + 1), self.expr(rng, env, depth + 1)),
            4 => format!("len({})", env.choose(rng).unwrap()),
            5 => format!("{}[{}]", env.choose(rng).unwrap(), rng.gen_range(0..3)),
            6 => format!("np.sum({}) * 2", env.choose(rng).unwrap()),
            7 => format!("[{}, {}]", self.expr(rng, env, depth + 1), env.choose(rng).unwrap()),
            _ => format!("({} < {}) and not {}", self.expr(rng, env, depth + 1), rng.gen_range(0..9), env.choose(rng).unwrap()),
        }
    }

    fn hole_call(&mut self, rng: &mut impl Rng, env: &[String]) -> String {
        let n = rng.gen_range(1..=env.len().min(3));
        let mut args = Self::pick_args(rng, env, n);
        args.dedup();
        format!("{}({})", anpl::lex::quote_string(&description(rng)), args.join(", "))
    }

    fn block(&mut self, rng: &mut impl Rng, env: &mut Vec<String>, indent: usize, depth: usize) {
        let pad = "    ".repeat(indent);
        let n = rng.gen_range(1..4);
        for _ in 0..n {
            match rng.gen_range(0..if depth >= 2 { 4 } else { 7 }) {
                0 => {
                    let v = self.var();
                    let e = self.expr(rng, env, 0);
                    self.lines.push(format!("{pad}{v} = {e}"));
                    env.push(v);
                }
                1 => {
                    let v = self.var();
                    let call = self.hole_call(rng, env);
                    self.lines.push(format!("{pad}{v} = {call}"));
                    env.push(v);
                }
                2 => {
                    let call = if let (true, Some((name, arity))) = (rng.gen_bool(0.5), self.named.choose(rng).cloned()) {
                        format!("{name}({})", Self::pick_args(rng, env, arity).join(", "))
                    } else if let Some((name, arity)) = self.helpers.choose(rng).cloned() {
                        format!("{name}({})", Self::pick_args(rng, env, arity).join(", "))
                    } else {
                        self.hole_call(rng, env)
                    };
                    let (a, b) = (self.var(), self.var());
                    if rng.gen_bool(0.3) {
                        self.lines.push(format!("{pad}{a}, {b} = {call}"));
                        env.push(a);
                        env.push(b);
                    } else {
                        self.lines.push(format!("{pad}{a} = {call}"));
                        env.push(a);
                    }
                }
                3 => {
                    let call = self.hole_call(rng, env);
                    self.lines.push(format!("{pad}{call}"));
                }
                4 => {
                    let cond = self.expr(rng, env, 1);
                    self.lines.push(format!("{pad}if {cond}:"));
                    self.block(rng, &mut env.clone(), indent + 1, depth + 1);
                    if rng.gen_bool(0.5) {
                        self.lines.push(format!("{pad}else:"));
                        self.block(rng, &mut env.clone(), indent + 1, depth + 1);
                    }
                }
                5 => {
                    let v = self.var();
                    let it = env.choose(rng).unwrap().clone();
                    self.lines.push(format!("{pad}for {v} in range(len({it})):"));
                    let mut inner = env.clone();
                    inner.push(v);
                    self.block(rng, &mut inner, indent + 1, depth + 1);
                }
                _ => {
                    let w = env.choose(rng).unwrap().clone();
                    self.lines.push(format!("{pad}while {w} < 3:"));
                    self.block(rng, &mut env.clone(), indent + 1, depth + 1);
                    self.lines.push(format!("{pad}    break"));
                }
            }
        }
    }
}

/// A model that fills any hole with a fresh function plus an optional
/// helper whose names sometimes collide with sketch identifiers.
pub fn random_fill_model(seed: u64) -> MockModel {
    use rand::SeedableRng;
    MockModel::new().with_responder(move |req: &ChatRequest| {
        let (name, params) = stub(req)?;
        let h = req.fingerprint();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ u64::from_str_radix(&h[..15], 16).unwrap());
        let entry = if name.starts_with("_hole") {
            ["solve", "v1", "x", "helper", "compute", "a0"].choose(&mut rng).unwrap().to_string()
        } else {
            name.clone()
        };
        let helper = ["helper", "util", "v2", "y", "q0"].iter().find(|h| **h != entry).unwrap().to_string();
        let args = if params.is_empty() { "0".to_string() } else { params.join(", ") };
        let mut out = String::from("```python\n");
        if rng.gen_bool(0.5) {
            out.push_str(&format!("def {entry}({}):\n    return {helper}({args})\n\n", params.join(", ")));
            out.push_str(&format!("def {helper}(*args):\n    return len(args)\n"));
        } else {
            out.push_str(&format!("def {entry}({}):\n    return {}\n", params.join(", "), rng.gen_range(0..100)));
        }
        out.push_str("```\n");
        Some(vec![out])
    })
}
