//! Executing compiled modules.
//!
//! The harness is an external process speaking one JSON document per line
//! on stdio: the parent writes an [`ExecRequest`] and reads back an
//! [`ExecResult`]. The parent owns the wall-clock timeout and kills the
//! child when it expires.

use crate::value::Value;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub source: String,
    pub entry: String,
    pub args: Vec<Value>,
    #[serde(default)]
    pub watch: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

impl ExecRequest {
    pub fn new(source: impl Into<String>, entry: impl Into<String>, args: Vec<Value>) -> Self {
        ExecRequest {
            source: source.into(),
            entry: entry.into(),
            args,
            watch: Vec::new(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    pub fn watching(mut self, names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.watch = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.timeout_ms = ms;
        self
    }

    /// Content hash used to key transcripts.
    pub fn key(&self) -> String {
        let v = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Fault,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub function: String,
    /// Position of this call among all watched calls of the run.
    pub invocation_index: usize,
    pub args: Vec<Value>,
    #[serde(rename = "return")]
    pub ret: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traceback: Option<String>,
    #[serde(default)]
    pub events: Vec<TraceEvent>,
    #[serde(default)]
    pub stdout: String,
}

impl ExecResult {
    pub fn ok(output: Value) -> Self {
        ExecResult {
            status: ExecStatus::Ok,
            output: Some(output),
            traceback: None,
            events: Vec::new(),
            stdout: String::new(),
        }
    }

    pub fn fault(traceback: impl Into<String>) -> Self {
        ExecResult {
            status: ExecStatus::Fault,
            output: None,
            traceback: Some(traceback.into()),
            events: Vec::new(),
            stdout: String::new(),
        }
    }

    pub fn timeout() -> Self {
        ExecResult {
            status: ExecStatus::Timeout,
            output: None,
            traceback: None,
            events: Vec::new(),
            stdout: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "error", content = "detail")]
pub enum HarnessError {
    #[error("harness unavailable: {0}")]
    Unavailable(String),
    #[error("harness protocol error: {0}")]
    Protocol(String),
}

pub trait Harness: Send + Sync {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError>;
}

impl<H: Harness + ?Sized> Harness for std::sync::Arc<H> {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        (**self).run(req)
    }
}

impl<H: Harness + ?Sized> Harness for &H {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        (**self).run(req)
    }
}

/// One child process per run, in a fresh scratch directory.
#[derive(Debug, Clone)]
pub struct SubprocessHarness {
    pub command: Vec<String>,
}

impl SubprocessHarness {
    pub fn new(command: impl IntoIterator<Item = impl Into<String>>) -> Self {
        SubprocessHarness {
            command: command.into_iter().map(Into::into).collect(),
        }
    }

    /// `python3 <script>`
    pub fn python(script: impl Into<PathBuf>) -> Self {
        let script: PathBuf = script.into();
        Self::new(["python3".to_string(), script.to_string_lossy().into_owned()])
    }

    /// Reads `ANPL_HARNESS` (a shell-style word list), e.g.
    /// `python3 -m anpl_harness`.
    pub fn from_env() -> Option<Self> {
        let cmd = std::env::var("ANPL_HARNESS").ok()?;
        let words: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        (!words.is_empty()).then(|| Self::new(words))
    }
}

impl Harness for SubprocessHarness {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        let (prog, rest) = self
            .command
            .split_first()
            .ok_or_else(|| HarnessError::Unavailable("empty harness command".into()))?;
        let scratch = std::env::temp_dir().join(format!("anpl-run-{}", uuid::Uuid::new_v4()));
        std::fs::create_dir_all(&scratch).map_err(|e| HarnessError::Unavailable(e.to_string()))?;
        let result = run_child(prog, rest, &scratch, req);
        let _ = std::fs::remove_dir_all(&scratch);
        result
    }
}

fn run_child(prog: &str, args: &[String], dir: &std::path::Path, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
    let mut line = serde_json::to_string(req).map_err(|e| HarnessError::Protocol(e.to_string()))?;
    line.push('\n');
    let start = Instant::now();
    let mut child = Command::new(prog)
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| HarnessError::Unavailable(format!("{prog}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped");
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(line.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let mut stderr = child.stderr.take().expect("piped");
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });
    let deadline = start + Duration::from_millis(req.timeout_ms);
    let status = loop {
        match child.try_wait() {
            Ok(Some(s)) => break Some(s),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(HarnessError::Unavailable(e.to_string())),
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    let Some(status) = status else {
        tracing::debug!(elapsed_ms = start.elapsed().as_millis() as u64, "harness child killed");
        return Ok(ExecResult::timeout());
    };
    let doc = out.lines().rev().find(|l| !l.trim().is_empty());
    match doc {
        Some(doc) => serde_json::from_str(doc).map_err(|e| HarnessError::Protocol(format!("{e}: {doc}"))),
        None => Err(HarnessError::Protocol(format!("no response (exit {status}); stderr: {}", err.trim_end()))),
    }
}

/// Answers from recorded (request, result) pairs; for runs without a live
/// harness.
#[derive(Default)]
pub struct TranscriptHarness {
    entries: Mutex<HashMap<String, VecDeque<ExecResult>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request: ExecRequest,
    pub result: ExecResult,
}

impl TranscriptHarness {
    pub fn new(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        let mut map: HashMap<String, VecDeque<ExecResult>> = HashMap::new();
        for e in entries {
            map.entry(e.request.key()).or_default().push_back(e.result);
        }
        TranscriptHarness { entries: Mutex::new(map) }
    }

    pub fn from_jsonl(r: impl BufRead) -> Result<Self, HarnessError> {
        let mut out = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| HarnessError::Protocol(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Protocol(e.to_string()))?);
        }
        Ok(Self::new(out))
    }
}

impl Harness for TranscriptHarness {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        let mut map = self.entries.lock();
        let q = map
            .get_mut(&req.key())
            .ok_or_else(|| HarnessError::Unavailable(format!("no transcript entry for request {}", req.key())))?;
        // the last answer for a request is sticky
        if q.len() > 1 {
            Ok(q.pop_front().unwrap())
        } else {
            Ok(q.front().cloned().unwrap())
        }
    }
}

/// A harness backed by a closure.
pub struct FnHarness<F>(pub F);

impl<F> Harness for FnHarness<F>
where
    F: Fn(&ExecRequest) -> Result<ExecResult, HarnessError> + Send + Sync,
{
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        (self.0)(req)
    }
}

/// Wraps a harness and keeps every exchange.
pub struct RecordingHarness<H> {
    inner: H,
    log: Mutex<Vec<TranscriptEntry>>,
}

impl<H: Harness> RecordingHarness<H> {
    pub fn new(inner: H) -> Self {
        RecordingHarness {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.log.lock().clone()
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for e in self.log.lock().iter() {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }
}

impl<H: Harness> Harness for RecordingHarness<H> {
    fn run(&self, req: &ExecRequest) -> Result<ExecResult, HarnessError> {
        let result = self.inner.run(req)?;
        self.log.lock().push(TranscriptEntry {
            request: req.clone(),
            result: result.clone(),
        });
        Ok(result)
    }
}
