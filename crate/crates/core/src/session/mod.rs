//! Interactive sessions: the edit/trace/resynthesize loop over one task,
//! with every interaction appended to a replayable log.

pub mod edit;
pub mod log;

pub use edit::{apply_op, EditError, EditOp};
pub use log::{from_csv, logs_equivalent, to_csv, Action, CsvSchemaError, LogEntry, Role};

use crate::arc::{self, ArcTask, Verdict};
use crate::compiler::{self, CompileError, CompiledProgram};
use crate::diff::{self, EditDelta};
use crate::harness::{ExecRequest, ExecStatus, Harness, HarnessError, TraceEvent};
use crate::llm::{ChatModel, Exchange, LlmError, RecordingModel, ReplayModel};
use crate::resynth::{self, CandidateReport, ConstraintStore, IoConstraint, ResynthError};
use crate::sketch::{validate, AnplProgram, Diagnostic, HoleId, ParseError, ENTRY_NAME};
use crate::value::Value;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::json;
use std::sync::Arc;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

#[derive(Debug, Clone, thiserror::Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SessionError {
    #[error("parse error: {source}")]
    Parse { source: ParseError },
    #[error("sketch is not well-formed")]
    SketchInvalid { diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Edit {
        #[from]
        source: EditError,
    },
    #[error("no compiled program")]
    NotCompiled,
    #[error("hole {hole_id} could not be filled after {attempts} attempts")]
    ExhaustedAttempts { hole_id: HoleId, attempts: usize },
    #[error("language model: {source}")]
    Llm { source: LlmError },
    #[error(transparent)]
    Harness {
        #[from]
        source: HarnessError,
    },
    #[error("runtime fault")]
    RuntimeFault { traceback: String, events: Vec<TraceEvent> },
    #[error("timeout")]
    Timeout,
    #[error("unknown function `{function}`")]
    UnknownFunction { function: String },
    #[error("unknown hole `{hole_id}`")]
    UnknownHole { hole_id: HoleId },
    #[error("no constraints stored for `{hole_id}`")]
    NoConstraints { hole_id: HoleId },
    #[error("none of the candidates satisfies every constraint")]
    NoCandidatePasses { report: Vec<CandidateReport> },
    #[error("{0}")]
    Internal(String),
}

impl From<CompileError> for SessionError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::SketchInvalid(diagnostics) => SessionError::SketchInvalid { diagnostics },
            CompileError::ExhaustedAttempts { hole_id, attempts, .. } => SessionError::ExhaustedAttempts {
                hole_id,
                attempts: attempts.len(),
            },
            CompileError::Llm { source, .. } => SessionError::Llm { source },
            CompileError::Graph(g) => SessionError::Internal(g.to_string()),
        }
    }
}

impl From<ResynthError> for SessionError {
    fn from(e: ResynthError) -> Self {
        match e {
            ResynthError::UnknownHole(hole_id) => SessionError::UnknownHole { hole_id },
            ResynthError::NoConstraints(hole_id) => SessionError::NoConstraints { hole_id },
            ResynthError::NoCandidatePasses { report } => SessionError::NoCandidatePasses { report },
            ResynthError::Llm(source) => SessionError::Llm { source },
            ResynthError::Harness(source) => SessionError::Harness { source },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub output: Value,
    pub events: Vec<TraceEvent>,
    pub stdout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResynthOutcome {
    pub selected: usize,
    pub fill_name: String,
    pub report: Vec<CandidateReport>,
}

#[derive(Clone)]
pub struct Session {
    pub session_id: String,
    pub task: ArcTask,
    pub anpl: AnplProgram,
    pub compiled: Option<CompiledProgram>,
    pub constraints: ConstraintStore,
    log: Vec<LogEntry>,
    clock: Clock,
    last_time: Option<DateTime<Utc>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("session_id", &self.session_id)
            .field("task", &self.task.task_id)
            .field("compiled", &self.compiled.is_some())
            .field("log_len", &self.log.len())
            .finish()
    }
}

impl Session {
    /// Parses and checks the sketch; no compilation yet.
    pub fn open(task: ArcTask, anpl_text: &str, clock: Clock) -> Result<Session, SessionError> {
        let anpl = AnplProgram::parse(anpl_text).map_err(|source| SessionError::Parse { source })?;
        let diagnostics: Vec<Diagnostic> = validate::validate_sketch(&anpl).into_iter().filter(Diagnostic::is_error).collect();
        if !diagnostics.is_empty() {
            return Err(SessionError::SketchInvalid { diagnostics });
        }
        let mut s = Session {
            session_id: uuid::Uuid::new_v4().to_string(),
            task,
            anpl,
            compiled: None,
            constraints: ConstraintStore::new(),
            log: Vec::new(),
            clock,
            last_time: None,
        };
        let payload = json!({"task_id": s.task.task_id, "task": s.task.to_json(), "anpl": anpl_text});
        s.push(Role::User, Action::Parse, payload);
        let ids: Vec<String> = s.anpl.holes().into_iter().map(|h| h.id).collect();
        s.push(Role::System, Action::Parse, json!({"ok": true, "holes": ids, "anpl": s.anpl.render()}));
        Ok(s)
    }

    /// [`Session::open`] followed by a full compile. A compile failure is
    /// logged and leaves the session without a compiled program.
    pub fn create(task: ArcTask, anpl_text: &str, llm: &dyn ChatModel, clock: Clock) -> Result<(Session, Result<(), SessionError>), SessionError> {
        let mut s = Session::open(task, anpl_text, clock)?;
        let r = s.compile(llm);
        Ok((s, r))
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn compiled(&self) -> Result<&CompiledProgram, SessionError> {
        self.compiled.as_ref().ok_or(SessionError::NotCompiled)
    }

    fn now(&mut self) -> String {
        let mut t = (self.clock)();
        if let Some(last) = self.last_time {
            if t < last {
                t = last;
            }
        }
        self.last_time = Some(t);
        t.to_rfc3339_opts(SecondsFormat::Millis, true)
    }

    fn push(&mut self, role: Role, action: Action, content: serde_json::Value) {
        let timestamp = self.now();
        self.log.push(LogEntry {
            role,
            action,
            content,
            timestamp,
        });
    }

    fn push_exchanges(&mut self, exchanges: Vec<Exchange>) {
        for e in exchanges {
            self.push(
                Role::Llm,
                Action::LlmExchange,
                json!({"fingerprint": e.fingerprint, "request": e.request, "completions": e.completions}),
            );
        }
    }

    fn program_summary(p: &CompiledProgram) -> serde_json::Value {
        json!({"ok": true, "fill_map": p.fill_map, "target_source": p.target_source})
    }

    pub fn compile(&mut self, llm: &dyn ChatModel) -> Result<(), SessionError> {
        self.push(Role::User, Action::Compile, json!({}));
        let rec = RecordingModel::new(llm);
        let r = compiler::compile(&self.anpl, &rec);
        self.push_exchanges(rec.drain());
        match r {
            Ok(p) => {
                self.push(Role::System, Action::Compile, Self::program_summary(&p));
                self.compiled = Some(p);
                Ok(())
            }
            Err(e) => {
                let e = SessionError::from(e);
                self.push(Role::System, Action::Compile, json!({"ok": false, "error": e}));
                Err(e)
            }
        }
    }

    /// Applies an edit and recompiles differentially. An invalid result
    /// leaves the session untouched; a failed compile is logged and keeps
    /// the previous program.
    pub fn apply_edit(&mut self, op: &EditOp, llm: &dyn ChatModel) -> Result<EditDelta, SessionError> {
        let new_anpl = apply_op(&self.anpl, op)?;
        let diagnostics: Vec<Diagnostic> = validate::validate_sketch(&new_anpl).into_iter().filter(Diagnostic::is_error).collect();
        if !diagnostics.is_empty() {
            return Err(SessionError::SketchInvalid { diagnostics });
        }
        self.push(Role::User, Action::Edit, serde_json::to_value(op).expect("op serializes"));
        let rec = RecordingModel::new(llm);
        let r = match &self.compiled {
            Some(old) => diff::compile_diff_traced(old, &new_anpl, &rec).map(|(p, d, _)| (p, d)),
            None => compiler::compile(&new_anpl, &rec).map(|p| {
                let d = diff::diff(&self.anpl, &new_anpl);
                (p, d)
            }),
        };
        self.push_exchanges(rec.drain());
        match r {
            Ok((p, delta)) => {
                let mut content = Self::program_summary(&p);
                content["delta"] = serde_json::to_value(&delta).expect("delta serializes");
                self.push(Role::System, Action::CompileDiff, content);
                self.constraints.remap(&delta);
                self.anpl = new_anpl;
                self.compiled = Some(p);
                Ok(delta)
            }
            Err(e) => {
                let e = SessionError::from(e);
                self.push(Role::System, Action::CompileDiff, json!({"ok": false, "error": e}));
                Err(e)
            }
        }
    }

    /// Runs `main` on `input`, recording calls of `functions`.
    pub fn trace(&mut self, functions: &[String], input: &Value, harness: &dyn Harness) -> Result<TraceReport, SessionError> {
        let p = self.compiled()?.clone();
        for f in functions {
            if !p.graph.contains(f) {
                return Err(SessionError::UnknownFunction { function: f.clone() });
            }
        }
        self.push(Role::User, Action::Trace, json!({"functions": functions, "input": input}));
        let req = ExecRequest::new(p.target_source.clone(), ENTRY_NAME, vec![input.clone()]).watching(functions.iter().cloned());
        let r = harness.run(&req).map_err(SessionError::from).and_then(|res| match res.status {
            ExecStatus::Ok => Ok(TraceReport {
                output: res.output.unwrap_or(Value::None),
                events: res.events,
                stdout: res.stdout,
            }),
            ExecStatus::Fault => Err(SessionError::RuntimeFault {
                traceback: res.traceback.unwrap_or_default(),
                events: res.events,
            }),
            ExecStatus::Timeout => Err(SessionError::Timeout),
        });
        let content = match &r {
            Ok(report) => json!({"ok": true, "report": report}),
            Err(e) => json!({"ok": false, "error": e}),
        };
        self.push(Role::System, Action::Trace, content);
        r
    }

    pub fn add_constraint(&mut self, c: IoConstraint) -> Result<bool, SessionError> {
        let payload = serde_json::to_value(&c).expect("constraint serializes");
        let added = self.constraints.add(&self.anpl, c)?;
        self.push(Role::User, Action::AddConstraint, payload);
        self.push(Role::System, Action::AddConstraint, json!({"ok": true, "added": added}));
        Ok(added)
    }

    pub fn resynthesize(&mut self, hole_id: &str, llm: &dyn ChatModel, harness: &dyn Harness) -> Result<ResynthOutcome, SessionError> {
        let p = self.compiled()?.clone();
        if p.anpl.hole(hole_id).is_none() {
            return Err(SessionError::UnknownHole { hole_id: hole_id.into() });
        }
        self.push(Role::User, Action::Resynthesize, json!({"hole_id": hole_id}));
        let rec = RecordingModel::new(llm);
        let r = resynth::resynthesize(&p, hole_id, self.constraints.get(hole_id), &rec, harness);
        self.push_exchanges(rec.drain());
        match r {
            Ok(out) => {
                let outcome = ResynthOutcome {
                    selected: out.selected,
                    fill_name: out.program.fill_map[hole_id].clone(),
                    report: out.report,
                };
                let mut content = Self::program_summary(&out.program);
                content["selected"] = json!(outcome.selected);
                content["report"] = json!(outcome.report);
                self.push(Role::System, Action::Resynthesize, content);
                self.compiled = Some(out.program);
                Ok(outcome)
            }
            Err(e) => {
                let e = SessionError::from(e);
                self.push(Role::System, Action::Resynthesize, json!({"ok": false, "error": e}));
                Err(e)
            }
        }
    }

    pub fn check(&mut self, harness: &dyn Harness) -> Result<Verdict, SessionError> {
        let p = self.compiled()?.clone();
        self.push(Role::User, Action::Check, json!({}));
        let r = arc::check(&p, &self.task, harness).map_err(SessionError::from);
        let content = match &r {
            Ok(v) => json!({"ok": true, "verdict": v}),
            Err(e) => json!({"ok": false, "error": e}),
        };
        self.push(Role::System, Action::Check, content);
        r
    }

    pub fn export_log(&self) -> String {
        to_csv(&self.log)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Csv(#[from] CsvSchemaError),
    #[error("row {row}: {message}")]
    Payload { row: usize, message: String },
    #[error("row {row}: {source}")]
    Session { row: usize, source: SessionError },
    #[error("replayed log diverges from the recording at entry {index}")]
    Diverged { index: usize },
}

/// Re-runs every user action of a DARC log against the recorded model
/// answers. The result must log the same entries, timestamps aside.
pub fn replay(csv: &str, harness: &dyn Harness) -> Result<Session, ReplayError> {
    let entries = from_csv(csv)?;
    replay_entries(&entries, harness, system_clock())
}

pub fn replay_entries(entries: &[LogEntry], harness: &dyn Harness, clock: Clock) -> Result<Session, ReplayError> {
    let exchanges: Vec<Exchange> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.action == Action::LlmExchange)
        .map(|(i, e)| {
            let get = |k: &str| e.content.get(k).cloned().unwrap_or(serde_json::Value::Null);
            Ok(Exchange {
                fingerprint: serde_json::from_value(get("fingerprint")).map_err(|m| payload(i, m))?,
                request: serde_json::from_value(get("request")).map_err(|m| payload(i, m))?,
                completions: serde_json::from_value(get("completions")).map_err(|m| payload(i, m))?,
                wall_time: 0.0,
            })
        })
        .collect::<Result<_, ReplayError>>()?;
    let llm = ReplayModel::new(exchanges);

    let mut session: Option<Session> = None;
    for (i, e) in entries.iter().enumerate() {
        if e.role != Role::User {
            continue;
        }
        let row = i + 2;
        let c = &e.content;
        let field = |k: &str| c.get(k).cloned().ok_or_else(|| payload(i, format!("missing `{k}`")));
        let ignore = |_: SessionError| ();
        if e.action == Action::Parse {
            let task_json = field("task")?;
            let task_id = field("task_id")?.as_str().unwrap_or_default().to_string();
            let task = ArcTask::from_json(&task_id, task_json.to_string().as_bytes()).map_err(|m| payload(i, m))?;
            let text = field("anpl")?.as_str().unwrap_or_default().to_string();
            session = Some(Session::open(task, &text, clock.clone()).map_err(|source| ReplayError::Session { row, source })?);
            continue;
        }
        let s = session.as_mut().ok_or_else(|| payload(i, "action before parse"))?;
        match e.action {
            Action::Compile => s.compile(&llm).map_err(ignore).unwrap_or(()),
            Action::Edit => {
                let op: EditOp = serde_json::from_value(c.clone()).map_err(|m| payload(i, m))?;
                s.apply_edit(&op, &llm).map(|_| ()).map_err(ignore).unwrap_or(())
            }
            Action::Trace => {
                let functions: Vec<String> = serde_json::from_value(field("functions")?).map_err(|m| payload(i, m))?;
                let input: Value = serde_json::from_value(field("input")?).map_err(|m| payload(i, m))?;
                s.trace(&functions, &input, harness).map(|_| ()).map_err(ignore).unwrap_or(())
            }
            Action::AddConstraint => {
                let con: IoConstraint = serde_json::from_value(c.clone()).map_err(|m| payload(i, m))?;
                s.add_constraint(con).map_err(|source| ReplayError::Session { row, source })?;
            }
            Action::Resynthesize => {
                let hole = field("hole_id")?.as_str().unwrap_or_default().to_string();
                s.resynthesize(&hole, &llm, harness).map(|_| ()).map_err(ignore).unwrap_or(())
            }
            Action::Check => s.check(harness).map(|_| ()).map_err(ignore).unwrap_or(()),
            other => return Err(payload(i, format!("`{other}` is not a user action"))),
        }
    }
    let s = session.ok_or_else(|| payload(0, "log has no parse action"))?;
    if let Some(index) = (0..entries.len().max(s.log.len())).find(|&k| match (entries.get(k), s.log.get(k)) {
        (Some(a), Some(b)) => !a.same_as(b),
        _ => true,
    }) {
        return Err(ReplayError::Diverged { index });
    }
    Ok(s)
}

fn payload(i: usize, m: impl ToString) -> ReplayError {
    ReplayError::Payload {
        row: i + 2,
        message: m.to_string(),
    }
}
