//! The DARC interaction log and its CSV form.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const CSV_HEADER: [&str; 4] = ["role", "action", "content", "timestamp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    System,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Parse,
    Compile,
    CompileDiff,
    Trace,
    Edit,
    Resynthesize,
    AddConstraint,
    Check,
    LlmExchange,
}

macro_rules! str_enum {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),* }
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s { $($s => Ok(Self::$v),)* other => Err(format!("unknown {} `{other}`", stringify!($t).to_lowercase())) }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(self.as_str()) }
        }
    };
}

str_enum!(Role { User => "user", System => "system", Llm => "llm" });
str_enum!(Action {
    Parse => "parse",
    Compile => "compile",
    CompileDiff => "compile_diff",
    Trace => "trace",
    Edit => "edit",
    Resynthesize => "resynthesize",
    AddConstraint => "add_constraint",
    Check => "check",
    LlmExchange => "llm_exchange",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub role: Role,
    pub action: Action,
    pub content: serde_json::Value,
    /// ISO-8601, UTC.
    pub timestamp: String,
}

impl LogEntry {
    /// Equality ignoring the timestamp.
    pub fn same_as(&self, other: &LogEntry) -> bool {
        self.role == other.role && self.action == other.action && self.content == other.content
    }
}

pub fn logs_equivalent(a: &[LogEntry], b: &[LogEntry]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_as(y))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("row {row}: {message}")]
pub struct CsvSchemaError {
    /// 1-based, the header being row 1.
    pub row: usize,
    pub message: String,
}

pub fn to_csv(entries: &[LogEntry]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for e in entries {
        let content = serde_json::to_string(&e.content).expect("json");
        w.write_record([e.role.as_str(), e.action.as_str(), &content, &e.timestamp])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn from_csv(text: &str) -> Result<Vec<LogEntry>, CsvSchemaError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or(CsvSchemaError {
            row: 1,
            message: "missing header".into(),
        })?
        .map_err(|e| CsvSchemaError {
            row: 1,
            message: e.to_string(),
        })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CsvSchemaError {
            row: 1,
            message: format!("header must be `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rows.enumerate() {
        let row = i + 2;
        let err = |message: String| CsvSchemaError { row, message };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", rec.len())));
        }
        out.push(LogEntry {
            role: rec[0].parse().map_err(err)?,
            action: rec[1].parse().map_err(err)?,
            content: serde_json::from_str(&rec[2]).map_err(|e| err(format!("content is not JSON: {e}")))?,
            timestamp: rec[3].to_string(),
        });
    }
    Ok(out)
}
