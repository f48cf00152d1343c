use super::{check_count, ChatModel, ChatRequest, ChatResponse, LlmError};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::Instant;

/// One recorded request and its completions; a line of the JSONL record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub fingerprint: String,
    pub request: ChatRequest,
    pub completions: Vec<String>,
    /// Seconds spent waiting for the provider.
    pub wall_time: f64,
}

impl Exchange {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("exchange serializes")
    }
}

/// Passes requests through and keeps every successful exchange.
pub struct RecordingModel<M> {
    inner: M,
    exchanges: Mutex<Vec<Exchange>>,
    sink: Option<Mutex<Box<dyn Write + Send>>>,
}

impl<M: ChatModel> RecordingModel<M> {
    pub fn new(inner: M) -> Self {
        RecordingModel {
            inner,
            exchanges: Mutex::new(Vec::new()),
            sink: None,
        }
    }

    /// Also appends each exchange as a JSON line to `sink`.
    pub fn with_sink(mut self, sink: impl Write + Send + 'static) -> Self {
        self.sink = Some(Mutex::new(Box::new(sink)));
        self
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.exchanges.lock().clone()
    }

    /// Removes and returns the exchanges recorded so far.
    pub fn drain(&self) -> Vec<Exchange> {
        std::mem::take(&mut *self.exchanges.lock())
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: ChatModel> ChatModel for RecordingModel<M> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let t0 = Instant::now();
        let resp = self.inner.complete(req)?;
        let ex = Exchange {
            fingerprint: resp.request_fingerprint.clone(),
            request: req.clone(),
            completions: resp.completions.clone(),
            wall_time: t0.elapsed().as_secs_f64(),
        };
        if let Some(sink) = &self.sink {
            let mut w = sink.lock();
            let _ = writeln!(w, "{}", ex.to_json_line());
            let _ = w.flush();
        }
        self.exchanges.lock().push(ex);
        Ok(resp)
    }
}

/// Answers with recorded completions, first-in first-out per fingerprint.
/// Unknown requests go to the fallback model when one is set and are a
/// [`LlmError::ScriptMiss`] otherwise.
pub struct ReplayModel {
    recorded: Mutex<HashMap<String, VecDeque<Vec<String>>>>,
    fallback: Option<Arc<dyn ChatModel>>,
}

impl ReplayModel {
    pub fn new(exchanges: impl IntoIterator<Item = Exchange>) -> Self {
        let mut recorded: HashMap<String, VecDeque<Vec<String>>> = HashMap::new();
        for ex in exchanges {
            recorded.entry(ex.fingerprint).or_default().push_back(ex.completions);
        }
        ReplayModel {
            recorded: Mutex::new(recorded),
            fallback: None,
        }
    }

    pub fn with_fallback(mut self, model: Arc<dyn ChatModel>) -> Self {
        self.fallback = Some(model);
        self
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, serde_json::Error> {
        let mut exchanges = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(serde_json::Error::io)?;
            if line.trim().is_empty() {
                continue;
            }
            exchanges.push(serde_json::from_str(&line)?);
        }
        Ok(ReplayModel::new(exchanges))
    }

    /// Recorded responses not yet handed out.
    pub fn remaining(&self) -> usize {
        self.recorded.lock().values().map(VecDeque::len).sum()
    }
}

impl ChatModel for ReplayModel {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let fp = req.fingerprint();
        let hit = self.recorded.lock().get_mut(&fp).and_then(VecDeque::pop_front);
        match hit {
            Some(c) => check_count(req, c),
            None => match &self.fallback {
                Some(f) => f.complete(req),
                None => Err(LlmError::ScriptMiss { fingerprint: fp }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::MockModel;

    #[test]
    fn record_then_replay() {
        let rec = RecordingModel::new(MockModel::new().with_sequence(["a", "b"]));
        let r1 = ChatRequest::new("s", "one", 0.0, 1);
        let r2 = ChatRequest::new("s", "one", 0.1, 1);
        rec.complete(&r1).unwrap();
        rec.complete(&r2).unwrap();
        let lines: String = rec.exchanges().iter().map(|e| e.to_json_line() + "\n").collect();
        let replay = ReplayModel::from_jsonl(lines.as_bytes()).unwrap();
        assert_eq!(replay.complete(&r2).unwrap().completions, ["b"]);
        assert_eq!(replay.complete(&r1).unwrap().completions, ["a"]);
        assert!(matches!(replay.complete(&r1), Err(LlmError::ScriptMiss { .. })));
    }

    #[test]
    fn jsonl_fields() {
        let rec = RecordingModel::new(MockModel::new().with_sequence(["x"]));
        rec.complete(&ChatRequest::new("s", "u", 0.0, 1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rec.exchanges()[0].to_json_line()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["completions", "fingerprint", "request", "wall_time"]);
        assert_eq!(v["request"]["max_tokens"], 1024);
    }
}
