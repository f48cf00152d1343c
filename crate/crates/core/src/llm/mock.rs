use super::{check_count, ChatModel, ChatRequest, ChatResponse, LlmError};
use parking_lot::Mutex;
use std::collections::{HashMap, VecDeque};

type Responder = Box<dyn Fn(&ChatRequest) -> Option<Vec<String>> + Send + Sync>;

/// Scripted model. Lookup order: exact fingerprint, then the queue of
/// sequential replies, then the responder closure. Every request is logged.
#[derive(Default)]
pub struct MockModel {
    scripted: HashMap<String, Vec<String>>,
    queue: Mutex<VecDeque<Vec<String>>>,
    responder: Option<Responder>,
    calls: Mutex<Vec<ChatRequest>>,
}

impl MockModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn script(mut self, fingerprint: impl Into<String>, completions: Vec<String>) -> Self {
        self.scripted.insert(fingerprint.into(), completions);
        self
    }

    /// Replies handed out in order, one per request.
    pub fn with_sequence<I, S>(self, replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        {
            let mut q = self.queue.lock();
            q.extend(replies.into_iter().map(|r| vec![r.into()]));
        }
        self
    }

    /// Sequential replies that each carry several completions.
    pub fn with_batches(self, batches: Vec<Vec<String>>) -> Self {
        self.queue.lock().extend(batches);
        self
    }

    pub fn with_responder(mut self, f: impl Fn(&ChatRequest) -> Option<Vec<String>> + Send + Sync + 'static) -> Self {
        self.responder = Some(Box::new(f));
        self
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().len()
    }

    pub fn clear_calls(&self) {
        self.calls.lock().clear();
    }
}

impl ChatModel for MockModel {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls.lock().push(req.clone());
        let fp = req.fingerprint();
        if let Some(c) = self.scripted.get(&fp) {
            return check_count(req, c.clone());
        }
        if let Some(c) = self.queue.lock().pop_front() {
            return check_count(req, c);
        }
        if let Some(c) = self.responder.as_ref().and_then(|f| f(req)) {
            return check_count(req, c);
        }
        Err(LlmError::ScriptMiss { fingerprint: fp })
    }
}
