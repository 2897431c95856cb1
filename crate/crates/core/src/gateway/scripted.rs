use super::{check_conversation, ChatBackend, ChatMessage, Completion, GatewayError, ModelConfig};
use std::collections::VecDeque;
use std::sync::Mutex;

/// Answers with a fixed list of responses in order and keeps every
/// conversation it was sent. Useful for tests and offline demos.
pub struct ScriptedBackend {
    responses: Mutex<VecDeque<Result<String, GatewayError>>>,
    calls: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(responses.into_iter().map(|r| Ok(r.into())))
    }

    pub fn with_results(results: impl IntoIterator<Item = Result<String, GatewayError>>) -> Self {
        ScriptedBackend {
            responses: Mutex::new(results.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<Vec<ChatMessage>> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn generate(&self, messages: &[ChatMessage], _cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        check_conversation(messages)?;
        let n = {
            let mut calls = self.calls.lock().unwrap();
            calls.push(messages.to_vec());
            calls.len()
        };
        match self.responses.lock().unwrap().pop_front() {
            Some(r) => r.map(Completion::text),
            None => Err(GatewayError::CassetteExhausted(n - 1)),
        }
    }
}
