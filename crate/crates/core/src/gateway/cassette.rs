//! Line-delimited cassettes of model responses keyed by prompt digest.
//!
//! One JSON record per model call:
//! `{"index":0,"prompt_digest":"<hex>","response":"<text>"}`.

use super::{canonical_digest, check_conversation, ChatBackend, ChatMessage, Completion, GatewayError, ModelConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CassetteMode {
    Record,
    /// Entries are consumed in order and each digest must match.
    ReplayStrict,
    /// The first unused entry with a matching digest is served; failing
    /// that, the next unused entry in order.
    ReplayLenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub index: usize,
    pub prompt_digest: String,
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CassetteError {
    #[error("cannot access cassette: {0}")]
    Io(#[from] std::io::Error),
    #[error("cassette line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl Cassette {
    /// Cassette with the given responses and blank digests, for hand-authored
    /// lenient replay.
    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Cassette {
            entries: responses
                .into_iter()
                .enumerate()
                .map(|(index, r)| CassetteEntry {
                    index,
                    prompt_digest: String::new(),
                    response: r.into(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CassetteError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry =
                serde_json::from_str(line).map_err(|e| CassetteError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(Cassette { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CassetteError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CassetteError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

struct ReplayState {
    used: Vec<bool>,
    cursor: usize,
    digest_misses: usize,
}

/// Serves responses from a cassette. Access is serialized per backend, so one
/// instance should back exactly one run.
pub struct ReplayBackend {
    cassette: Cassette,
    mode: CassetteMode,
    state: Mutex<ReplayState>,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette, mode: CassetteMode) -> Self {
        assert!(mode != CassetteMode::Record, "use RecordingBackend to record");
        let n = cassette.entries.len();
        ReplayBackend {
            cassette,
            mode,
            state: Mutex::new(ReplayState {
                used: vec![false; n],
                cursor: 0,
                digest_misses: 0,
            }),
        }
    }

    pub fn strict(cassette: Cassette) -> Self {
        Self::new(cassette, CassetteMode::ReplayStrict)
    }

    pub fn lenient(cassette: Cassette) -> Self {
        Self::new(cassette, CassetteMode::ReplayLenient)
    }

    /// Entries consumed so far.
    pub fn consumed(&self) -> usize {
        self.state.lock().unwrap().used.iter().filter(|u| **u).count()
    }

    /// Lenient-mode lookups that fell back to order because no digest matched.
    pub fn digest_misses(&self) -> usize {
        self.state.lock().unwrap().digest_misses
    }
}

impl ChatBackend for ReplayBackend {
    fn generate(&self, messages: &[ChatMessage], _cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        check_conversation(messages)?;
        let digest = canonical_digest(messages);
        let mut st = self.state.lock().unwrap();
        let entries = &self.cassette.entries;
        let pick = match self.mode {
            CassetteMode::ReplayStrict => {
                let i = st.cursor;
                let entry = entries
                    .get(i)
                    .ok_or(GatewayError::CassetteExhausted(entries.len()))?;
                if entry.prompt_digest != digest {
                    return Err(GatewayError::CassetteMismatch {
                        index: i,
                        recorded: entry.prompt_digest.clone(),
                        actual: digest,
                    });
                }
                i
            }
            _ => {
                let by_digest = (0..entries.len())
                    .find(|&i| !st.used[i] && entries[i].prompt_digest == digest);
                match by_digest {
                    Some(i) => i,
                    None => {
                        let i = (st.cursor..entries.len())
                            .find(|&i| !st.used[i])
                            .ok_or(GatewayError::CassetteExhausted(entries.len()))?;
                        if !entries[i].prompt_digest.is_empty() {
                            st.digest_misses += 1;
                        }
                        i
                    }
                }
            }
        };
        st.used[pick] = true;
        while st.cursor < entries.len() && st.used[st.cursor] {
            st.cursor += 1;
        }
        Ok(Completion::text(entries[pick].response.clone()))
    }
}

/// Passes calls through to another backend and records every exchange.
pub struct RecordingBackend {
    inner: Arc<dyn ChatBackend>,
    recorded: Mutex<Vec<CassetteEntry>>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn ChatBackend>) -> Self {
        RecordingBackend {
            inner,
            recorded: Mutex::new(Vec::new()),
        }
    }

    pub fn cassette(&self) -> Cassette {
        Cassette {
            entries: self.recorded.lock().unwrap().clone(),
        }
    }
}

impl ChatBackend for RecordingBackend {
    fn generate(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        let completion = self.inner.generate(messages, cfg)?;
        let mut rec = self.recorded.lock().unwrap();
        let index = rec.len();
        rec.push(CassetteEntry {
            index,
            prompt_digest: canonical_digest(messages),
            response: completion.text.clone(),
        });
        Ok(completion)
    }
}
