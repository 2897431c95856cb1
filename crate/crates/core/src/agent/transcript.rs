//! Line-delimited run transcripts, one record per phase.

use crate::gateway::TokenUsage;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    System,
    Reasoning,
    Action,
    Observation,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub run_id: String,
    pub step_index: usize,
    pub phase: Phase,
    pub payload: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_usage: Option<TokenUsage>,
    /// Absent in transcripts passed through [`strip_wallclock`].
    #[serde(default)]
    pub wallclock_ms: u64,
}

pub fn to_jsonl(records: &[TranscriptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TranscriptRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("transcript line {}: {e}", i + 1)))
        .collect()
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<TranscriptRecord>, String> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_jsonl(&text)
}

/// Transcript text with every `wallclock_ms` field removed, for comparing
/// runs that differ only in timing.
pub fn strip_wallclock(jsonl: &str) -> String {
    let mut out = String::new();
    for line in jsonl.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<serde_json::Value>(line) {
            Ok(mut v) => {
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("wallclock_ms");
                }
                out.push_str(&v.to_string());
            }
            Err(_) => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ms: u64) -> TranscriptRecord {
        TranscriptRecord {
            run_id: "run-01".into(),
            step_index: 0,
            phase: Phase::Reasoning,
            payload: "think".into(),
            token_usage: Some(TokenUsage::default()),
            wallclock_ms: ms,
        }
    }

    #[test]
    fn strip_removes_only_timing() {
        let a = to_jsonl(&[rec(5)]);
        let b = to_jsonl(&[rec(900)]);
        assert_ne!(a, b);
        assert_eq!(strip_wallclock(&a), strip_wallclock(&b));
        assert!(strip_wallclock(&a).contains("\"phase\":\"reasoning\""));
    }

    #[test]
    fn round_trip() {
        let recs = vec![rec(1), rec(2)];
        assert_eq!(parse_jsonl(&to_jsonl(&recs)).unwrap(), recs);
    }
}
