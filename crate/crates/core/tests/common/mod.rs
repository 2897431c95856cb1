#![allow(dead_code)]

use physagent_core::gateway::{ChatBackend, ModelConfig};
use physagent_core::problem::{load_problem, Problem};
use physagent_core::tools::{
    load_recordings, ModelHandle, RecordedTransport, ToolDeps, WolframTool, DEFAULT_SUMMARY_CHARS,
    DEFAULT_WOLFRAM_ENDPOINT, TOOL_NAMES,
};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn toy_problem() -> Arc<Problem> {
    Arc::new(load_problem(fixture("problems/toy")).unwrap())
}

pub fn recorded_wolfram() -> Arc<WolframTool> {
    let recordings = load_recordings(fixture("wolfram/recordings.jsonl")).unwrap();
    Arc::new(WolframTool::new(
        DEFAULT_WOLFRAM_ENDPOINT,
        Some("fixture-app".into()),
        Arc::new(RecordedTransport::new(recordings)),
    ))
}

pub fn handle(backend: Arc<dyn ChatBackend>) -> ModelHandle {
    ModelHandle::new(backend, ModelConfig::default())
}

/// Every tool model served by the same backend, so one cassette covers a run.
pub fn deps(problem: Arc<Problem>, backend: Arc<dyn ChatBackend>) -> ToolDeps {
    ToolDeps {
        problem,
        vision: handle(backend.clone()),
        reviewer: handle(backend.clone()),
        summarizer: handle(backend),
        summary_chars: DEFAULT_SUMMARY_CHARS,
        neutral_review_prompt: false,
        wolfram: recorded_wolfram(),
    }
}

pub fn names(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub fn all_tools() -> BTreeSet<String> {
    names(&TOOL_NAMES)
}
