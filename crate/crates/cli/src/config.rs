//! Harness configuration, read from TOML.
//!
//! Credentials are never part of the file: the model key comes from
//! `AGENT_MODEL_API_KEY` and the knowledge-engine id from `WOLFRAM_APP_ID`.
//! Every table rejects unknown keys, so a stray `api_key = ...` is an error
//! rather than a silently persisted secret.

use physagent_core::agent::RunPolicy;
use physagent_core::dsl::ExecBudget;
use physagent_core::gateway::ModelConfig;
use physagent_core::tools::{parse_tool_names, DEFAULT_SUMMARY_CHARS, DEFAULT_WOLFRAM_ENDPOINT, TOOL_NAMES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub const DEFAULT_CHAT_ENDPOINT: &str = "https://generativelanguage.googleapis.com/v1beta/openai/chat/completions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub endpoint: String,
    pub model: ModelConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            endpoint: DEFAULT_CHAT_ENDPOINT.into(),
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewerSection {
    pub endpoint: String,
    pub model: ModelConfig,
    /// Use the reviewer prompt variant that does not presume an error.
    pub neutral_prompt: bool,
}

impl Default for ReviewerSection {
    fn default() -> Self {
        ReviewerSection {
            endpoint: DEFAULT_CHAT_ENDPOINT.into(),
            model: ModelConfig::default(),
            neutral_prompt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolsSection {
    pub enabled: Vec<String>,
    /// Character cap for summaries.
    pub summary_chars: usize,
}

impl Default for ToolsSection {
    fn default() -> Self {
        ToolsSection {
            enabled: TOOL_NAMES.iter().map(|s| s.to_string()).collect(),
            summary_chars: DEFAULT_SUMMARY_CHARS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WolframSection {
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Serve queries from a recordings file instead of the network.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recordings: Option<PathBuf>,
}

impl Default for WolframSection {
    fn default() -> Self {
        WolframSection {
            endpoint: DEFAULT_WOLFRAM_ENDPOINT.into(),
            timeout_ms: 60_000,
            recordings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub runs_root: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            runs_root: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub manager: ModelSection,
    pub vision: ModelSection,
    pub reviewer: ReviewerSection,
    pub summarizer: ModelSection,
    pub judge: ModelSection,
    pub tools: ToolsSection,
    pub policy: RunPolicy,
    pub budget: ExecBudget,
    pub wolfram: WolframSection,
    pub paths: PathsSection,
}

impl HarnessConfig {
    /// Parse and validate. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: HarnessConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        if self.paths.runs_root.is_relative() {
            self.paths.runs_root = base.join(&self.paths.runs_root);
        }
        if let Some(rec) = &self.wolfram.recordings {
            if rec.is_relative() {
                self.wolfram.recordings = Some(base.join(rec));
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, m) in [
            ("manager", &self.manager.model),
            ("vision", &self.vision.model),
            ("reviewer", &self.reviewer.model),
            ("summarizer", &self.summarizer.model),
            ("judge", &self.judge.model),
        ] {
            m.validate().map_err(|e| format!("[{name}.model] {e}"))?;
        }
        parse_tool_names(&self.tools.enabled).map_err(|e| format!("[tools] {e}"))?;
        if self.tools.summary_chars == 0 {
            return Err("[tools] summary_chars must be at least 1".into());
        }
        self.policy.validate().map_err(|e| format!("[policy] {e}"))?;
        self.budget.validate().map_err(|e| format!("[budget] {e}"))?;
        if self.wolfram.timeout_ms == 0 {
            return Err("[wolfram] timeout_ms must be at least 1".into());
        }
        Ok(())
    }

    pub fn enabled_tools(&self) -> BTreeSet<String> {
        self.tools.enabled.iter().cloned().collect()
    }

    /// Hex SHA-256 of the configuration as JSON with sorted keys, so the value
    /// does not depend on the order keys were written in.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("json serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
