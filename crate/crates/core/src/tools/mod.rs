//! Tools callable from action scripts, and the registry that gates them.

mod image;
mod prompts;
mod reviewer;
mod summarizer;
mod wolfram;

pub use image::ImageAnalyzer;
pub use prompts::{
    review_instruction, IMG_SYSTEM_PROMPT, NEUTRAL_REVIEW_SYSTEM_PROMPT, REVIEW_SYSTEM_PROMPT,
    SUMMARY_SYSTEM_PROMPT,
};
pub use reviewer::{problem_content, AnswerReviewer};
pub use summarizer::{Summarizer, DEFAULT_SUMMARY_CHARS};
pub use wolfram::{
    load_recordings, RecordedTransport, WolframRecording, WolframTool, DEFAULT_WOLFRAM_ENDPOINT,
    WOLFRAM_APP_ID_ENV,
};

use crate::dsl::{ToolArgs, Value};
use crate::gateway::{ChatBackend, GatewayError, ModelConfig};
use crate::problem::Problem;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Every known tool, in the order specs are rendered to the manager.
pub const TOOL_NAMES: [&str; 4] = ["image_analyzer", "answer_reviewer", "summarize", "wolfram_query"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    /// Semantic type shown to the model, e.g. `asset id` or `text`.
    pub kind: String,
    pub required: bool,
}

impl ParamSpec {
    pub fn required(name: &str, kind: &str) -> Self {
        ParamSpec {
            name: name.into(),
            kind: kind.into(),
            required: true,
        }
    }

    pub fn optional(name: &str, kind: &str) -> Self {
        ParamSpec {
            required: false,
            ..Self::required(name, kind)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl fmt::Display for ToolSpec {
    /// `name(a: text, b?: text)`: description
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let opt = if p.required { "" } else { "?" };
            write!(f, "{}{opt}: {}", p.name, p.kind)?;
        }
        write!(f, "): {}", self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolError {
    #[error("missing required argument `{0}`")]
    MissingArgument(String),
    #[error("unexpected argument `{0}`")]
    UnexpectedArgument(String),
    #[error("argument `{name}` {reason}")]
    InvalidArgument { name: String, reason: String },
    #[error("UnknownAsset: `{0}`")]
    UnknownAsset(String),
    #[error("AuthFailure: {0}")]
    AuthFailure(String),
    #[error("NoAnswer: the knowledge engine has no result for this query")]
    NoAnswer,
    #[error("{0}")]
    Backend(#[from] GatewayError),
    #[error("{0}")]
    Failure(String),
}

/// A callable tool. Implementations are stateless between calls.
pub trait Tool: Send + Sync {
    fn spec(&self) -> ToolSpec;
    fn call(&self, args: &ToolArgs) -> Result<String, ToolError>;
}

/// Reject arguments the spec does not declare and check required ones.
pub fn check_args(spec: &ToolSpec, args: &ToolArgs) -> Result<(), ToolError> {
    if let Some(extra) = args
        .keys()
        .find(|k| !spec.params.iter().any(|p| &p.name == *k))
    {
        return Err(ToolError::UnexpectedArgument(extra.clone()));
    }
    if let Some(missing) = spec
        .params
        .iter()
        .find(|p| p.required && !args.contains_key(&p.name))
    {
        return Err(ToolError::MissingArgument(missing.name.clone()));
    }
    Ok(())
}

/// A string argument. Non-string values are rejected so that `1e3` never
/// silently becomes a question.
pub fn text_arg<'a>(args: &'a ToolArgs, name: &str) -> Result<Option<&'a str>, ToolError> {
    match args.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Str(s)) => Ok(Some(s)),
        Some(_) => Err(ToolError::InvalidArgument {
            name: name.into(),
            reason: "must be a string".into(),
        }),
    }
}

pub fn required_text<'a>(args: &'a ToolArgs, name: &str) -> Result<&'a str, ToolError> {
    text_arg(args, name)?.ok_or_else(|| ToolError::MissingArgument(name.into()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("UnknownToolName: `{0}` (known: image_analyzer, answer_reviewer, summarize, wolfram_query)")]
    UnknownToolName(String),
    #[error("duplicate tool name `{0}`")]
    DuplicateName(String),
    #[error("cannot prepare problem content: {0}")]
    ProblemContent(String),
}

/// A backend paired with the model settings used for it.
#[derive(Clone)]
pub struct ModelHandle {
    pub backend: Arc<dyn ChatBackend>,
    pub config: ModelConfig,
}

impl ModelHandle {
    pub fn new(backend: Arc<dyn ChatBackend>, config: ModelConfig) -> Self {
        ModelHandle { backend, config }
    }
}

/// What the built-in tools need to run.
#[derive(Clone)]
pub struct ToolDeps {
    pub problem: Arc<Problem>,
    pub vision: ModelHandle,
    pub reviewer: ModelHandle,
    pub summarizer: ModelHandle,
    pub summary_chars: usize,
    pub neutral_review_prompt: bool,
    pub wolfram: Arc<WolframTool>,
}

impl ToolDeps {
    pub fn summarizer(&self) -> Summarizer {
        Summarizer::new(self.summarizer.clone(), self.summary_chars)
    }
}

/// Tools plus the subset currently enabled. Lookups for disabled tools fail.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    tools: Vec<Arc<dyn Tool>>,
    enabled: BTreeSet<String>,
}

impl fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolRegistry").field("enabled", &self.enabled_names()).finish()
    }
}

impl ToolRegistry {
    /// A registry with nothing enabled.
    pub fn empty() -> Self {
        Self::default()
    }

    /// All given tools, enabled, in the given order.
    pub fn from_tools(tools: Vec<Arc<dyn Tool>>) -> Result<Self, RegistryError> {
        let mut enabled = BTreeSet::new();
        for t in &tools {
            if !enabled.insert(t.spec().name) {
                return Err(RegistryError::DuplicateName(t.spec().name));
            }
        }
        Ok(ToolRegistry { tools, enabled })
    }

    pub fn lookup(&self, name: &str) -> Option<Arc<dyn Tool>> {
        if !self.enabled.contains(name) {
            return None;
        }
        self.tools.iter().find(|t| t.spec().name == name).cloned()
    }

    /// Specs of enabled tools in registry order.
    pub fn specs(&self) -> Vec<ToolSpec> {
        self.tools
            .iter()
            .map(|t| t.spec())
            .filter(|s| self.enabled.contains(&s.name))
            .collect()
    }

    pub fn enabled_names(&self) -> Vec<String> {
        self.specs().into_iter().map(|s| s.name).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.enabled.is_empty()
    }
}

/// Parse tool names, rejecting unknown ones.
pub fn parse_tool_names<I, S>(names: I) -> Result<BTreeSet<String>, RegistryError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    names
        .into_iter()
        .map(|n| {
            let n = n.as_ref();
            if TOOL_NAMES.contains(&n) {
                Ok(n.to_string())
            } else {
                Err(RegistryError::UnknownToolName(n.to_string()))
            }
        })
        .collect()
}

/// Build the registry of built-in tools with exactly `enabled` reachable.
pub fn registry_build(enabled: &BTreeSet<String>, deps: &ToolDeps) -> Result<ToolRegistry, RegistryError> {
    parse_tool_names(enabled)?;
    let tools: Vec<Arc<dyn Tool>> = vec![
        Arc::new(ImageAnalyzer::new(deps.problem.clone(), deps.vision.clone())),
        Arc::new(AnswerReviewer::new(
            deps.reviewer.clone(),
            problem_content(&deps.problem)
                .map_err(|e| RegistryError::ProblemContent(e.to_string()))?,
            deps.neutral_review_prompt,
        )),
        Arc::new(deps.summarizer()),
        deps.wolfram.clone(),
    ];
    Ok(ToolRegistry {
        tools,
        enabled: enabled.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Named(&'static str);
    impl Tool for Named {
        fn spec(&self) -> ToolSpec {
            ToolSpec {
                name: self.0.into(),
                description: "test".into(),
                params: vec![ParamSpec::required("x", "text"), ParamSpec::optional("y", "text")],
            }
        }
        fn call(&self, _args: &ToolArgs) -> Result<String, ToolError> {
            Ok(self.0.into())
        }
    }

    #[test]
    fn spec_display() {
        assert_eq!(Named("t").spec().to_string(), "t(x: text, y?: text): test");
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(ToolRegistry::from_tools(vec![Arc::new(Named("a")), Arc::new(Named("a"))]).is_err());
    }

    #[test]
    fn unknown_names_rejected() {
        assert_eq!(
            parse_tool_names(["summarize", "fly"]),
            Err(RegistryError::UnknownToolName("fly".into()))
        );
    }

    #[test]
    fn argument_checks() {
        let spec = Named("t").spec();
        let mut args = ToolArgs::new();
        assert_eq!(check_args(&spec, &args), Err(ToolError::MissingArgument("x".into())));
        args.insert("x".into(), Value::Str("v".into()));
        assert_eq!(check_args(&spec, &args), Ok(()));
        args.insert("z".into(), Value::Null);
        assert_eq!(check_args(&spec, &args), Err(ToolError::UnexpectedArgument("z".into())));
        let mut num = ToolArgs::new();
        num.insert("x".into(), Value::Num("1".into()));
        assert!(matches!(required_text(&num, "x"), Err(ToolError::InvalidArgument { .. })));
    }
}
