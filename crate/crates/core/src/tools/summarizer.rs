use super::prompts::summary_instruction;
use super::{check_args, required_text, ModelHandle, ParamSpec, Tool, ToolError, ToolSpec, SUMMARY_SYSTEM_PROMPT};
use crate::dsl::ToolArgs;
use crate::gateway::ChatMessage;

pub const DEFAULT_SUMMARY_CHARS: usize = 4000;

/// Compacts trajectory text into a bounded summary.
#[derive(Clone)]
pub struct Summarizer {
    model: ModelHandle,
    max_chars: usize,
}

impl Summarizer {
    pub fn new(model: ModelHandle, max_chars: usize) -> Self {
        Summarizer { model, max_chars }
    }

    pub fn max_chars(&self) -> usize {
        self.max_chars
    }

    /// Empty input summarizes to "" without a model call. Output longer than
    /// the budget is cut to it.
    pub fn summarize(&self, trajectory: &str) -> Result<String, ToolError> {
        if trajectory.trim().is_empty() {
            return Ok(String::new());
        }
        let messages = [
            ChatMessage::system(SUMMARY_SYSTEM_PROMPT),
            ChatMessage::user_text(summary_instruction(trajectory, self.max_chars)),
        ];
        let text = self.model.backend.generate(&messages, &self.model.config)?.text;
        Ok(match text.char_indices().nth(self.max_chars) {
            Some((i, _)) => text[..i].to_string(),
            None => text,
        })
    }
}

impl Tool for Summarizer {
    fn spec(&self) -> ToolSpec {
        ToolSpec {
            name: "summarize".into(),
            description: "Condense progress notes into a short summary of established results, formulas, \
                          values and pending sub-questions."
                .into(),
            params: vec![ParamSpec::required("text", "text")],
        }
    }

    fn call(&self, args: &ToolArgs) -> Result<String, ToolError> {
        check_args(&self.spec(), args)?;
        self.summarize(required_text(args, "text")?)
    }
}
