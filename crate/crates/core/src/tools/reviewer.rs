use super::{
    check_args, required_text, review_instruction, text_arg, ModelHandle, ParamSpec, Tool, ToolError,
    ToolSpec, NEUTRAL_REVIEW_SYSTEM_PROMPT, REVIEW_SYSTEM_PROMPT,
};
use crate::dsl::ToolArgs;
use crate::gateway::{ChatMessage, ContentPart};
use crate::problem::Problem;

/// The full problem as message parts: the markdown statement, then each
/// asset as a label followed by its image.
pub fn problem_content(problem: &Problem) -> Result<Vec<ContentPart>, ToolError> {
    let mut parts = vec![ContentPart::text(problem.render_markdown())];
    for asset in &problem.assets {
        let bytes = asset
            .read_bytes()
            .map_err(|e| ToolError::Failure(format!("cannot read asset `{}`: {e}", asset.id)))?;
        parts.push(ContentPart::text(format!("Image `{}`:", asset.id)));
        parts.push(ContentPart::image(&asset.id, bytes, asset.media_kind)?);
    }
    Ok(parts)
}

/// Sends a draft solution with the original problem to a critical reviewer.
pub struct AnswerReviewer {
    model: ModelHandle,
    problem_content: Vec<ContentPart>,
    neutral: bool,
}

impl AnswerReviewer {
    pub fn new(model: ModelHandle, problem_content: Vec<ContentPart>, neutral: bool) -> Self {
        AnswerReviewer {
            model,
            problem_content,
            neutral,
        }
    }

    pub fn system_prompt(&self) -> &'static str {
        if self.neutral {
            NEUTRAL_REVIEW_SYSTEM_PROMPT
        } else {
            REVIEW_SYSTEM_PROMPT
        }
    }

    pub fn review(&self, solution: &str, note: &str) -> Result<String, ToolError> {
        if solution.trim().is_empty() {
            return Err(ToolError::InvalidArgument {
                name: "solution".into(),
                reason: "must not be empty".into(),
            });
        }
        let mut content = vec![ContentPart::text(review_instruction(solution, note))];
        content.extend(self.problem_content.iter().cloned());
        let messages = [ChatMessage::system(self.system_prompt()), ChatMessage::user(content)?];
        Ok(self.model.backend.generate(&messages, &self.model.config)?.text)
    }
}

impl Tool for AnswerReviewer {
    fn spec(&self) -> ToolSpec {
        ToolSpec {
            name: "answer_reviewer".into(),
            description: "Have a strict physics reviewer check a draft solution against the full problem; \
                          returns the review."
                .into(),
            params: vec![
                ParamSpec::required("solution", "text"),
                ParamSpec::optional("note", "text"),
            ],
        }
    }

    fn call(&self, args: &ToolArgs) -> Result<String, ToolError> {
        check_args(&self.spec(), args)?;
        self.review(
            required_text(args, "solution")?,
            text_arg(args, "note")?.unwrap_or(""),
        )
    }
}
