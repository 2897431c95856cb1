use super::{check_args, required_text, ModelHandle, ParamSpec, Tool, ToolError, ToolSpec, IMG_SYSTEM_PROMPT};
use crate::dsl::ToolArgs;
use crate::gateway::{ChatMessage, ContentPart};
use crate::problem::Problem;
use std::sync::Arc;

/// Forwards one problem image and a question to a vision model.
pub struct ImageAnalyzer {
    problem: Arc<Problem>,
    model: ModelHandle,
}

impl ImageAnalyzer {
    pub fn new(problem: Arc<Problem>, model: ModelHandle) -> Self {
        ImageAnalyzer { problem, model }
    }

    pub fn analyze(&self, asset_id: &str, question: &str) -> Result<String, ToolError> {
        if question.trim().is_empty() {
            return Err(ToolError::InvalidArgument {
                name: "question".into(),
                reason: "must not be empty".into(),
            });
        }
        let asset = self
            .problem
            .asset(asset_id)
            .ok_or_else(|| ToolError::UnknownAsset(asset_id.into()))?;
        let bytes = asset
            .read_bytes()
            .map_err(|e| ToolError::Failure(format!("cannot read asset `{asset_id}`: {e}")))?;
        let messages = [
            ChatMessage::system(IMG_SYSTEM_PROMPT),
            ChatMessage::user(vec![
                ContentPart::image(asset_id, bytes, asset.media_kind)?,
                ContentPart::text(question),
            ])?,
        ];
        Ok(self.model.backend.generate(&messages, &self.model.config)?.text)
    }
}

impl Tool for ImageAnalyzer {
    fn spec(&self) -> ToolSpec {
        ToolSpec {
            name: "image_analyzer".into(),
            description: "Ask a vision expert model a question about one problem image, such as reading \
                          a value off a plot; returns its answer as text."
                .into(),
            params: vec![
                ParamSpec::required("image", "asset id"),
                ParamSpec::required("question", "text"),
            ],
        }
    }

    fn call(&self, args: &ToolArgs) -> Result<String, ToolError> {
        check_args(&self.spec(), args)?;
        self.analyze(required_text(args, "image")?, required_text(args, "question")?)
    }
}
