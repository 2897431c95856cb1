//! Chat-model access: message types, the backend trait, prompt digests,
//! cassette record/replay, and the live HTTP backend.

mod cassette;
mod live;
mod scripted;
mod transport;

pub use cassette::{Cassette, CassetteEntry, CassetteError, CassetteMode, RecordingBackend, ReplayBackend};
pub use live::{LiveBackend, API_KEY_ENV};
pub use scripted::ScriptedBackend;
pub use transport::{HttpMethod, HttpRequest, HttpResponse, ReqwestTransport, Transport, TransportError};

use crate::problem::MediaKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentPart {
    Text(String),
    Image {
        asset_id: String,
        payload: Arc<[u8]>,
        media_kind: MediaKind,
    },
}

impl ContentPart {
    pub fn text(text: impl Into<String>) -> Self {
        ContentPart::Text(text.into())
    }

    /// An image part. The payload must be non-empty and carry the file
    /// signature of `media_kind`.
    pub fn image(
        asset_id: impl Into<String>,
        payload: impl Into<Arc<[u8]>>,
        media_kind: MediaKind,
    ) -> Result<Self, GatewayError> {
        let asset_id = asset_id.into();
        let payload = payload.into();
        if payload.is_empty() {
            return Err(GatewayError::InvalidMessage(format!(
                "image `{asset_id}` has an empty payload"
            )));
        }
        if !media_kind.matches_magic(&payload) {
            return Err(GatewayError::InvalidMessage(format!(
                "image `{asset_id}` is not a valid {media_kind} file"
            )));
        }
        Ok(ContentPart::Image {
            asset_id,
            payload,
            media_kind,
        })
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ContentPart::Text(t) => Some(t),
            ContentPart::Image { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: Role,
    pub parts: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            parts: vec![ContentPart::Text(text.into())],
        }
    }

    pub fn user_text(text: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            parts: vec![ContentPart::Text(text.into())],
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            parts: vec![ContentPart::Text(text.into())],
        }
    }

    pub fn user(parts: Vec<ContentPart>) -> Result<Self, GatewayError> {
        let msg = ChatMessage {
            role: Role::User,
            parts,
        };
        msg.validate()?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.parts.is_empty() {
            return Err(GatewayError::InvalidMessage(format!(
                "{} message has no content parts",
                self.role.as_str()
            )));
        }
        if self.role == Role::System && self.parts.iter().any(|p| p.as_text().is_none()) {
            return Err(GatewayError::InvalidMessage(
                "system messages may only contain text".into(),
            ));
        }
        Ok(())
    }

    /// Concatenated text parts.
    pub fn text(&self) -> String {
        self.parts
            .iter()
            .filter_map(ContentPart::as_text)
            .collect::<Vec<_>>()
            .join("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// Downscale images whose larger side exceeds this many pixels before
    /// they go on the wire. `None` sends original bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_image_dimension: Option<u32>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model_id: "gemini-2.5-pro".into(),
            temperature: 0.0,
            max_output_tokens: 8192,
            request_timeout_ms: 300_000,
            max_retries: 3,
            backoff_base_ms: 1000,
            max_image_dimension: None,
        }
    }
}

impl ModelConfig {
    pub fn request_timeout(&self) -> Duration {
        Duration::from_millis(self.request_timeout_ms)
    }

    pub fn backoff_base(&self) -> Duration {
        Duration::from_millis(self.backoff_base_ms)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.model_id.trim().is_empty() {
            return Err("model_id must not be empty".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.request_timeout_ms == 0 {
            return Err("request_timeout_ms must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion {
            text: text.into(),
            usage: TokenUsage::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited by the model endpoint")]
    RateLimited,
    #[error("authentication failed")]
    AuthFailure,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cassette mismatch at entry {index}: recorded digest {recorded}, prompt digest {actual}")]
    CassetteMismatch {
        index: usize,
        recorded: String,
        actual: String,
    },
    #[error("cassette exhausted after {0} entries")]
    CassetteExhausted(usize),
    #[error("conversation has no messages")]
    EmptyConversation,
    #[error("invalid message: {0}")]
    InvalidMessage(String),
}

impl GatewayError {
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Timeout | GatewayError::RateLimited | GatewayError::Transport(_) => true,
            GatewayError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// A chat model. Implementations must tolerate concurrent calls from
/// independent runs.
pub trait ChatBackend: Send + Sync {
    fn generate(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Completion, GatewayError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn generate(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        (**self).generate(messages, cfg)
    }
}

pub(crate) fn check_conversation(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    if messages.is_empty() {
        return Err(GatewayError::EmptyConversation);
    }
    messages.iter().try_for_each(ChatMessage::validate)
}

/// Hex SHA-256 over a length-prefixed encoding of the messages. Text is
/// hashed verbatim and images by payload bytes, so the digest is stable
/// across processes and independent of asset ids.
pub fn canonical_digest(messages: &[ChatMessage]) -> String {
    let mut h = Sha256::new();
    h.update((messages.len() as u64).to_le_bytes());
    for msg in messages {
        h.update(b"M");
        h.update(msg.role.as_str().as_bytes());
        h.update((msg.parts.len() as u64).to_le_bytes());
        for part in &msg.parts {
            match part {
                ContentPart::Text(t) => {
                    h.update(b"T");
                    h.update((t.len() as u64).to_le_bytes());
                    h.update(t.as_bytes());
                }
                ContentPart::Image {
                    payload,
                    media_kind,
                    ..
                } => {
                    h.update(b"I");
                    h.update(media_kind.mime_type().as_bytes());
                    h.update((payload.len() as u64).to_le_bytes());
                    h.update(payload);
                }
            }
        }
    }
    hex::encode(h.finalize())
}
