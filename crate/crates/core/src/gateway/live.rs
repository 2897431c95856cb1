//! Chat-completions style HTTP backend.

use super::transport::{HttpMethod, HttpRequest, Transport, TransportError};
use super::{check_conversation, ChatBackend, ChatMessage, Completion, ContentPart, GatewayError, ModelConfig, TokenUsage};
use crate::problem::MediaKind;
use base64::Engine;
use serde_json::{json, Value};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

pub const API_KEY_ENV: &str = "AGENT_MODEL_API_KEY";

pub struct LiveBackend {
    endpoint: String,
    api_key: String,
    transport: Arc<dyn Transport>,
    requests: AtomicU64,
}

impl LiveBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, transport: Arc<dyn Transport>) -> Self {
        LiveBackend {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            transport,
            requests: AtomicU64::new(0),
        }
    }

    /// Credential from `AGENT_MODEL_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>, transport: Arc<dyn Transport>) -> Result<Self, GatewayError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| GatewayError::AuthFailure)?;
        Ok(Self::new(endpoint, key, transport))
    }

    /// HTTP requests issued so far, retries included.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn attempt(&self, body: &[u8], cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let request = HttpRequest {
            method: HttpMethod::Post,
            url: self.endpoint.clone(),
            headers: vec![
                ("Content-Type".into(), "application/json".into()),
                ("Authorization".into(), format!("Bearer {}", self.api_key)),
            ],
            body: Some(body.to_vec()),
            timeout: cfg.request_timeout(),
        };
        let response = self.transport.send(&request).map_err(|e| match e {
            TransportError::Timeout => GatewayError::Timeout,
            TransportError::Connect(m) => GatewayError::Transport(m),
        })?;
        match response.status {
            200..=299 => parse_response(&response.body),
            401 | 403 => Err(GatewayError::AuthFailure),
            429 => Err(GatewayError::RateLimited),
            408 | 504 => Err(GatewayError::Timeout),
            status => Err(GatewayError::Http {
                status,
                body: truncate(&response.body_text(), 500),
            }),
        }
    }
}

impl ChatBackend for LiveBackend {
    fn generate(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        check_conversation(messages)?;
        let body = serde_json::to_vec(&request_body(messages, cfg)?)
            .map_err(|e| GatewayError::InvalidMessage(e.to_string()))?;
        let mut attempt = 0u32;
        loop {
            match self.attempt(&body, cfg) {
                Err(err) if err.is_transient() && attempt < cfg.max_retries => {
                    let backoff = cfg.backoff_base().saturating_mul(1u32 << attempt.min(16));
                    log::warn!(
                        "model call failed ({err}); retry {}/{} in {:?}",
                        attempt + 1,
                        cfg.max_retries,
                        backoff
                    );
                    if backoff > Duration::ZERO {
                        std::thread::sleep(backoff);
                    }
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Build the JSON request body. Images are sent as base64 data URLs of the
/// original bytes unless `max_image_dimension` asks for a downscale.
pub(crate) fn request_body(messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Value, GatewayError> {
    let mut wire = Vec::with_capacity(messages.len());
    for msg in messages {
        let only_text = msg.parts.iter().all(|p| p.as_text().is_some());
        let content = if only_text {
            Value::String(msg.text())
        } else {
            let mut parts = Vec::with_capacity(msg.parts.len());
            for part in &msg.parts {
                parts.push(match part {
                    ContentPart::Text(t) => json!({"type": "text", "text": t}),
                    ContentPart::Image {
                        payload,
                        media_kind,
                        ..
                    } => {
                        let bytes = match cfg.max_image_dimension {
                            Some(max) => downscale(payload, *media_kind, max)?,
                            None => payload.to_vec(),
                        };
                        let b64 = base64::engine::general_purpose::STANDARD.encode(&bytes);
                        json!({
                            "type": "image_url",
                            "image_url": {"url": format!("data:{};base64,{b64}", media_kind.mime_type())}
                        })
                    }
                });
            }
            Value::Array(parts)
        };
        wire.push(json!({"role": msg.role.as_str(), "content": content}));
    }
    Ok(json!({
        "model": cfg.model_id,
        "messages": wire,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
    }))
}

fn downscale(payload: &[u8], kind: MediaKind, max_dim: u32) -> Result<Vec<u8>, GatewayError> {
    let format = match kind {
        MediaKind::Png => image::ImageFormat::Png,
        MediaKind::Jpeg => image::ImageFormat::Jpeg,
        MediaKind::PdfPage => return Ok(payload.to_vec()),
    };
    let img = image::load_from_memory_with_format(payload, format)
        .map_err(|e| GatewayError::InvalidMessage(format!("cannot decode image: {e}")))?;
    if img.width().max(img.height()) <= max_dim {
        return Ok(payload.to_vec());
    }
    let scaled = img.resize(max_dim, max_dim, image::imageops::FilterType::Lanczos3);
    let mut out = std::io::Cursor::new(Vec::new());
    scaled
        .write_to(&mut out, format)
        .map_err(|e| GatewayError::InvalidMessage(format!("cannot encode image: {e}")))?;
    Ok(out.into_inner())
}

fn parse_response(body: &[u8]) -> Result<Completion, GatewayError> {
    let v: Value = serde_json::from_slice(body)
        .map_err(|e| GatewayError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let content = &v["choices"][0]["message"]["content"];
    let text = match content {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => {
            return Err(GatewayError::MalformedResponse(
                "missing choices[0].message.content".into(),
            ))
        }
    };
    let usage = TokenUsage {
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    };
    Ok(Completion { text, usage })
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}
