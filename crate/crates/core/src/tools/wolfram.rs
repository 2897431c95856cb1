//! Short-answer queries to a computational knowledge engine.
//!
//! Offline runs replace the network with a recordings file, one JSON
//! record per line: `{"query": "...", "status": 200, "body": "..."}`.

use super::{check_args, required_text, ParamSpec, Tool, ToolError, ToolSpec};
use crate::dsl::ToolArgs;
use crate::gateway::{HttpMethod, HttpRequest, HttpResponse, Transport, TransportError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

pub const WOLFRAM_APP_ID_ENV: &str = "WOLFRAM_APP_ID";
pub const DEFAULT_WOLFRAM_ENDPOINT: &str = "https://api.wolframalpha.com/v1/result";

pub struct WolframTool {
    endpoint: String,
    app_id: Option<String>,
    transport: Arc<dyn Transport>,
    timeout: Duration,
}

impl WolframTool {
    pub fn new(endpoint: impl Into<String>, app_id: Option<String>, transport: Arc<dyn Transport>) -> Self {
        WolframTool {
            endpoint: endpoint.into(),
            app_id,
            transport,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn query(&self, query: &str) -> Result<String, ToolError> {
        if query.trim().is_empty() {
            return Err(ToolError::InvalidArgument {
                name: "query".into(),
                reason: "must not be empty".into(),
            });
        }
        let app_id = self
            .app_id
            .as_deref()
            .ok_or_else(|| ToolError::AuthFailure(format!("{WOLFRAM_APP_ID_ENV} is not set")))?;
        let url = url::Url::parse_with_params(&self.endpoint, [("appid", app_id), ("i", query)])
            .map_err(|e| ToolError::Failure(format!("invalid knowledge-engine endpoint: {e}")))?;
        let request = HttpRequest {
            method: HttpMethod::Get,
            url: url.into(),
            headers: Vec::new(),
            body: None,
            timeout: self.timeout,
        };
        let response = self.transport.send(&request).map_err(|e| match e {
            TransportError::Timeout => ToolError::Failure("knowledge engine timed out".into()),
            TransportError::Connect(m) => ToolError::Failure(format!("knowledge engine unreachable: {m}")),
        })?;
        match response.status {
            200 => Ok(response.body_text()),
            501 => Err(ToolError::NoAnswer),
            401 | 403 => Err(ToolError::AuthFailure("knowledge engine rejected the app id".into())),
            status => Err(ToolError::Failure(format!(
                "knowledge engine returned HTTP {status}: {}",
                response.body_text().trim()
            ))),
        }
    }
}

impl Tool for WolframTool {
    fn spec(&self) -> ToolSpec {
        ToolSpec {
            name: "wolfram_query".into(),
            description: "Ask a computational knowledge engine a factual or numerical question, such as a \
                          physical constant or a tabulated property; returns its plain-text answer."
                .into(),
            params: vec![ParamSpec::required("query", "text")],
        }
    }

    fn call(&self, args: &ToolArgs) -> Result<String, ToolError> {
        check_args(&self.spec(), args)?;
        self.query(required_text(args, "query")?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WolframRecording {
    pub query: String,
    pub status: u16,
    pub body: String,
}

pub fn load_recordings(path: impl AsRef<Path>) -> Result<Vec<WolframRecording>, String> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

/// Answers knowledge-engine requests from recordings keyed by the `i` query
/// parameter. Unrecorded queries fail like an unreachable host.
pub struct RecordedTransport {
    by_query: HashMap<String, WolframRecording>,
}

impl RecordedTransport {
    pub fn new(recordings: Vec<WolframRecording>) -> Self {
        RecordedTransport {
            by_query: recordings.into_iter().map(|r| (r.query.clone(), r)).collect(),
        }
    }
}

impl Transport for RecordedTransport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let url = url::Url::parse(&request.url).map_err(|e| TransportError::Connect(e.to_string()))?;
        let query = url
            .query_pairs()
            .find(|(k, _)| k == "i")
            .map(|(_, v)| v.into_owned())
            .unwrap_or_default();
        let rec = self
            .by_query
            .get(&query)
            .ok_or_else(|| TransportError::Connect(format!("no recorded response for query {query:?}")))?;
        Ok(HttpResponse {
            status: rec.status,
            body: rec.body.clone().into_bytes(),
        })
    }
}
