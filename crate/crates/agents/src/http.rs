use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::Deserialize;
use serde_json::json;

use crate::endpoint::{AgentEndpoint, Stimulus};
use crate::error::AgentError;
use crate::reply::{AgentReply, TokenAlternative};
use crate::transport::Transport;

/// Blocking client for an OpenAI-compatible chat-completions endpoint.
///
/// POSTs to `{base_url}/v1/chat/completions` with a bearer token from the
/// `CRN_API_KEY` environment variable (or an explicit key).
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new() -> Result<Self, AgentError> {
        Self::with_timeout(Duration::from_secs(120))
    }

    pub fn with_timeout(timeout: Duration) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AgentError::Transport {
                status: None,
                message: format!("client construction failed: {e}"),
            })?;
        Ok(HttpTransport {
            client,
            api_key: std::env::var("CRN_API_KEY").ok(),
        })
    }

    pub fn with_api_key(mut self, api_key: impl Into<String>) -> Self {
        self.api_key = Some(api_key.into());
        self
    }

    /// Builds the chat-completions request body for one call.
    pub fn request_body(
        endpoint: &AgentEndpoint,
        system_text: &str,
        stimulus: &Stimulus,
    ) -> Result<serde_json::Value, AgentError> {
        if stimulus.synth_id.is_some() {
            return Err(AgentError::MalformedRequest(
                "synthetic stimulus requires an oracle endpoint".to_string(),
            ));
        }

        let mut parts = vec![json!({"type": "text", "text": stimulus.text})];
        if let Some(path) = &stimulus.image {
            let bytes = std::fs::read(path).map_err(|e| {
                AgentError::MalformedRequest(format!("cannot read image {}: {e}", path.display()))
            })?;
            let mime = match path.extension().and_then(|e| e.to_str()) {
                Some("jpg") | Some("jpeg") => "image/jpeg",
                _ => "image/png",
            };
            parts.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:{mime};base64,{}", BASE64.encode(&bytes))}
            }));
        }

        let mut messages = Vec::new();
        if !system_text.is_empty() {
            messages.push(json!({"role": "system", "content": system_text}));
        }
        messages.push(json!({"role": "user", "content": parts}));

        let mut body = json!({
            "model": endpoint.model,
            "messages": messages,
            "temperature": endpoint.temperature,
            "max_tokens": endpoint.max_tokens,
            "logprobs": endpoint.request_logprobs,
        });
        if endpoint.request_logprobs {
            body["top_logprobs"] = json!(endpoint.top_alternatives);
        }
        Ok(body)
    }

    /// Extracts `choices[0].message.content` and the first token's
    /// `top_logprobs` from a chat-completions response body.
    pub fn parse_response(body: &str) -> Result<AgentReply, AgentError> {
        let parsed: ChatResponse = serde_json::from_str(body)
            .map_err(|e| AgentError::MalformedReply(format!("response is not valid JSON: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AgentError::MalformedReply("response has no choices".to_string()))?;
        let text = choice
            .message
            .and_then(|m| m.content)
            .ok_or_else(|| AgentError::MalformedReply("choice has no message content".to_string()))?;
        let first_token_alternatives = choice
            .logprobs
            .and_then(|l| l.content)
            .and_then(|mut tokens| if tokens.is_empty() { None } else { Some(tokens.remove(0)) })
            .map(|t| {
                t.top_logprobs
                    .into_iter()
                    .map(|alt| TokenAlternative {
                        token: alt.token,
                        logprob: alt.logprob,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(AgentReply {
            text,
            first_token_alternatives,
        })
    }
}

impl Transport for HttpTransport {
    fn send(
        &self,
        endpoint: &AgentEndpoint,
        system_text: &str,
        stimulus: &Stimulus,
    ) -> Result<AgentReply, AgentError> {
        let body = Self::request_body(endpoint, system_text, stimulus)?;
        let url = format!("{}/v1/chat/completions", endpoint.base_url.trim_end_matches('/'));

        let mut request = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }

        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                AgentError::Timeout
            } else {
                AgentError::Transport {
                    status: e.status().map(|s| s.as_u16()),
                    message: e.to_string(),
                }
            }
        })?;

        let status = response.status();
        let text = response.text().map_err(|e| {
            if e.is_timeout() {
                AgentError::Timeout
            } else {
                AgentError::Transport {
                    status: Some(status.as_u16()),
                    message: format!("failed reading response body: {e}"),
                }
            }
        })?;
        if !status.is_success() {
            return Err(AgentError::Transport {
                status: Some(status.as_u16()),
                message: text.chars().take(500).collect(),
            });
        }
        Self::parse_response(&text)
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Option<Message>,
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct Logprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct TokenLogprob {
    #[serde(default)]
    top_logprobs: Vec<TopLogprob>,
}

#[derive(Deserialize)]
struct TopLogprob {
    token: String,
    logprob: f64,
}
