use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, Transport, TransportError};

pub const DEFAULT_API_KEY_VAR: &str = "CLOZEGEN_API_KEY";

/// Endpoint settings for an OpenAI-compatible chat-completion service.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key_var: String,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: String::new(),
            model: String::new(),
            api_key_var: DEFAULT_API_KEY_VAR.to_string(),
            timeout: Duration::from_secs(60),
        }
    }
}

pub struct LiveTransport {
    config: LiveConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl LiveTransport {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: LiveConfig) -> Result<Self, TransportError> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(TransportError::Config(
                "live transport needs an endpoint and a model".into(),
            ));
        }
        let api_key = std::env::var(&config.api_key_var).map_err(|_| {
            TransportError::Config(format!(
                "environment variable {} is not set",
                config.api_key_var
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TransportError::Config(e.to_string()))?;
        Ok(LiveTransport {
            config,
            api_key,
            client,
        })
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        chat_body(&self.config.model, request)
    }
}

pub fn chat_body(model: &str, request: &CompletionRequest) -> Value {
    json!({
        "model": model,
        "messages": [{"role": "user", "content": request.prompt_text}],
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    })
}

/// Pulls `choices[0].message.content` out of a chat-completion payload.
pub fn message_content(payload: &Value) -> Option<&str> {
    payload
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
}

impl Transport for LiveTransport {
    fn label(&self) -> &'static str {
        "live"
    }

    fn model(&self) -> &str {
        &self.config.model
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(&self.request_body(request))
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportError::Timeout
                } else {
                    TransportError::Network(e.to_string())
                }
            })?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        let payload: Value =
            serde_json::from_str(&text).map_err(|e| TransportError::BadPayload(e.to_string()))?;
        message_content(&payload)
            .map(str::to_string)
            .ok_or_else(|| TransportError::BadPayload("missing choices[0].message.content".into()))
    }
}
