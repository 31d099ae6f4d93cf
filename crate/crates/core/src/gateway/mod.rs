//! Provider-agnostic chat-completion gateway.
//!
//! A [`Gateway`] sends single-turn prompts through a [`Transport`] (live HTTP
//! or transcript replay), retries transient failures with exponential
//! backoff, and appends one [`LogRecord`] per call to its [`LogSink`],
//! failures included.

mod json;
mod live;
mod log;
mod replay;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use chrono::Utc;
use serde::{Deserialize, Serialize};

pub use self::json::{extract_json, ExtractedJson, JsonError};
pub use self::live::{chat_body, message_content, LiveConfig, LiveTransport, DEFAULT_API_KEY_VAR};
pub use self::log::{write_log_csv, LogRecord, LogSink, MemorySink, LOG_HEADER};
pub use self::replay::{
    normalize_prompt, prompt_hash, record_transcript, replay_transport, transcript_from_log_csv,
    transcript_from_records, RecordingTransport, ReplayTransport, TranscriptEntry, TranscriptError,
    TranscriptStore,
};

/// Appended to a prompt when a response has to be re-requested because its
/// JSON could not be used.
pub const JSON_ONLY_INSTRUCTION: &str =
    "Respond with the JSON object only, without any other text.";

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 512;

/// Pipeline phase that issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestTag {
    Stem,
    Judgment,
    StemCheck,
    Tagging,
}

impl RequestTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestTag::Stem => "stem",
            RequestTag::Judgment => "judgment",
            RequestTag::StemCheck => "stem_check",
            RequestTag::Tagging => "tagging",
        }
    }
}

impl fmt::Display for RequestTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RequestTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            RequestTag::Stem,
            RequestTag::Judgment,
            RequestTag::StemCheck,
            RequestTag::Tagging,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown request tag `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_tag: RequestTag,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("temperature {0} outside [0, 2]")]
    Temperature(String),
    #[error("max_output_tokens must be positive")]
    MaxTokens,
}

impl CompletionRequest {
    /// Request with temperature 0 and the default token limit.
    pub fn new(request_tag: RequestTag, prompt: impl Into<String>) -> Result<Self, RequestError> {
        Self::with_params(request_tag, prompt, 0.0, DEFAULT_MAX_OUTPUT_TOKENS)
    }

    pub fn with_params(
        request_tag: RequestTag,
        prompt: impl Into<String>,
        temperature: f64,
        max_output_tokens: u32,
    ) -> Result<Self, RequestError> {
        let prompt_text = prompt.into();
        if prompt_text.trim().is_empty() {
            return Err(RequestError::EmptyPrompt);
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(RequestError::Temperature(temperature.to_string()));
        }
        if max_output_tokens == 0 {
            return Err(RequestError::MaxTokens);
        }
        Ok(CompletionRequest {
            prompt_text,
            temperature,
            max_output_tokens,
            request_tag,
        })
    }

    /// Same request with [`JSON_ONLY_INSTRUCTION`] appended.
    pub fn json_reask(&self) -> CompletionRequest {
        CompletionRequest {
            prompt_text: format!("{}\n{}", self.prompt_text, JSON_ONLY_INSTRUCTION),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResponse {
    pub raw_text: String,
    pub latency_ms: u64,
    pub transport_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out")]
    Timeout,
    #[error("unexpected response payload: {0}")]
    BadPayload(String),
    #[error("no recorded response for {request_tag} prompt {prompt_hash}")]
    ReplayMiss {
        request_tag: RequestTag,
        prompt_hash: String,
    },
    #[error("transport configuration: {0}")]
    Config(String),
}

impl TransportError {
    fn is_transient(&self) -> bool {
        match self {
            TransportError::Network(_) | TransportError::Timeout => true,
            TransportError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    fn status_label(&self) -> &'static str {
        match self {
            TransportError::Http { .. } => "http_error",
            TransportError::Network(_) => "network_error",
            TransportError::Timeout => "timeout",
            TransportError::BadPayload(_) => "bad_payload",
            TransportError::ReplayMiss { .. } => "replay_miss",
            TransportError::Config(_) => "config_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: TransportError },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error(transparent)]
    ReplayMiss(TransportError),
}

pub trait Transport: Send + Sync {
    /// `"live"` or `"replay"`.
    fn label(&self) -> &'static str;
    fn model(&self) -> &str;
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn label(&self) -> &'static str {
        (**self).label()
    }

    fn model(&self) -> &str {
        (**self).model()
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        (**self).send(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay: Duration::ZERO,
        }
    }

    fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; the first retry waits base_delay
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(2))
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct InFlight {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> Self {
        InFlight {
            available: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.available.lock().expect("semaphore poisoned");
        while *n == 0 {
            n = self.freed.wait(n).expect("semaphore poisoned");
        }
        *n -= 1;
        InFlightGuard { owner: self }
    }
}

struct InFlightGuard<'a> {
    owner: &'a InFlight,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.owner.available.lock().expect("semaphore poisoned") += 1;
        self.owner.freed.notify_one();
    }
}

#[derive(Clone)]
pub struct Gateway {
    transport: Arc<dyn Transport>,
    sink: Arc<dyn LogSink>,
    retry: RetryPolicy,
    in_flight: Arc<InFlight>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("transport", &self.transport.label())
            .field("model", &self.transport.model())
            .field("retry", &self.retry)
            .finish()
    }
}

impl Gateway {
    pub fn new(transport: Arc<dyn Transport>, sink: Arc<dyn LogSink>) -> Self {
        Gateway {
            transport,
            sink,
            retry: RetryPolicy::default(),
            in_flight: Arc::new(InFlight::new(1)),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.in_flight = Arc::new(InFlight::new(limit));
        self
    }

    /// A gateway sharing this one's transport and in-flight limit but
    /// logging to `sink`.
    pub fn with_sink(&self, sink: Arc<dyn LogSink>) -> Gateway {
        Gateway {
            sink,
            ..self.clone()
        }
    }

    pub fn transport_label(&self) -> &'static str {
        self.transport.label()
    }

    pub fn model(&self) -> &str {
        self.transport.model()
    }

    pub fn complete(
        &self,
        request: &CompletionRequest,
    ) -> Result<CompletionResponse, GatewayError> {
        let _permit = self.in_flight.acquire();
        let started = Utc::now();
        let clock = Instant::now();
        let mut attempts = 0;
        let outcome = loop {
            attempts += 1;
            if attempts > 1 {
                std::thread::sleep(self.retry.delay_before(attempts));
            }
            match self.transport.send(request) {
                Ok(text) => break Ok(text),
                Err(e) if e.is_transient() && attempts < self.retry.max_attempts.max(1) => {
                    ::log::warn!(
                        "{} request attempt {attempts} failed: {e}",
                        request.request_tag
                    );
                }
                Err(e) => break Err(e),
            }
        };
        let latency_ms = clock.elapsed().as_millis() as u64;
        let (raw_response, status) = match &outcome {
            Ok(text) => (text.clone(), "ok".to_string()),
            Err(e) => (String::new(), e.status_label().to_string()),
        };
        self.sink.append(LogRecord {
            timestamp: started,
            request_tag: request.request_tag,
            model: self.transport.model().to_string(),
            prompt: request.prompt_text.clone(),
            raw_response,
            status,
            latency_ms,
        });
        match outcome {
            Ok(raw_text) => Ok(CompletionResponse {
                raw_text,
                latency_ms,
                transport_label: self.transport.label().to_string(),
            }),
            Err(e @ TransportError::ReplayMiss { .. }) => Err(GatewayError::ReplayMiss(e)),
            Err(TransportError::Timeout) => Err(GatewayError::Timeout { attempts }),
            Err(last) => Err(GatewayError::Transport { attempts, last }),
        }
    }
}
