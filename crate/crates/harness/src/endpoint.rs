//! Completion models: the HTTP client and the trait the runner talks to.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::prompt::Prompt;
use crate::HarnessError;

/// Environment variable holding the bearer token for remote endpoints.
pub const TOKEN_ENV: &str = "TRACEBENCH_API_TOKEN";

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    pub max_tokens: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(with = "secs", default = "default_timeout")]
    pub timeout: Duration,
    #[serde(skip)]
    pub auth_token: Option<String>,
}

fn default_timeout() -> Duration {
    Duration::from_secs(120)
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for ModelEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelEndpoint")
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("max_tokens", &self.max_tokens)
            .field("temperature", &self.temperature)
            .field("timeout", &self.timeout)
            .field("auth_token", &self.auth_token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>, max_tokens: usize) -> Self {
        ModelEndpoint {
            base_url: base_url.into(),
            model_name: model_name.into(),
            max_tokens,
            temperature: 0.0,
            timeout: default_timeout(),
            auth_token: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_tokens == 0 {
            return Err(HarnessError::InvalidEndpoint("max_tokens must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(HarnessError::InvalidEndpoint("temperature must be >= 0".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(HarnessError::InvalidEndpoint(format!("unsupported url {}", self.base_url)));
        }
        Ok(())
    }

    /// Picks up the token from the environment if none is set.
    pub fn with_env_token(mut self) -> Self {
        if self.auth_token.is_none() {
            self.auth_token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        }
        self
    }

    fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/completions") {
            base.to_string()
        } else {
            format!("{base}/v1/completions")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// Wire format of a completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub max_tokens: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub stop: Vec<String>,
}

/// Anything that turns a prompt into a completion. Must be shareable
/// across evaluation threads.
pub trait CompletionModel: Send + Sync {
    fn complete(&self, prompt: &Prompt, stop: &[String], max_tokens: usize) -> Result<Completion, HarnessError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

pub struct HttpModel {
    endpoint: ModelEndpoint,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

/// Response body: either `{text, finish_reason}` or an OpenAI style
/// `{choices: [{text, finish_reason}]}`.
#[derive(Deserialize)]
struct WireResponse {
    text: Option<String>,
    finish_reason: Option<String>,
    #[serde(default)]
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
    finish_reason: Option<String>,
}

enum AttemptError {
    Retryable(HarnessError),
    Fatal(HarnessError),
}

impl HttpModel {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self, HarnessError> {
        endpoint.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| HarnessError::Transport(e.to_string()))?;
        Ok(HttpModel {
            endpoint,
            client,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn request(&self, prompt: &Prompt, stop: &[String], max_tokens: usize) -> CompletionRequest {
        CompletionRequest {
            model: self.endpoint.model_name.clone(),
            prompt: prompt.text.clone(),
            system: prompt.system.clone(),
            max_tokens,
            temperature: self.endpoint.temperature,
            stop: stop.to_vec(),
        }
    }

    fn attempt(&self, body: &CompletionRequest) -> Result<Completion, AttemptError> {
        let mut req = self.client.post(self.endpoint.completions_url()).json(body);
        if let Some(tok) = &self.endpoint.auth_token {
            req = req.bearer_auth(tok);
        }
        let resp = req
            .send()
            .map_err(|e| AttemptError::Retryable(HarnessError::Transport(e.to_string())))?;
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(AttemptError::Fatal(HarnessError::AuthFailure { status: status.as_u16() }));
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(AttemptError::Retryable(HarnessError::Transport(format!("HTTP {status}"))));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(HarnessError::MalformedResponse(format!("HTTP {status}"))));
        }
        let text = resp
            .text()
            .map_err(|e| AttemptError::Retryable(HarnessError::Transport(e.to_string())))?;
        parse_response(&text).map_err(AttemptError::Fatal)
    }
}

fn parse_response(body: &str) -> Result<Completion, HarnessError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?;
    let (text, reason) = match (wire.text, wire.choices.into_iter().next()) {
        (Some(t), _) => (t, wire.finish_reason),
        (None, Some(c)) => (c.text, c.finish_reason),
        (None, None) => return Err(HarnessError::MalformedResponse("no text in response".into())),
    };
    let finish_reason = match reason.as_deref() {
        Some("length") => FinishReason::Length,
        _ => FinishReason::Stop,
    };
    Ok(Completion { text, finish_reason })
}

impl CompletionModel for HttpModel {
    fn complete(&self, prompt: &Prompt, stop: &[String], max_tokens: usize) -> Result<Completion, HarnessError> {
        let body = self.request(prompt, stop, max_tokens);
        let mut delay = self.retry.base_delay;
        let attempts = self.retry.attempts.max(1);
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(c) => {
                    debug!(attempt = n, finish = ?c.finish_reason, "completion received");
                    return Ok(c);
                }
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(e)) if n == attempts => return Err(e),
                Err(AttemptError::Retryable(e)) => {
                    warn!(attempt = n, error = %e, "retrying completion request");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }
}

/// One request against `endpoint` with its own budget and the default
/// retry policy.
pub fn complete(endpoint: &ModelEndpoint, prompt: &Prompt) -> Result<Completion, HarnessError> {
    HttpModel::new(endpoint.clone())?.complete(prompt, &[], endpoint.max_tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_response_shapes() {
        let a = parse_response(r#"{"text": "hi", "finish_reason": "length"}"#).unwrap();
        assert_eq!(a.finish_reason, FinishReason::Length);
        let b = parse_response(r#"{"choices": [{"text": "yo", "finish_reason": "stop"}]}"#).unwrap();
        assert_eq!(b, Completion { text: "yo".into(), finish_reason: FinishReason::Stop });
        assert!(matches!(parse_response("{}"), Err(HarnessError::MalformedResponse(_))));
        assert!(matches!(parse_response("nope"), Err(HarnessError::MalformedResponse(_))));
    }

    #[test]
    fn endpoint_validation() {
        assert!(ModelEndpoint::new("http://x", "m", 10).validate().is_ok());
        assert!(ModelEndpoint::new("http://x", "m", 0).validate().is_err());
        assert!(ModelEndpoint::new("ftp://x", "m", 5).validate().is_err());
        let mut e = ModelEndpoint::new("http://x", "m", 5);
        e.temperature = -1.0;
        assert!(e.validate().is_err());
    }

    #[test]
    fn token_is_redacted() {
        let mut e = ModelEndpoint::new("http://x", "m", 5);
        e.auth_token = Some("sekrit".into());
        assert!(!format!("{e:?}").contains("sekrit"));
    }

    #[test]
    fn url_joining() {
        assert_eq!(ModelEndpoint::new("http://h:1/", "m", 1).completions_url(), "http://h:1/v1/completions");
        assert_eq!(ModelEndpoint::new("http://h/api/completions", "m", 1).completions_url(), "http://h/api/completions");
    }
}
