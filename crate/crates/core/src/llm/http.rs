use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError, LlmErrorKind, ResponseSource, RetryPolicy, Semaphore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    /// Environment variable holding the bearer token; `None` sends no auth header.
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
            max_in_flight: 8,
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    in_flight: Semaphore,
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Done(ChatResponse),
    Retry(LlmErrorKind),
    Fail(LlmErrorKind),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmErrorKind> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmErrorKind::MissingApiKey(var.clone()))?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let in_flight = Semaphore::new(config.max_in_flight);
        Ok(HttpBackend {
            config,
            api_key,
            agent,
            in_flight,
        })
    }

    fn attempt(&self, req: &ChatRequest) -> Attempt {
        let body = json!({
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_tokens,
        });
        let started = Instant::now();
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match call.send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(LlmErrorKind::Timeout),
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => {
                return Attempt::Retry(LlmErrorKind::Timeout)
            }
            Err(e) => return Attempt::Fail(LlmErrorKind::Network(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(LlmErrorKind::Timeout),
            Err(e) => return Attempt::Fail(LlmErrorKind::Network(e.to_string())),
        };
        match status {
            200..=299 => {}
            429 => return Attempt::Retry(LlmErrorKind::RateLimited { attempts: 0 }),
            500..=599 => return Attempt::Retry(LlmErrorKind::Http { status, body: text }),
            _ => return Attempt::Fail(LlmErrorKind::Http { status, body: text }),
        }
        let parsed: CompletionBody = match serde_json::from_str(&text) {
            Ok(p) => p,
            Err(e) => return Attempt::Fail(LlmErrorKind::Decode(e.to_string())),
        };
        let Some(choice) = parsed.choices.into_iter().next() else {
            return Attempt::Fail(LlmErrorKind::Decode("no choices".into()));
        };
        Attempt::Done(ChatResponse {
            text: choice.message.content.unwrap_or_default(),
            truncated: choice.finish_reason.as_deref() == Some("length"),
            latency: started.elapsed(),
            source: ResponseSource::Live,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        req.validate()
            .map_err(|m| LlmError::new(req, LlmErrorKind::InvalidRequest(m)))?;
        let _permit = self.in_flight.acquire();
        let attempts = self.config.retry.max_attempts.max(1);
        let mut last = LlmErrorKind::Other("no attempt made".into());
        for n in 0..attempts {
            match self.attempt(req) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fail(kind) => return Err(LlmError::new(req, kind)),
                Attempt::Retry(kind) => {
                    log::warn!("attempt {} of {} failed: {kind}", n + 1, attempts);
                    last = kind;
                    if n + 1 < attempts {
                        std::thread::sleep(self.config.retry.delay(n));
                    }
                }
            }
        }
        if let LlmErrorKind::RateLimited { .. } = last {
            last = LlmErrorKind::RateLimited { attempts };
        }
        Err(LlmError::new(req, last))
    }

    fn describe(&self) -> String {
        format!("http({})", self.config.endpoint)
    }
}
