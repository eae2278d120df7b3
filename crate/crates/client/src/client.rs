use std::thread;
use std::time::Duration;

use ureq::Agent;

use crate::error::ClientError;
use crate::protocol::{EmbedRequest, EmbedResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent one.
    pub base_delay: Duration,
    /// Per-attempt timeout.
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << retry.min(16))
    }
}

enum Attempt {
    Done(EmbedResponse),
    Retry(String),
    Fail(ClientError),
}

/// Blocking client for `POST {endpoint}/embed`.
#[derive(Debug, Clone)]
pub struct EmbedClient {
    endpoint: String,
    agent: Agent,
    policy: RetryPolicy,
    bearer_token: Option<String>,
}

impl EmbedClient {
    pub fn new(endpoint: impl Into<String>, policy: RetryPolicy) -> Self {
        let agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(policy.timeout))
            .build()
            .into();
        EmbedClient {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
            policy,
            bearer_token: None,
        }
    }

    /// Sends `Authorization: Bearer <token>` with every request.
    pub fn with_bearer_token(mut self, token: impl Into<String>) -> Self {
        self.bearer_token = Some(token.into());
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn policy(&self) -> RetryPolicy {
        self.policy
    }

    fn attempt(&self, request: &EmbedRequest) -> Attempt {
        let mut call = self
            .agent
            .post(format!("{}/embed", self.endpoint))
            .header("Content-Type", "application/json");
        if let Some(token) = &self.bearer_token {
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = match call.send_json(request) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        if (200..300).contains(&status) {
            return match response.body_mut().read_json::<EmbedResponse>() {
                Ok(body) => Attempt::Done(body),
                Err(ureq::Error::Json(e)) => {
                    Attempt::Fail(ClientError::Protocol(format!("malformed response body: {e}")))
                }
                Err(e) => Attempt::Retry(e.to_string()),
            };
        }
        let message = response
            .body_mut()
            .read_to_string()
            .unwrap_or_default()
            .trim()
            .to_string();
        if status == 429 || status >= 500 {
            Attempt::Retry(format!("HTTP {status}: {message}"))
        } else {
            Attempt::Fail(ClientError::Request { status, message })
        }
    }

    /// Fetches vectors for every item, retrying transient failures with
    /// exponential backoff. The request is idempotent, so retries are safe.
    pub fn fetch_embeddings(&self, request: &EmbedRequest) -> Result<EmbedResponse, ClientError> {
        request.validate()?;
        if request.items.is_empty() {
            return Ok(EmbedResponse {
                space: request.space.clone(),
                dim: 0,
                vectors: Vec::new(),
            });
        }
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(request) {
                Attempt::Done(response) => {
                    response.check(request)?;
                    return Ok(response);
                }
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(message) => {
                    if attempts > self.policy.max_retries {
                        return Err(ClientError::Transport { attempts, message });
                    }
                    thread::sleep(self.policy.delay(attempts - 1));
                }
            }
        }
    }
}
