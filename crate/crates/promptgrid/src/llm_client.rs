//! OpenAI-compatible chat-completions client with batching, retries, and
//! token-budget enforcement.
//!
//! One protocol (single user message per query) keeps the bundled mock simple
//! and works against any contemporary inference server. All shared state is
//! read-only configuration; a client can be used from multiple threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::RenderedPrompt;

/// Environment variable holding the bearer token, when the endpoint needs one.
pub const API_KEY_ENV: &str = "PROMPTGRID_API_KEY";

/// An inference endpoint and its budget envelope. `size_rank` orders models
/// along the size axis for trend plots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub endpoint_url: String,
    pub context_window: usize,
    pub max_response_tokens: usize,
    pub size_rank: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("model name must be non-empty"));
        }
        if self.max_response_tokens >= self.context_window {
            return Err(Error::config(format!(
                "model '{}': max_response_tokens ({}) must be below context_window ({})",
                self.name, self.max_response_tokens, self.context_window
            )));
        }
        Ok(())
    }
}

/// Decoding parameters sent with every request. Temperature defaults to 0
/// for reproducibility; max_tokens falls back to the model's limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_tokens: Option<usize>,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: None,
        }
    }
}

/// One raw endpoint answer. The text is kept byte-exact, including any
/// leading/trailing whitespace, because the strict parser needs it verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub raw_text: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: usize,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: String,
}

pub struct LlmClient {
    http: reqwest::blocking::Client,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl LlmClient {
    pub fn new() -> Self {
        Self::with_retry(RetryPolicy::default())
    }

    pub fn with_retry(retry: RetryPolicy) -> Self {
        LlmClient {
            http: reqwest::blocking::Client::new(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            retry,
        }
    }

    /// Send one prompt. Budget violations fail before any network traffic;
    /// transient transport failures and 5xx statuses are retried with
    /// exponential backoff; 4xx rejections are surfaced immediately.
    pub fn query(
        &self,
        model: &ModelSpec,
        prompt: &RenderedPrompt,
        decoding: &Decoding,
    ) -> Result<QueryResult> {
        model.validate()?;
        let max_tokens = decoding.max_tokens.unwrap_or(model.max_response_tokens);
        if prompt.estimated_tokens + max_tokens > model.context_window {
            return Err(Error::Budget {
                model: model.name.clone(),
                estimated_tokens: prompt.estimated_tokens,
                max_response_tokens: max_tokens,
                context_window: model.context_window,
            });
        }

        let url = format!(
            "{}/v1/chat/completions",
            model.endpoint_url.trim_end_matches('/')
        );
        let request = WireRequest {
            model: &model.name,
            messages: vec![WireMessage {
                role: "user",
                content: &prompt.text,
            }],
            temperature: decoding.temperature,
            max_tokens,
        };

        let started = Instant::now();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let mut builder = self.http.post(&url).json(&request);
            if let Some(key) = &self.api_key {
                builder = builder.bearer_auth(key);
            }
            let outcome = builder.send();
            match outcome {
                Err(e) => {
                    if attempt < self.retry.max_attempts {
                        self.backoff(attempt);
                        continue;
                    }
                    return Err(Error::Transport {
                        url,
                        message: format!("{e} (after {attempt} attempts)"),
                    });
                }
                Ok(response) => {
                    let status = response.status();
                    if status.is_server_error() {
                        if attempt < self.retry.max_attempts {
                            self.backoff(attempt);
                            continue;
                        }
                        return Err(Error::Transport {
                            url,
                            message: format!(
                                "status {status} (after {attempt} attempts)"
                            ),
                        });
                    }
                    if !status.is_success() {
                        let body = response.text().unwrap_or_default();
                        return Err(Error::Protocol {
                            url,
                            status: Some(status.as_u16()),
                            message: body,
                        });
                    }
                    let body = response.text().map_err(|e| Error::Transport {
                        url: url.clone(),
                        message: format!("failed reading body: {e}"),
                    })?;
                    let parsed: WireResponse =
                        serde_json::from_str(&body).map_err(|e| Error::Protocol {
                            url: url.clone(),
                            status: Some(status.as_u16()),
                            message: format!("malformed response body: {e}; body: {body}"),
                        })?;
                    let Some(choice) = parsed.choices.into_iter().next() else {
                        return Err(Error::Protocol {
                            url,
                            status: Some(status.as_u16()),
                            message: "response has no choices".into(),
                        });
                    };
                    return Ok(QueryResult {
                        raw_text: choice.message.content,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt_count: attempt,
                    });
                }
            }
        }
    }

    fn backoff(&self, attempt: u32) {
        let factor = 2u32.saturating_pow(attempt - 1);
        std::thread::sleep(self.retry.base_backoff * factor);
    }

    /// Send many prompts with at most `parallelism` requests in flight.
    /// Results come back in input order; individual failures become per-item
    /// error markers and the batch continues.
    pub fn query_batch(
        &self,
        model: &ModelSpec,
        prompts: &[RenderedPrompt],
        decoding: &Decoding,
        parallelism: usize,
    ) -> Result<Vec<Result<QueryResult>>> {
        if parallelism == 0 {
            return Err(Error::config("parallelism must be at least 1"));
        }
        let slots: Mutex<Vec<Option<Result<QueryResult>>>> =
            Mutex::new((0..prompts.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);

        std::thread::scope(|scope| {
            for _ in 0..parallelism.min(prompts.len().max(1)) {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::SeqCst);
                    if index >= prompts.len() {
                        break;
                    }
                    let result = self.query(model, &prompts[index], decoding);
                    if let Some(slot) = slots.lock().expect("slot lock").get_mut(index) {
                        *slot = Some(result);
                    }
                });
            }
        });

        let results = slots
            .into_inner()
            .expect("slot lock")
            .into_iter()
            .map(|slot| slot.expect("every index visited"))
            .collect();
        Ok(results)
    }
}

impl Default for LlmClient {
    fn default() -> Self {
        Self::new()
    }
}
