//! Deterministic mock inference endpoint with configurable response
//! pathologies, for offline testing of the whole pipeline.
//!
//! Each response is drawn from a per-request RNG seeded by
//! hash(seed, prompt bytes), never from a shared stream, so responses depend
//! only on the prompt content — parallel and serial runs are byte-identical,
//! which the runner's idempotence contract relies on.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};

/// Outcome mixture for the mock: correct label, wrong label, fabricated
/// off-inventory topic, or a near-miss with trailing whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologyProfile {
    pub p_correct: f64,
    pub p_wrong_class: f64,
    pub p_hallucinate: f64,
    pub p_noise: f64,
    #[serde(default = "default_lexicon")]
    pub hallucination_lexicon: Vec<String>,
    pub seed: u64,
}

fn default_lexicon() -> Vec<String> {
    // Plausible off-inventory topics, so hallucinated answers never collide
    // with the class sets used in the fixtures.
    ["Klimapolitik", "Migration", "Steuerreform", "Digitalisierung"]
        .map(String::from)
        .to_vec()
}

impl PathologyProfile {
    pub fn always_correct(seed: u64) -> Self {
        PathologyProfile {
            p_correct: 1.0,
            p_wrong_class: 0.0,
            p_hallucinate: 0.0,
            p_noise: 0.0,
            hallucination_lexicon: default_lexicon(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            self.p_correct,
            self.p_wrong_class,
            self.p_hallucinate,
            self.p_noise,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config(
                "pathology probabilities must lie in [0, 1]",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "pathology probabilities must sum to 1, got {total}"
            )));
        }
        if self.p_hallucinate > 0.0 && self.hallucination_lexicon.is_empty() {
            return Err(Error::config(
                "p_hallucinate > 0 requires a non-empty hallucination lexicon",
            ));
        }
        Ok(())
    }
}

/// Full mock endpoint configuration: the pathology mixture, the closed class
/// set, and the gold lookup keyed by sample id. Prompts are matched to
/// samples by scanning for id occurrences, so harness corpora embed each
/// sample's id in its text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    pub profile: PathologyProfile,
    pub classes: Vec<ClassLabel>,
    pub gold: BTreeMap<String, ClassLabel>,
}

impl MockConfig {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.classes.is_empty() {
            return Err(Error::config("mock config needs a class inventory"));
        }
        if self.profile.p_wrong_class > 0.0 && self.classes.len() < 2 {
            return Err(Error::config(
                "p_wrong_class > 0 requires at least two classes",
            ));
        }
        for (id, class) in &self.gold {
            if !self.classes.contains(class) {
                return Err(Error::config(format!(
                    "gold entry '{id}' references unknown class '{}'",
                    class.name()
                )));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: MockConfig = serde_json::from_str(&content)
            .map_err(|e| Error::config(format!("{}: invalid mock profile: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }
}

/// Compute the mock's answer for one prompt. Pure and deterministic: the
/// outcome depends only on (seed, prompt bytes).
pub fn respond(config: &MockConfig, prompt_text: &str) -> Result<String> {
    let gold = lookup_gold(config, prompt_text)?;
    let mut rng = request_rng(config.profile.seed, prompt_text);
    let draw: f64 = rng.random();

    let p = &config.profile;
    if draw < p.p_correct {
        return Ok(gold.name().to_string());
    }
    if draw < p.p_correct + p.p_wrong_class {
        let others: Vec<&ClassLabel> =
            config.classes.iter().filter(|c| *c != gold).collect();
        let pick = rng.random_range(0..others.len());
        return Ok(others[pick].name().to_string());
    }
    if draw < p.p_correct + p.p_wrong_class + p.p_hallucinate {
        let pick = rng.random_range(0..p.hallucination_lexicon.len());
        return Ok(p.hallucination_lexicon[pick].clone());
    }
    // Noise: the right answer ruined by a trailing space.
    Ok(format!("{} ", gold.name()))
}

fn lookup_gold<'a>(config: &'a MockConfig, prompt_text: &str) -> Result<&'a ClassLabel> {
    // Earliest occurrence wins; longer ids break position ties so that ids
    // sharing a prefix resolve to the most specific match.
    let mut best: Option<(usize, &str, &ClassLabel)> = None;
    for (id, class) in &config.gold {
        if let Some(pos) = prompt_text.find(id.as_str()) {
            let better = match best {
                None => true,
                Some((bpos, bid, _)) => {
                    pos < bpos || (pos == bpos && id.len() > bid.len())
                }
            };
            if better {
                best = Some((pos, id, class));
            }
        }
    }
    best.map(|(_, _, class)| class).ok_or_else(|| {
        Error::Protocol {
            url: "mock".into(),
            status: Some(400),
            message: "prompt contains no known sample id marker".into(),
        }
    })
}

fn request_rng(seed: u64, prompt_text: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(prompt_text.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

#[derive(Deserialize)]
struct ChatRequest {
    #[allow(dead_code)]
    #[serde(default)]
    model: String,
    messages: Vec<ChatMessage>,
}

#[derive(Deserialize)]
struct ChatMessage {
    role: String,
    content: String,
}

#[derive(Serialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Serialize)]
struct Choice {
    message: AssistantMessage,
}

#[derive(Serialize)]
struct AssistantMessage {
    role: &'static str,
    content: String,
}

struct ServerState {
    config: MockConfig,
    captured: Mutex<Vec<String>>,
}

async fn chat_completions(
    State(state): State<Arc<ServerState>>,
    Json(request): Json<ChatRequest>,
) -> Response {
    let Some(user) = request.messages.iter().rev().find(|m| m.role == "user") else {
        return (
            StatusCode::BAD_REQUEST,
            Json(serde_json::json!({"error": "no user message"})),
        )
            .into_response();
    };
    state
        .captured
        .lock()
        .expect("capture lock")
        .push(user.content.clone());
    match respond(&state.config, &user.content) {
        Ok(content) => Json(ChatResponse {
            choices: vec![Choice {
                message: AssistantMessage {
                    role: "assistant",
                    content,
                },
            }],
        })
        .into_response(),
        Err(e) => (
            StatusCode::BAD_REQUEST,
            Json(serde_json::json!({"error": e.to_string()})),
        )
            .into_response(),
    }
}

/// A mock endpoint running on its own runtime thread. Dropping the handle
/// shuts the server down.
pub struct MockServer {
    addr: SocketAddr,
    state: Arc<ServerState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    join: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    /// Bind to an ephemeral localhost port and start serving.
    pub fn spawn(config: MockConfig) -> Result<MockServer> {
        Self::spawn_on(config, 0)
    }

    pub fn spawn_on(config: MockConfig, port: u16) -> Result<MockServer> {
        config.validate()?;
        let listener = std::net::TcpListener::bind(("127.0.0.1", port))
            .map_err(|e| Error::io(format!("127.0.0.1:{port}"), e))?;
        listener
            .set_nonblocking(true)
            .map_err(|e| Error::io("listener", e))?;
        let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;

        let state = Arc::new(ServerState {
            config,
            captured: Mutex::new(Vec::new()),
        });
        let app_state = state.clone();
        let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();

        let join = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .expect("mock server runtime");
            runtime.block_on(async move {
                let listener =
                    tokio::net::TcpListener::from_std(listener).expect("tokio listener");
                let app = Router::new()
                    .route("/v1/chat/completions", post(chat_completions))
                    .with_state(app_state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .expect("mock server");
            });
        });

        Ok(MockServer {
            addr,
            state,
            shutdown: Some(shutdown_tx),
            join: Some(join),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Prompt texts received so far, in arrival order.
    pub fn captured_prompts(&self) -> Vec<String> {
        self.state.captured.lock().expect("capture lock").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

/// Run a mock endpoint in the foreground (the `mock-serve` subcommand).
/// Prints the bound address before blocking so callers can pass port 0.
pub fn serve_blocking(config: MockConfig, port: u16) -> Result<()> {
    let server = MockServer::spawn_on(config, port)?;
    println!("mock llm listening on {}", server.url());
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}
