//! Harness for zero-shot prompt-based text annotation experiments.
//!
//! Runs a grid of (model × prompt tier) classification queries against
//! OpenAI-compatible endpoints, strictly parses the free-form responses into
//! class labels, and scores them against gold annotations next to a
//! Multinomial Naive Bayes baseline and imported external predictions. A
//! deterministic mock endpoint makes the whole pipeline testable offline.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod llm_client;
pub mod mockllm;
pub mod naive_bayes;
pub mod prompting;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
