//! Experiment configuration file: nested key-value TOML consumed by every
//! CLI subcommand. Relative paths resolve against the config file location.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassLabel, CorpusFormat, LabeledCorpus};
use crate::error::{Error, Result};
use crate::llm_client::{Decoding, ModelSpec};
use crate::prompting::{builtin_suite, load_templates_dir, PromptTemplate};
use crate::runner::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub prompts: PromptsSection,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub decoding: Decoding,
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSection {
    pub path: PathBuf,
    pub format: CorpusFormat,
    #[serde(default)]
    pub classes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSection {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratio: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSection {
    pub alpha: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            alpha: crate::naive_bayes::DEFAULT_ALPHA,
        }
    }
}

/// Template source: either a directory of `.prompt` files or the builtin
/// suite generated from the task fields.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PromptsSection {
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    #[serde(default)]
    pub task_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub handbook: String,
    /// Optional subset selection by template id.
    #[serde(default)]
    pub template_ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
    #[serde(default)]
    pub deterministic_timing: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            output_dir: PathBuf::from("run"),
            parallelism: 1,
            seed: 0,
            deterministic_timing: false,
        }
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<AppConfig> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: AppConfig = toml::from_str(&content)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        if !(config.split.ratio > 0.0 && config.split.ratio < 1.0) {
            return Err(Error::config(format!(
                "split.ratio must be inside (0, 1), got {}",
                config.split.ratio
            )));
        }
        Ok(config)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.corpus.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.run.output_dir)
    }

    pub fn load_corpus(&self) -> Result<LabeledCorpus> {
        let path = self.corpus_path();
        match &self.corpus.classes {
            Some(names) => {
                let classes = names
                    .iter()
                    .map(|n| ClassLabel::new(n.clone()))
                    .collect::<Result<Vec<_>>>()?;
                crate::corpus::load_corpus_with_classes(&path, self.corpus.format, classes)
            }
            None => crate::corpus::load_corpus(&path, self.corpus.format),
        }
    }

    /// Templates from the configured directory, or the builtin suite.
    pub fn resolve_templates(&self) -> Result<Vec<PromptTemplate>> {
        match &self.prompts.templates_dir {
            Some(dir) => load_templates_dir(&self.resolve(dir)),
            None => Ok(builtin_suite(
                &self.prompts.task_name,
                &self.prompts.description,
                &self.prompts.handbook,
            )),
        }
    }

    pub fn to_experiment_config(&self) -> Result<ExperimentConfig> {
        if self.models.is_empty() {
            return Err(Error::config("config has no [[models]] entries"));
        }
        let config = ExperimentConfig {
            corpus_path: self.corpus_path(),
            corpus_format: self.corpus.format,
            classes: self.corpus.classes.clone(),
            models: self.models.clone(),
            template_ids: self.prompts.template_ids.clone(),
            decoding: self.decoding.clone(),
            parallelism: self.run.parallelism,
            output_dir: self.output_dir(),
            seed: self.run.seed,
            deterministic_timing: self.run.deterministic_timing,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(
            file,
            "[corpus]\npath = \"corpus.csv\"\nformat = \"csv\"\n"
        )
        .unwrap();
        let config = AppConfig::load(&path).unwrap();
        assert_eq!(config.split.ratio, 0.8);
        assert_eq!(config.baseline.alpha, 1.0);
        assert_eq!(config.corpus_path(), dir.path().join("corpus.csv"));
        assert!(config.models.is_empty());
    }

    #[test]
    fn full_config_roundtrips_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            r#"
[corpus]
path = "data.jsonl"
format = "jsonl"
classes = ["A", "B"]

[split]
ratio = 0.75
seed = 11

[baseline]
alpha = 0.5

[prompts]
task_name = "topic classification"
description = "desc"
handbook = "rules"

[[models]]
name = "mock-small"
endpoint_url = "http://127.0.0.1:1234"
context_window = 512
max_response_tokens = 16
size_rank = 1

[decoding]
temperature = 0.0
max_tokens = 16

[run]
output_dir = "runs/exp1"
parallelism = 4
seed = 42
deterministic_timing = true
"#,
        )
        .unwrap();
        let config = AppConfig::load(&path).unwrap();
        assert_eq!(config.models.len(), 1);
        assert_eq!(config.split.seed, 11);
        let experiment = config.to_experiment_config().unwrap();
        assert_eq!(experiment.parallelism, 4);
        assert!(experiment.deterministic_timing);
        assert_eq!(experiment.output_dir, dir.path().join("runs/exp1"));
        let templates = config.resolve_templates().unwrap();
        assert_eq!(templates.len(), 16);
    }

    #[test]
    fn bad_ratio_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "[corpus]\npath = \"c.csv\"\nformat = \"csv\"\n[split]\nratio = 1.5\nseed = 1\n",
        )
        .unwrap();
        assert!(matches!(AppConfig::load(&path), Err(Error::Config(_))));
    }
}
