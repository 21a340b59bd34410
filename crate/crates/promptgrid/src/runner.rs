//! Batch-wise execution of the model × template × sample grid with durable,
//! resumable persistence.
//!
//! Records are appended to one JSONL file per (model, template) cell and
//! flushed after every batch, so a killed run leaves a clean prefix plus at
//! most one torn final line, which the resume scan detects and drops. The
//! config snapshot (including template bodies) lives inside the run
//! directory, making resumes self-validating.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CorpusFormat, LabeledCorpus, Sample};
use crate::error::{Error, Result};
use crate::evaluation::{parse_response, ParseOutcome};
use crate::llm_client::{Decoding, LlmClient, ModelSpec};
use crate::prompting::{load_templates_dir, PromptTemplate};

pub const CONFIG_FILE: &str = "config.json";
pub const RECORDS_DIR: &str = "records";
pub const TEMPLATES_DIR: &str = "templates";

/// Timestamp written when deterministic timing is on.
const EPOCH_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

/// Everything a grid run needs. Template bodies are passed separately and
/// snapshotted; `template_ids`, when set, selects a subset of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus_path: PathBuf,
    pub corpus_format: CorpusFormat,
    #[serde(default)]
    pub classes: Option<Vec<String>>,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub template_ids: Option<Vec<String>>,
    #[serde(default)]
    pub decoding: Decoding,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Fixed timestamps and zero latencies, so identical runs produce
    /// byte-identical records.
    #[serde(default)]
    pub deterministic_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::config("config needs at least one model"));
        }
        for model in &self.models {
            model.validate()?;
        }
        let mut file_keys = HashSet::new();
        for model in &self.models {
            if !file_keys.insert(sanitize_component(&model.name)) {
                return Err(Error::config(format!(
                    "model names collide in record file naming: '{}'",
                    model.name
                )));
            }
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism must be at least 1"));
        }
        if let Some(ids) = &self.template_ids {
            if ids.is_empty() {
                return Err(Error::config("template_ids must not be empty when set"));
            }
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<LabeledCorpus> {
        match &self.classes {
            Some(names) => {
                let classes = names
                    .iter()
                    .map(|n| crate::corpus::ClassLabel::new(n.clone()))
                    .collect::<Result<Vec<_>>>()?;
                crate::corpus::load_corpus_with_classes(
                    &self.corpus_path,
                    self.corpus_format,
                    classes,
                )
            }
            None => crate::corpus::load_corpus(&self.corpus_path, self.corpus_format),
        }
    }
}

/// One persisted grid cell result; the unit of durability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model_name: String,
    pub template_id: String,
    pub sample_id: String,
    pub raw_response: String,
    pub outcome: ParseOutcome,
    pub latency_ms: u64,
    pub timestamp: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Snapshot stored as `config.json` inside the run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub corpus_sha256: String,
    pub template_ids: Vec<String>,
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub records_written: usize,
    pub errors: usize,
}

/// Keep record file names filesystem-safe while record contents carry the
/// real names.
pub fn sanitize_component(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn record_file_name(model_name: &str, template_id: &str) -> String {
    format!("{}__{}.jsonl", sanitize_component(model_name), template_id)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn corpus_file_sha(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn compute_config_hash(
    config: &ExperimentConfig,
    corpus_sha256: &str,
    templates: &[PromptTemplate],
) -> String {
    // output_dir and parallelism are execution knobs, not experiment
    // identity: a run may be moved on disk or resumed with a different
    // worker count without becoming a different experiment.
    let mut identity = config.clone();
    identity.output_dir = PathBuf::new();
    identity.parallelism = 0;
    let mut pairs: Vec<(String, String)> = templates
        .iter()
        .map(|t| (t.id().to_string(), t.to_file_string()))
        .collect();
    pairs.sort();
    let canonical = serde_json::json!({
        "config": identity,
        "corpus_sha256": corpus_sha256,
        "templates": pairs,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

fn select_templates<'a>(
    config: &ExperimentConfig,
    templates: &'a [PromptTemplate],
) -> Result<Vec<&'a PromptTemplate>> {
    if templates.is_empty() {
        return Err(Error::config("config needs at least one template"));
    }
    match &config.template_ids {
        None => Ok(templates.iter().collect()),
        Some(ids) => ids
            .iter()
            .map(|id| {
                templates
                    .iter()
                    .find(|t| t.id() == id)
                    .ok_or_else(|| Error::config(format!("unknown template id '{id}'")))
            })
            .collect(),
    }
}

/// Execute the grid. Safe to call on a directory holding a compatible
/// partial run: existing valid records are kept byte-for-byte and only the
/// missing cells are filled.
pub fn run_grid(
    config: &ExperimentConfig,
    corpus: &LabeledCorpus,
    templates: &[PromptTemplate],
    client: &LlmClient,
) -> Result<RunSummary> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::data("cannot run a grid over an empty corpus"));
    }
    let selected = select_templates(config, templates)?;
    let corpus_sha256 = corpus_file_sha(&config.corpus_path)?;
    let owned: Vec<PromptTemplate> = selected.iter().map(|t| (*t).clone()).collect();
    let config_hash = compute_config_hash(config, &corpus_sha256, &owned);

    let run_dir = &config.output_dir;
    std::fs::create_dir_all(run_dir.join(RECORDS_DIR))
        .map_err(|e| Error::io(run_dir.join(RECORDS_DIR), e))?;

    let manifest_path = run_dir.join(CONFIG_FILE);
    if manifest_path.exists() {
        let existing = load_manifest(run_dir)?;
        if existing.config_hash != config_hash {
            return Err(Error::Resume {
                run_dir: run_dir.clone(),
                fields: diff_manifest(&existing, config, &corpus_sha256, &owned),
            });
        }
    } else {
        let manifest = RunManifest {
            config: config.clone(),
            corpus_sha256,
            template_ids: owned.iter().map(|t| t.id().to_string()).collect(),
            config_hash: config_hash.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::config(format!("serialize manifest: {e}")))?;
        std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
        let templates_dir = run_dir.join(TEMPLATES_DIR);
        for template in &owned {
            template.save_to_dir(&templates_dir)?;
        }
    }

    fill_pending(config, corpus, &owned, client, &config_hash)
}

/// Recompute the pending cell set from the snapshot and execute only that.
pub fn resume(run_dir: &Path, client: &LlmClient) -> Result<RunSummary> {
    let manifest = load_manifest(run_dir)?;
    let corpus = manifest.config.load_corpus()?;
    let corpus_sha256 = corpus_file_sha(&manifest.config.corpus_path)?;
    let templates = load_run_templates(run_dir)?;
    let config_hash = compute_config_hash(&manifest.config, &corpus_sha256, &templates);
    if config_hash != manifest.config_hash {
        return Err(Error::Resume {
            run_dir: run_dir.to_path_buf(),
            fields: diff_manifest(&manifest, &manifest.config, &corpus_sha256, &templates),
        });
    }
    fill_pending(&manifest.config, &corpus, &templates, client, &config_hash)
}

/// Name which manifest components drifted, for the resume error message.
fn diff_manifest(
    manifest: &RunManifest,
    config: &ExperimentConfig,
    corpus_sha256: &str,
    templates: &[PromptTemplate],
) -> Vec<String> {
    let mut fields = Vec::new();
    if manifest.corpus_sha256 != corpus_sha256 {
        fields.push("corpus".to_string());
    }
    let mut snapshot_ids: Vec<String> = manifest.template_ids.clone();
    snapshot_ids.sort();
    let mut current_ids: Vec<String> = templates.iter().map(|t| t.id().to_string()).collect();
    current_ids.sort();
    if snapshot_ids != current_ids {
        fields.push("templates".to_string());
    }
    if manifest.config != *config {
        fields.push("config".to_string());
    }
    if fields.is_empty() {
        // Hash mismatch with no attributable component, e.g. a hand-edited
        // template body whose id header still matches.
        fields.push("config_hash".to_string());
    }
    fields
}

pub fn load_manifest(run_dir: &Path) -> Result<RunManifest> {
    let path = run_dir.join(CONFIG_FILE);
    let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&content)
        .map_err(|e| Error::config(format!("{}: invalid run manifest: {e}", path.display())))
}

/// Templates from the run snapshot, in the manifest's iteration order.
pub fn load_run_templates(run_dir: &Path) -> Result<Vec<PromptTemplate>> {
    let manifest = load_manifest(run_dir)?;
    let loaded = load_templates_dir(&run_dir.join(TEMPLATES_DIR))?;
    manifest
        .template_ids
        .iter()
        .map(|id| {
            loaded
                .iter()
                .find(|t| t.id() == id)
                .cloned()
                .ok_or_else(|| {
                    Error::Resume {
                        run_dir: run_dir.to_path_buf(),
                        fields: vec![format!("templates/{id}")],
                    }
                })
        })
        .collect()
}

fn fill_pending(
    config: &ExperimentConfig,
    corpus: &LabeledCorpus,
    templates: &[PromptTemplate],
    client: &LlmClient,
    config_hash: &str,
) -> Result<RunSummary> {
    let mut summary = RunSummary::default();
    for model in &config.models {
        for template in templates {
            let cell = fill_cell(config, corpus, model, template, client, config_hash)?;
            summary.records_written += cell.records_written;
            summary.errors += cell.errors;
        }
    }
    Ok(summary)
}

fn fill_cell(
    config: &ExperimentConfig,
    corpus: &LabeledCorpus,
    model: &ModelSpec,
    template: &PromptTemplate,
    client: &LlmClient,
    config_hash: &str,
) -> Result<RunSummary> {
    let path = config
        .output_dir
        .join(RECORDS_DIR)
        .join(record_file_name(&model.name, template.id()));
    let scan = scan_record_file(&path, &model.name, template.id(), config_hash)?;
    if scan.needs_rewrite {
        let mut content = scan.kept_lines.join("\n");
        if !content.is_empty() {
            content.push('\n');
        }
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    }

    let pending: Vec<&Sample> = corpus
        .samples()
        .iter()
        .filter(|s| !scan.sample_ids.contains(&s.id))
        .collect();
    if pending.is_empty() {
        return Ok(RunSummary::default());
    }

    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    let mut writer = std::io::BufWriter::new(file);

    let mut summary = RunSummary::default();
    for batch in pending.chunks(config.parallelism) {
        let prompts = batch
            .iter()
            .map(|s| template.render(s, corpus.classes()))
            .collect::<Result<Vec<_>>>()?;
        let results = client.query_batch(model, &prompts, &config.decoding, config.parallelism)?;

        let all_transport = results
            .iter()
            .all(|r| matches!(r, Err(Error::Transport { .. })));
        if all_transport {
            // Endpoint considered unreachable; keep what we have.
            writer.flush().map_err(|e| Error::io(&path, e))?;
            let Some(Err(err)) = results.into_iter().next() else {
                unreachable!("all_transport implies a first error");
            };
            return Err(err);
        }

        for (sample, result) in batch.iter().zip(results) {
            let record = match result {
                Ok(query) => RunRecord {
                    model_name: model.name.clone(),
                    template_id: template.id().to_string(),
                    sample_id: sample.id.clone(),
                    raw_response: query.raw_text.clone(),
                    outcome: parse_response(&query.raw_text, corpus.classes()),
                    latency_ms: if config.deterministic_timing {
                        0
                    } else {
                        query.latency_ms
                    },
                    timestamp: now_timestamp(config.deterministic_timing),
                    config_hash: config_hash.to_string(),
                    error: None,
                },
                Err(e) => {
                    summary.errors += 1;
                    RunRecord {
                        model_name: model.name.clone(),
                        template_id: template.id().to_string(),
                        sample_id: sample.id.clone(),
                        raw_response: String::new(),
                        outcome: ParseOutcome::Empty,
                        latency_ms: 0,
                        timestamp: now_timestamp(config.deterministic_timing),
                        config_hash: config_hash.to_string(),
                        error: Some(e.to_string()),
                    }
                }
            };
            if record.error.is_none() {
                summary.records_written += 1;
            }
            let line = serde_json::to_string(&record)
                .map_err(|e| Error::Score(format!("serialize record: {e}")))?;
            writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .map_err(|e| Error::io(&path, e))?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}

fn now_timestamp(deterministic: bool) -> String {
    if deterministic {
        EPOCH_TIMESTAMP.to_string()
    } else {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

struct RecordScan {
    kept_lines: Vec<String>,
    sample_ids: HashSet<String>,
    needs_rewrite: bool,
}

/// Classify existing record lines. A line survives only if it parses, has no
/// error marker, matches the cell and config hash, and is not a duplicate.
/// A torn final line (no trailing newline) is dropped.
fn scan_record_file(
    path: &Path,
    model_name: &str,
    template_id: &str,
    config_hash: &str,
) -> Result<RecordScan> {
    let mut scan = RecordScan {
        kept_lines: Vec::new(),
        sample_ids: HashSet::new(),
        needs_rewrite: false,
    };
    if !path.exists() {
        return Ok(scan);
    }
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rest = content.as_str();
    while !rest.is_empty() {
        let Some((line, tail)) = rest.split_once('\n') else {
            // Torn final write.
            scan.needs_rewrite = true;
            break;
        };
        rest = tail;
        let keep = serde_json::from_str::<RunRecord>(line).ok().filter(|r| {
            r.error.is_none()
                && r.model_name == model_name
                && r.template_id == template_id
                && r.config_hash == config_hash
        });
        match keep {
            Some(record) if !scan.sample_ids.contains(&record.sample_id) => {
                scan.sample_ids.insert(record.sample_id);
                scan.kept_lines.push(line.to_string());
            }
            _ => scan.needs_rewrite = true,
        }
    }
    Ok(scan)
}

/// Strict read of one cell's records for scoring: every line must parse.
/// Error-marked records are returned too; scorers decide how to treat them.
pub fn read_cell_records(
    run_dir: &Path,
    model_name: &str,
    template_id: &str,
) -> Result<Vec<RunRecord>> {
    let path = run_dir
        .join(RECORDS_DIR)
        .join(record_file_name(model_name, template_id));
    if !path.exists() {
        return Ok(Vec::new());
    }
    let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut records = Vec::new();
    let mut bad_lines = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(record) => records.push(record),
            Err(_) => bad_lines.push(i + 1),
        }
    }
    if !bad_lines.is_empty() {
        return Err(Error::Score(format!(
            "{}: malformed record lines: {}",
            path.display(),
            bad_lines
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClassLabel;
    use crate::mockllm::{MockConfig, MockServer, PathologyProfile};
    use crate::prompting::builtin_suite;
    use std::collections::BTreeMap;

    fn test_corpus(dir: &Path, n: usize) -> (PathBuf, LabeledCorpus) {
        let classes = ["Energiewende", "Demokratie"];
        let mut csv = String::from("id,text,label\n");
        for i in 0..n {
            let class = classes[i % 2];
            csv.push_str(&format!("s{i:03},Beitrag s{i:03} zum Thema,{class}\n"));
        }
        let path = dir.join("corpus.csv");
        std::fs::write(&path, csv).unwrap();
        let corpus = crate::corpus::load_corpus(&path, CorpusFormat::Csv).unwrap();
        (path, corpus)
    }

    fn mock_for(corpus: &LabeledCorpus, seed: u64) -> MockServer {
        let gold: BTreeMap<String, ClassLabel> = corpus
            .samples()
            .iter()
            .map(|s| (s.id.clone(), s.gold.clone()))
            .collect();
        MockServer::spawn(MockConfig {
            profile: PathologyProfile::always_correct(seed),
            classes: corpus.classes().to_vec(),
            gold,
        })
        .unwrap()
    }

    fn config_for(dir: &Path, corpus_path: &Path, url: &str, models: usize) -> ExperimentConfig {
        ExperimentConfig {
            corpus_path: corpus_path.to_path_buf(),
            corpus_format: CorpusFormat::Csv,
            classes: None,
            models: (1..=models)
                .map(|i| ModelSpec {
                    name: format!("mock-{i}"),
                    endpoint_url: url.to_string(),
                    context_window: 4096,
                    max_response_tokens: 16,
                    size_rank: i,
                })
                .collect(),
            template_ids: None,
            decoding: Decoding::default(),
            parallelism: 2,
            output_dir: dir.join("run"),
            seed: 42,
            deterministic_timing: true,
        }
    }

    #[test]
    fn one_by_one_grid_against_echo_mock() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 1);
        let server = mock_for(&corpus, 1);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "")
            .into_iter()
            .take(1)
            .collect();
        let client = LlmClient::new();
        let summary = run_grid(&config, &corpus, &templates, &client).unwrap();
        assert_eq!(summary.records_written, 1);
        assert_eq!(summary.errors, 0);
        let records =
            read_cell_records(&config.output_dir, "mock-1", templates[0].id()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].raw_response, "Energiewende");
        assert!(records[0].outcome.is_valid());
    }

    #[test]
    fn grid_cardinality_and_resume_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 10);
        let server = mock_for(&corpus, 2);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 2);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "");
        assert_eq!(templates.len(), 4);
        let client = LlmClient::new();
        let summary = run_grid(&config, &corpus, &templates, &client).unwrap();
        assert_eq!(summary.records_written, 2 * 4 * 10);

        // Completed run: resume is a fixed point.
        let again = resume(&config.output_dir, &client).unwrap();
        assert_eq!(again.records_written, 0);
        assert_eq!(again.errors, 0);
    }

    #[test]
    fn resume_fills_exactly_the_missing_record() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 10);
        let server = mock_for(&corpus, 3);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "").into_iter().take(1).collect();
        let client = LlmClient::new();
        run_grid(&config, &corpus, &templates, &client).unwrap();

        // Drop the last record line.
        let path = config
            .output_dir
            .join(RECORDS_DIR)
            .join(record_file_name("mock-1", templates[0].id()));
        let content = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = content.lines().collect();
        assert_eq!(lines.len(), 10);
        let truncated = lines[..9].join("\n") + "\n";
        std::fs::write(&path, &truncated).unwrap();

        let summary = resume(&config.output_dir, &client).unwrap();
        assert_eq!(summary.records_written, 1);
        let restored = std::fs::read_to_string(&path).unwrap();
        assert_eq!(restored, content);
    }

    #[test]
    fn resume_rejects_changed_template_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 2);
        let server = mock_for(&corpus, 4);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "").into_iter().take(1).collect();
        let client = LlmClient::new();
        run_grid(&config, &corpus, &templates, &client).unwrap();

        // Tamper with the snapshot template body.
        let tdir = config.output_dir.join(TEMPLATES_DIR);
        let entry = std::fs::read_dir(&tdir).unwrap().next().unwrap().unwrap();
        let tampered = std::fs::read_to_string(entry.path())
            .unwrap()
            .replace("categorize", "categorize carefully");
        std::fs::write(entry.path(), tampered).unwrap();

        let err = resume(&config.output_dir, &client).unwrap_err();
        assert!(matches!(err, Error::Resume { .. }), "{err}");
        assert!(err.to_string().contains("templates"), "{err}");
    }

    #[test]
    fn resume_rejects_changed_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 2);
        let server = mock_for(&corpus, 5);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "").into_iter().take(1).collect();
        let client = LlmClient::new();
        run_grid(&config, &corpus, &templates, &client).unwrap();

        let mut content = std::fs::read_to_string(&corpus_path).unwrap();
        content.push_str("s999,neuer Text s999,Demokratie\n");
        std::fs::write(&corpus_path, content).unwrap();

        let err = resume(&config.output_dir, &client).unwrap_err();
        assert!(err.to_string().contains("corpus"), "{err}");
    }

    #[test]
    fn torn_final_line_is_dropped_and_refilled() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 4);
        let server = mock_for(&corpus, 6);
        let config = config_for(dir.path(), &corpus_path, &server.url(), 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "").into_iter().take(1).collect();
        let client = LlmClient::new();
        run_grid(&config, &corpus, &templates, &client).unwrap();

        let path = config
            .output_dir
            .join(RECORDS_DIR)
            .join(record_file_name("mock-1", templates[0].id()));
        let pristine = std::fs::read_to_string(&path).unwrap();
        // Cut the file mid-way through the final line.
        let cut = pristine.len() - 17;
        std::fs::write(&path, &pristine.as_bytes()[..cut]).unwrap();

        let summary = resume(&config.output_dir, &client).unwrap();
        assert_eq!(summary.records_written, 1);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), pristine);
    }

    #[test]
    fn unreachable_endpoint_aborts_with_partial_records() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus_path, corpus) = test_corpus(dir.path(), 4);
        let config = config_for(dir.path(), &corpus_path, "http://127.0.0.1:9", 1);
        let templates: Vec<PromptTemplate> = builtin_suite("", "", "").into_iter().take(1).collect();
        let client = LlmClient::with_retry(crate::llm_client::RetryPolicy {
            max_attempts: 1,
            base_backoff: std::time::Duration::from_millis(1),
        });
        let err = run_grid(&config, &corpus, &templates, &client).unwrap_err();
        assert!(matches!(err, Error::Transport { .. }), "{err}");
    }
}
