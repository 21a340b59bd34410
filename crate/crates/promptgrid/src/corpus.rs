//! Labeled corpora: loading, validation, serialization, and stratified splits.
//!
//! A corpus owns the class inventory used by every other module. Sample order
//! is file order, which anchors all downstream determinism (grid iteration,
//! split membership, vocabulary construction).

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A class name from the annotation scheme, e.g. "Energiewende".
///
/// Non-empty, no leading/trailing whitespace; unique case-insensitively
/// within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(String);

impl ClassLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::data("class label must be non-empty"));
        }
        if name.trim() != name {
            return Err(Error::data(format!(
                "class label '{name}' has leading or trailing whitespace"
            )));
        }
        Ok(ClassLabel(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Case-insensitive comparison against a candidate string.
    pub fn matches_ignore_case(&self, candidate: &str) -> bool {
        self.0.to_lowercase() == candidate.to_lowercase()
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One annotated text with its gold class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    #[serde(rename = "label")]
    pub gold: ClassLabel,
}

/// File format for corpus interchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::config(format!(
                "unknown corpus format '{other}' (expected csv or jsonl)"
            ))),
        }
    }
}

/// Immutable validated set of samples plus the class inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    samples: Vec<Sample>,
    classes: Vec<ClassLabel>,
    index: HashMap<String, usize>,
}

impl LabeledCorpus {
    /// Validate and assemble a corpus. Class inventory order is preserved.
    pub fn new(samples: Vec<Sample>, classes: Vec<ClassLabel>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::data("class inventory must be non-empty"));
        }
        let mut lowered = HashSet::new();
        for class in &classes {
            if !lowered.insert(class.name().to_lowercase()) {
                return Err(Error::data(format!(
                    "duplicate class '{}' (class names are unique case-insensitively)",
                    class.name()
                )));
            }
        }
        let class_set: HashSet<&ClassLabel> = classes.iter().collect();
        let mut index = HashMap::with_capacity(samples.len());
        for (pos, sample) in samples.iter().enumerate() {
            if sample.id.is_empty() {
                return Err(Error::data(format!("sample at position {pos} has empty id")));
            }
            if sample.text.is_empty() {
                return Err(Error::data(format!("sample '{}' has empty text", sample.id)));
            }
            if !class_set.contains(&sample.gold) {
                return Err(Error::data(format!(
                    "sample '{}' has label '{}' outside the class inventory",
                    sample.id,
                    sample.gold.name()
                )));
            }
            if index.insert(sample.id.clone(), pos).is_some() {
                return Err(Error::data(format!("duplicate sample id '{}'", sample.id)));
            }
        }
        Ok(LabeledCorpus {
            samples,
            classes,
            index,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&pos| &self.samples[pos])
    }
}

/// Deterministic train/test partition of a corpus by sample id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Load a corpus, discovering the class inventory from the file in order of
/// first appearance.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<LabeledCorpus> {
    load_corpus_impl(path, format, None)
}

/// Load a corpus against a pinned class inventory. Labels outside the
/// inventory are data errors. Pinning is what gives prompt rendering and
/// hallucination detection a closed class set.
pub fn load_corpus_with_classes(
    path: &Path,
    format: CorpusFormat,
    classes: Vec<ClassLabel>,
) -> Result<LabeledCorpus> {
    load_corpus_impl(path, format, Some(classes))
}

fn load_corpus_impl(
    path: &Path,
    format: CorpusFormat,
    pinned: Option<Vec<ClassLabel>>,
) -> Result<LabeledCorpus> {
    let records = match format {
        CorpusFormat::Csv => read_csv_records(path)?,
        CorpusFormat::Jsonl => read_jsonl_records(path)?,
    };

    let mut samples = Vec::with_capacity(records.len());
    let mut discovered: Vec<ClassLabel> = Vec::new();
    let mut seen_lower: HashSet<String> = HashSet::new();
    for (line, raw) in records {
        if raw.text.is_empty() {
            return Err(Error::data(format!(
                "{}:{line}: record '{}' has empty text",
                path.display(),
                raw.id
            )));
        }
        let gold = ClassLabel::new(raw.label.clone()).map_err(|e| {
            Error::data(format!("{}:{line}: {e}", path.display()))
        })?;
        if let Some(classes) = &pinned {
            if !classes.iter().any(|c| c == &gold) {
                return Err(Error::data(format!(
                    "{}:{line}: label '{}' not in the configured class list",
                    path.display(),
                    gold.name()
                )));
            }
        } else if seen_lower.insert(gold.name().to_lowercase()) {
            discovered.push(gold.clone());
        }
        samples.push(Sample {
            id: raw.id,
            text: raw.text,
            gold,
        });
    }

    let classes = pinned.unwrap_or(discovered);
    LabeledCorpus::new(samples, classes)
}

#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    id: String,
    text: String,
    label: String,
}

fn read_csv_records(path: &Path) -> Result<Vec<(u64, RawRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
        .clone();
    for required in ["id", "text", "label"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::data(format!(
                "{}: missing required CSV column '{required}'",
                path.display()
            )));
        }
    }
    let mut out = Vec::new();
    for result in reader.deserialize::<RawRecord>() {
        let record = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line().to_string())
                .unwrap_or_else(|| "?".to_string());
            Error::data(format!("{}:{line}: {e}", path.display()))
        })?;
        // csv positions point at the record start; report the data line.
        let line = out.len() as u64 + 2;
        out.push((line, record));
    }
    Ok(out)
}

fn read_jsonl_records(path: &Path) -> Result<Vec<(u64, RawRecord)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!("{}:{line_no}: invalid JSONL record: {e}", path.display()))
        })?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Serialize a corpus back to disk in the requested format.
pub fn save_corpus(corpus: &LabeledCorpus, path: &Path, format: CorpusFormat) -> Result<()> {
    match format {
        CorpusFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)
                .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            writer
                .write_record(["id", "text", "label"])
                .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            for sample in corpus.samples() {
                writer
                    .write_record([&sample.id, &sample.text, sample.gold.name()])
                    .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            }
            writer
                .flush()
                .map_err(|e| Error::io(path, e))?;
        }
        CorpusFormat::Jsonl => {
            let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            for sample in corpus.samples() {
                let raw = RawRecord {
                    id: sample.id.clone(),
                    text: sample.text.clone(),
                    label: sample.gold.name().to_string(),
                };
                let line = serde_json::to_string(&raw)
                    .map_err(|e| Error::data(format!("serialize record '{}': {e}", raw.id)))?;
                writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
    }
    Ok(())
}

/// Stratified, seeded train/test split.
///
/// Each class is split independently: round(ratio * |class|) samples go to
/// train, the rest to test. Membership is drawn from a per-class RNG keyed by
/// (seed, class name), so the result depends only on the inputs. Output id
/// lists preserve corpus order.
pub fn split(corpus: &LabeledCorpus, ratio: f64, seed: u64) -> Result<Split> {
    if corpus.is_empty() {
        return Err(Error::data("cannot split an empty corpus"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config(format!(
            "split ratio must be inside (0, 1), got {ratio}"
        )));
    }

    let mut in_train = vec![false; corpus.len()];
    for class in corpus.classes() {
        let members: Vec<usize> = corpus
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| &s.gold == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let take = (ratio * members.len() as f64).round() as usize;
        let mut shuffled = members.clone();
        let mut rng = class_rng(seed, class.name());
        shuffled.shuffle(&mut rng);
        for &idx in shuffled.iter().take(take) {
            in_train[idx] = true;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, sample) in corpus.samples().iter().enumerate() {
        if in_train[i] {
            train.push(sample.id.clone());
        } else {
            test.push(sample.id.clone());
        }
    }
    Ok(Split { train, test, seed })
}

fn class_rng(seed: u64, class_name: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(class_name.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}
