//! From-scratch count vectorization and Multinomial Naive Bayes baseline.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassLabel, Sample};
use crate::error::{Error, Result};

const MODEL_FORMAT_VERSION: u32 = 1;
const MIN_TOKEN_CHARS: usize = 2;

/// Lowercased maximal runs of Unicode alphanumerics; runs shorter than two
/// characters are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_chars = 0usize;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            run.extend(ch.to_lowercase());
            run_chars += 1;
        } else if run_chars > 0 {
            if run_chars >= MIN_TOKEN_CHARS {
                tokens.push(std::mem::take(&mut run));
            } else {
                run.clear();
            }
            run_chars = 0;
        }
    }
    if run_chars >= MIN_TOKEN_CHARS {
        tokens.push(run);
    }
    tokens
}

/// Token-to-column mapping. Tokens are sorted, so the vocabulary is a pure
/// function of the training token set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let unique: BTreeSet<String> = texts.into_iter().flat_map(tokenize).collect();
        Self::from_tokens(unique.into_iter().collect())
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Sparse token counts for one text; out-of-vocabulary tokens are dropped.
    pub fn count_vector(&self, text: &str) -> HashMap<usize, u64> {
        let mut counts = HashMap::new();
        for token in tokenize(text) {
            if let Some(col) = self.column(&token) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Fitted Multinomial Naive Bayes model.
///
/// Log priors and per-class token log likelihoods are aligned with the class
/// inventory order, which is also the prediction tie-break order.
#[derive(Debug, Clone)]
pub struct NbModel {
    alpha: f64,
    classes: Vec<ClassLabel>,
    vocabulary: Vocabulary,
    class_log_priors: Vec<f64>,
    token_log_likelihoods: Vec<Vec<f64>>,
}

/// Laplace smoothing by default; the vectorizer settings live in `tokenize`.
pub const DEFAULT_ALPHA: f64 = 1.0;

impl NbModel {
    /// Train on the given samples against an explicit class inventory.
    ///
    /// log P(c) = ln(N_c / N)
    /// log P(w|c) = ln((count(w,c) + alpha) / (total_c + alpha * |V|))
    pub fn fit(samples: &[Sample], classes: &[ClassLabel], alpha: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Train("training set is empty".into()));
        }
        if classes.is_empty() {
            return Err(Error::Train("class inventory is empty".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::config(format!(
                "smoothing alpha must be positive, got {alpha}"
            )));
        }

        let class_index: HashMap<&ClassLabel, usize> =
            classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut doc_counts = vec![0u64; classes.len()];
        for sample in samples {
            let Some(&ci) = class_index.get(&sample.gold) else {
                return Err(Error::Train(format!(
                    "sample '{}' has label '{}' outside the class inventory",
                    sample.id,
                    sample.gold.name()
                )));
            };
            doc_counts[ci] += 1;
        }
        if let Some(pos) = doc_counts.iter().position(|&n| n == 0) {
            return Err(Error::Train(format!(
                "class '{}' has no training samples",
                classes[pos].name()
            )));
        }

        let vocabulary = Vocabulary::build(samples.iter().map(|s| s.text.as_str()));
        let vocab_size = vocabulary.len();

        let mut token_counts = vec![vec![0u64; vocab_size]; classes.len()];
        for sample in samples {
            let ci = class_index[&sample.gold];
            for (col, count) in vocabulary.count_vector(&sample.text) {
                token_counts[ci][col] += count;
            }
        }

        let total_docs = samples.len() as f64;
        let class_log_priors = doc_counts
            .iter()
            .map(|&n| (n as f64 / total_docs).ln())
            .collect();

        let token_log_likelihoods = token_counts
            .iter()
            .map(|counts| {
                let total: u64 = counts.iter().sum();
                let denom = total as f64 + alpha * vocab_size as f64;
                counts
                    .iter()
                    .map(|&c| ((c as f64 + alpha) / denom).ln())
                    .collect()
            })
            .collect();

        Ok(NbModel {
            alpha,
            classes: classes.to_vec(),
            vocabulary,
            class_log_priors,
            token_log_likelihoods,
        })
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn class_log_priors(&self) -> &[f64] {
        &self.class_log_priors
    }

    pub fn token_log_likelihoods(&self) -> &[Vec<f64>] {
        &self.token_log_likelihoods
    }

    /// Unnormalized log posterior per class, aligned with the inventory.
    /// Out-of-vocabulary tokens contribute nothing.
    pub fn log_scores(&self, text: &str) -> Vec<f64> {
        let counts = self.vocabulary.count_vector(text);
        self.class_log_priors
            .iter()
            .enumerate()
            .map(|(ci, prior)| {
                let likelihood: f64 = counts
                    .iter()
                    .map(|(&col, &n)| n as f64 * self.token_log_likelihoods[ci][col])
                    .sum();
                prior + likelihood
            })
            .collect()
    }

    /// Argmax class; ties break toward the earlier inventory position.
    pub fn predict(&self, text: &str) -> &ClassLabel {
        let scores = self.log_scores(text);
        let mut best = 0;
        for (i, score) in scores.iter().enumerate().skip(1) {
            if *score > scores[best] {
                best = i;
            }
        }
        &self.classes[best]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = PersistedModel {
            version: MODEL_FORMAT_VERSION,
            alpha: self.alpha,
            classes: self.classes.clone(),
            vocabulary: self.vocabulary.tokens.clone(),
            log_priors: self.class_log_priors.clone(),
            log_likelihoods: self.token_log_likelihoods.clone(),
        };
        let json = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::data(format!("serialize model: {e}")))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: PersistedModel = serde_json::from_str(&json)
            .map_err(|e| Error::data(format!("{}: invalid model file: {e}", path.display())))?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::data(format!(
                "{}: unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                doc.version
            )));
        }
        if doc.log_priors.len() != doc.classes.len()
            || doc.log_likelihoods.len() != doc.classes.len()
            || doc
                .log_likelihoods
                .iter()
                .any(|row| row.len() != doc.vocabulary.len())
        {
            return Err(Error::data(format!(
                "{}: model arrays are inconsistent with classes/vocabulary",
                path.display()
            )));
        }
        Ok(NbModel {
            alpha: doc.alpha,
            classes: doc.classes,
            vocabulary: Vocabulary::from_tokens(doc.vocabulary),
            class_log_priors: doc.log_priors,
            token_log_likelihoods: doc.log_likelihoods,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PersistedModel {
    version: u32,
    alpha: f64,
    classes: Vec<ClassLabel>,
    vocabulary: Vec<String>,
    log_priors: Vec<f64>,
    log_likelihoods: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(id: &str, text: &str, label: &str) -> Sample {
        Sample {
            id: id.into(),
            text: text.into(),
            gold: ClassLabel::new(label).unwrap(),
        }
    }

    fn labels(names: &[&str]) -> Vec<ClassLabel> {
        names.iter().map(|n| ClassLabel::new(*n).unwrap()).collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphanumerics() {
        assert_eq!(
            tokenize("Die Energiewende kommt!"),
            vec!["die", "energiewende", "kommt"]
        );
    }

    #[test]
    fn tokenize_empty_is_empty() {
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_drops_single_char_runs() {
        assert_eq!(tokenize("A b2 c"), vec!["b2"]);
    }

    #[test]
    fn fit_two_doc_example_matches_closed_form() {
        let train = vec![sample("1", "aa aa", "X"), sample("2", "bb bb", "Y")];
        let classes = labels(&["X", "Y"]);
        let model = NbModel::fit(&train, &classes, 1.0).unwrap();

        assert!((model.class_log_priors()[0].exp() - 0.5).abs() < 1e-12);
        let aa = model.vocabulary().column("aa").unwrap();
        // P(aa|X) = (2 + 1) / (2 + 2) = 0.75
        assert!((model.token_log_likelihoods()[0][aa].exp() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_class_prior_is_zero() {
        let train = vec![sample("1", "aa bb", "X")];
        let model = NbModel::fit(&train, &labels(&["X"]), 1.0).unwrap();
        assert_eq!(model.class_log_priors()[0], 0.0);
    }

    #[test]
    fn balanced_four_class_priors() {
        let mut train = Vec::new();
        for i in 0..100 {
            let label = ["A", "B", "C", "D"][i % 4];
            train.push(sample(&format!("s{i}"), &format!("wort{i} inhalt"), label));
        }
        let model = NbModel::fit(&train, &labels(&["A", "B", "C", "D"]), 1.0).unwrap();
        for prior in model.class_log_priors() {
            assert!((prior - 0.25f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn class_without_samples_is_a_train_error() {
        let train = vec![sample("1", "aa bb", "X")];
        let err = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap_err();
        assert!(matches!(err, Error::Train(_)));
        assert!(err.to_string().contains("'Y'"));
    }

    #[test]
    fn oov_only_input_predicts_max_prior_class() {
        let train = vec![
            sample("1", "aa aa", "X"),
            sample("2", "aa bb", "X"),
            sample("3", "bb bb", "Y"),
        ];
        let model = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap();
        assert_eq!(model.predict("zz qq").name(), "X");
    }

    #[test]
    fn predict_two_doc_example() {
        let train = vec![sample("1", "aa aa", "X"), sample("2", "bb bb", "Y")];
        let model = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap();
        assert_eq!(model.predict("aa").name(), "X");
    }

    #[test]
    fn prior_tie_breaks_to_inventory_order() {
        let train = vec![sample("1", "aa aa", "X"), sample("2", "bb bb", "Y")];
        let model = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap();
        // Equal priors, no vocabulary hits: first class wins.
        assert_eq!(model.predict("zz").name(), "X");
    }

    #[test]
    fn likelihoods_normalize_per_class() {
        let train = vec![
            sample("1", "aa bb cc", "X"),
            sample("2", "bb cc dd", "Y"),
            sample("3", "dd ee", "Y"),
        ];
        let model = NbModel::fit(&train, &labels(&["X", "Y"]), 0.5).unwrap();
        let priors: f64 = model.class_log_priors().iter().map(|p| p.exp()).sum();
        assert!((priors - 1.0).abs() < 1e-9);
        for row in model.token_log_likelihoods() {
            let total: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicating_training_docs_preserves_count_ratios() {
        // Priors are exact ratios at any alpha. Smoothed likelihoods shift by
        // O(alpha) under duplication, so the count-ratio part is checked in
        // the small-alpha limit, and decisions must not move either way.
        let train = vec![
            sample("1", "aa bb", "X"),
            sample("2", "bb cc", "Y"),
            sample("3", "cc cc aa", "Y"),
        ];
        let doubled: Vec<Sample> = train
            .iter()
            .cloned()
            .chain(train.iter().enumerate().map(|(i, s)| Sample {
                id: format!("dup{i}"),
                ..s.clone()
            }))
            .collect();
        let classes = labels(&["X", "Y"]);

        let a = NbModel::fit(&train, &classes, 1.0).unwrap();
        let b = NbModel::fit(&doubled, &classes, 1.0).unwrap();
        for (x, y) in a.class_log_priors().iter().zip(b.class_log_priors()) {
            assert!((x - y).abs() < 1e-12);
        }
        for text in ["aa", "bb cc", "cc aa", "dd"] {
            assert_eq!(a.predict(text), b.predict(text));
        }

        // Tokens a class never saw carry pure smoothing mass that scales as
        // alpha/T; only the positive-count cells are true count ratios.
        let a0 = NbModel::fit(&train, &classes, 1e-9).unwrap();
        let b0 = NbModel::fit(&doubled, &classes, 1e-9).unwrap();
        for (ci, class) in classes.iter().enumerate() {
            let mut counts = vec![0u64; a0.vocabulary().len()];
            for s in train.iter().filter(|s| &s.gold == class) {
                for (col, n) in a0.vocabulary().count_vector(&s.text) {
                    counts[col] += n;
                }
            }
            for (col, &count) in counts.iter().enumerate() {
                if count > 0 {
                    let x = a0.token_log_likelihoods()[ci][col];
                    let y = b0.token_log_likelihoods()[ci][col];
                    assert!((x - y).abs() < 1e-6, "class {ci} col {col}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn save_load_roundtrip_preserves_scores() {
        let train = vec![
            sample("1", "aa bb cc", "X"),
            sample("2", "bb cc dd", "Y"),
        ];
        let model = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap();
        let file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        model.save(file.path()).unwrap();
        let loaded = NbModel::load(file.path()).unwrap();
        for text in ["aa bb", "dd", "unseen words"] {
            assert_eq!(model.log_scores(text), loaded.log_scores(text));
        }
        assert_eq!(model.classes(), loaded.classes());
    }

    proptest! {
        #[test]
        fn predict_is_bag_of_words(perm in proptest::sample::subsequence(
            vec!["aa", "bb", "cc", "dd", "aa", "bb"], 0..6)
        ) {
            let train = vec![
                sample("1", "aa bb aa", "X"),
                sample("2", "cc dd", "Y"),
            ];
            let model = NbModel::fit(&train, &labels(&["X", "Y"]), 1.0).unwrap();
            let forward = perm.join(" ");
            let mut rev = perm.clone();
            rev.reverse();
            let backward = rev.join(" ");
            let a = model.log_scores(&forward);
            let b = model.log_scores(&backward);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
