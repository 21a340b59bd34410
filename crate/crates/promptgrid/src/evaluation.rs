//! Strict free-form response parsing and metric computation.
//!
//! The parser accepts only exact case-insensitive matches against the class
//! inventory. Responses that would match after trimming, or that bury a class
//! name inside extra characters, are excluded as noise; everything else
//! non-empty is a hallucination. The taxonomy keeps the two failure modes
//! separately measurable.

use serde::{Deserialize, Serialize};

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};

/// Classification of one raw model response against the class inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseOutcome {
    /// Response is exactly one inventory class, case-insensitively.
    ValidMatch { label: ClassLabel },
    /// Non-empty response matching no inventory class at all.
    Hallucinated { text: String },
    /// Response that names a class but fails the strict rule (leading or
    /// trailing whitespace, or surrounding characters).
    NoiseExcluded { text: String },
    /// Empty (or whitespace-only) response.
    Empty,
}

impl ParseOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ParseOutcome::ValidMatch { .. })
    }
}

/// Strictly parse a raw response. Total function; never fails.
pub fn parse_response(raw: &str, classes: &[ClassLabel]) -> ParseOutcome {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return ParseOutcome::Empty;
    }

    for class in classes {
        if class.matches_ignore_case(raw) {
            return ParseOutcome::ValidMatch {
                label: class.clone(),
            };
        }
    }

    // Would have matched after trimming: excluded for leading/trailing space.
    if classes.iter().any(|c| c.matches_ignore_case(trimmed)) {
        return ParseOutcome::NoiseExcluded { text: raw.to_string() };
    }

    // Contains a class name surrounded by extra characters.
    let lowered = raw.to_lowercase();
    if classes
        .iter()
        .any(|c| lowered.contains(&c.name().to_lowercase()))
    {
        return ParseOutcome::NoiseExcluded { text: raw.to_string() };
    }

    ParseOutcome::Hallucinated {
        text: trimmed.to_string(),
    }
}

/// How non-`ValidMatch` outcomes enter accuracy denominators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnparsedPolicy {
    /// Default: unusable output counts as an error for its gold class.
    CountAsError,
    /// Sensitivity mode: only parseable responses enter the denominator.
    DropFromDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Prompt,
    Classifier,
}

/// Per-class scores. `accuracy` is the strict-match accuracy in prompt mode
/// and the recall in classifier mode; precision/recall/f1 are only present in
/// classifier mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassLabel,
    pub support: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
}

/// Scores for one method or grid cell.
///
/// `macro_average` is the unweighted mean of per-class accuracy in prompt
/// mode and the macro F1 in classifier mode. The four outcome rates always
/// partition the full input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub total: usize,
    pub per_class: Vec<ClassMetrics>,
    pub macro_average: f64,
    pub macro_accuracy: f64,
    pub micro_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weighted_f1: Option<f64>,
    pub match_rate: f64,
    pub hallucination_rate: f64,
    pub noise_rate: f64,
    pub empty_rate: f64,
}

impl MetricsReport {
    /// Copy with every score rounded to four decimals, for display output.
    /// Machine outputs keep full precision.
    pub fn rounded_for_display(&self) -> MetricsReport {
        fn r(x: f64) -> f64 {
            (x * 10_000.0).round() / 10_000.0
        }
        MetricsReport {
            mode: self.mode,
            total: self.total,
            per_class: self
                .per_class
                .iter()
                .map(|c| ClassMetrics {
                    class: c.class.clone(),
                    support: c.support,
                    accuracy: c.accuracy.map(r),
                    precision: c.precision.map(r),
                    recall: c.recall.map(r),
                    f1: c.f1.map(r),
                })
                .collect(),
            macro_average: r(self.macro_average),
            macro_accuracy: r(self.macro_accuracy),
            micro_accuracy: r(self.micro_accuracy),
            weighted_f1: self.weighted_f1.map(r),
            match_rate: r(self.match_rate),
            hallucination_rate: r(self.hallucination_rate),
            noise_rate: r(self.noise_rate),
            empty_rate: r(self.empty_rate),
        }
    }
}

/// Score a prompt-based run from (gold, outcome) pairs.
pub fn score_prompt_run(
    outcomes: &[(ClassLabel, ParseOutcome)],
    classes: &[ClassLabel],
) -> Result<MetricsReport> {
    score_prompt_run_with(outcomes, classes, UnparsedPolicy::CountAsError)
}

pub fn score_prompt_run_with(
    outcomes: &[(ClassLabel, ParseOutcome)],
    classes: &[ClassLabel],
    policy: UnparsedPolicy,
) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(Error::Score("cannot score an empty outcome list".into()));
    }
    for (gold, _) in outcomes {
        if !classes.contains(gold) {
            return Err(Error::Score(format!(
                "gold label '{}' not in the class inventory",
                gold.name()
            )));
        }
    }

    let n = outcomes.len();
    let mut matches = 0usize;
    let mut hallucinated = 0usize;
    let mut noise = 0usize;
    let mut empty = 0usize;
    for (_, outcome) in outcomes {
        match outcome {
            ParseOutcome::ValidMatch { .. } => matches += 1,
            ParseOutcome::Hallucinated { .. } => hallucinated += 1,
            ParseOutcome::NoiseExcluded { .. } => noise += 1,
            ParseOutcome::Empty => empty += 1,
        }
    }

    let mut per_class = Vec::with_capacity(classes.len());
    let mut accuracies = Vec::new();
    let mut correct_total = 0usize;
    let mut denom_total = 0usize;
    for class in classes {
        let mut support = 0usize;
        let mut denom = 0usize;
        let mut correct = 0usize;
        for (gold, outcome) in outcomes {
            if gold != class {
                continue;
            }
            support += 1;
            let counted = match policy {
                UnparsedPolicy::CountAsError => true,
                UnparsedPolicy::DropFromDenominator => outcome.is_valid(),
            };
            if counted {
                denom += 1;
            }
            if let ParseOutcome::ValidMatch { label } = outcome {
                if label == gold {
                    correct += 1;
                }
            }
        }
        correct_total += correct;
        denom_total += denom;
        let accuracy = if denom > 0 {
            Some(correct as f64 / denom as f64)
        } else {
            None
        };
        if let Some(a) = accuracy {
            accuracies.push(a);
        }
        per_class.push(ClassMetrics {
            class: class.clone(),
            support,
            accuracy,
            precision: None,
            recall: None,
            f1: None,
        });
    }

    let macro_accuracy = if accuracies.is_empty() {
        0.0
    } else {
        accuracies.iter().sum::<f64>() / accuracies.len() as f64
    };
    let micro_accuracy = if denom_total > 0 {
        correct_total as f64 / denom_total as f64
    } else {
        0.0
    };

    Ok(MetricsReport {
        mode: EvalMode::Prompt,
        total: n,
        per_class,
        macro_average: macro_accuracy,
        macro_accuracy,
        micro_accuracy,
        weighted_f1: None,
        match_rate: matches as f64 / n as f64,
        hallucination_rate: hallucinated as f64 / n as f64,
        noise_rate: noise as f64 / n as f64,
        empty_rate: empty as f64 / n as f64,
    })
}

/// Row-per-gold, column-per-predicted confusion counts in inventory order.
pub fn confusion_matrix(
    predictions: &[(ClassLabel, ClassLabel)],
    classes: &[ClassLabel],
) -> Result<Vec<Vec<usize>>> {
    let index = |label: &ClassLabel| -> Result<usize> {
        classes.iter().position(|c| c == label).ok_or_else(|| {
            Error::Score(format!(
                "label '{}' not in the class inventory",
                label.name()
            ))
        })
    };
    let mut matrix = vec![vec![0usize; classes.len()]; classes.len()];
    for (gold, predicted) in predictions {
        matrix[index(gold)?][index(predicted)?] += 1;
    }
    Ok(matrix)
}

/// Score methods that always answer with an inventory class (the Naive Bayes
/// baseline and imported fine-tuned predictions).
pub fn score_classifier(
    predictions: &[(ClassLabel, ClassLabel)],
    classes: &[ClassLabel],
) -> Result<MetricsReport> {
    if predictions.is_empty() {
        return Err(Error::Score("cannot score an empty prediction list".into()));
    }
    let matrix = confusion_matrix(predictions, classes)?;
    let n = predictions.len();

    let mut per_class = Vec::with_capacity(classes.len());
    let mut f1s = Vec::new();
    let mut recalls = Vec::new();
    let mut weighted_f1_sum = 0.0;
    let mut correct = 0usize;
    for (ci, class) in classes.iter().enumerate() {
        let tp = matrix[ci][ci];
        let support: usize = matrix[ci].iter().sum();
        let predicted: usize = matrix.iter().map(|row| row[ci]).sum();
        correct += tp;

        // 0-convention for undefined ratios.
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };

        if support > 0 || predicted > 0 {
            f1s.push(f1);
        }
        if support > 0 {
            recalls.push(recall);
            weighted_f1_sum += support as f64 * f1;
        }
        per_class.push(ClassMetrics {
            class: class.clone(),
            support,
            accuracy: if support > 0 { Some(recall) } else { None },
            precision: Some(precision),
            recall: Some(recall),
            f1: Some(f1),
        });
    }

    let macro_f1 = if f1s.is_empty() {
        0.0
    } else {
        f1s.iter().sum::<f64>() / f1s.len() as f64
    };
    let macro_accuracy = if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    };

    Ok(MetricsReport {
        mode: EvalMode::Classifier,
        total: n,
        per_class,
        macro_average: macro_f1,
        macro_accuracy,
        micro_accuracy: correct as f64 / n as f64,
        weighted_f1: Some(weighted_f1_sum / n as f64),
        match_rate: 1.0,
        hallucination_rate: 0.0,
        noise_rate: 0.0,
        empty_rate: 0.0,
    })
}
