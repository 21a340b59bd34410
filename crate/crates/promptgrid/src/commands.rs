//! Command implementations behind the CLI: baseline training, grid runs,
//! scoring, prediction import, and cross-method reporting.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::AppConfig;
use crate::corpus::{split, ClassLabel, LabeledCorpus, Sample};
use crate::error::{Error, Result};
use crate::evaluation::{score_classifier, MetricsReport};
use crate::llm_client::LlmClient;
use crate::naive_bayes::NbModel;
use crate::report::{
    comparison_table, plot_csv, plot_points, plot_svg, read_report_json, score_run_dir,
    write_report_json, CellScore, ComparisonTable,
};
use crate::runner::{resume, run_grid, RunSummary};

pub struct BaselineArtifacts {
    pub report: MetricsReport,
    pub model_path: PathBuf,
    pub report_path: PathBuf,
    pub table_path: PathBuf,
}

/// Train the Naive Bayes baseline on the configured split and score it on
/// the held-out part.
pub fn cmd_baseline(config: &AppConfig, out_dir: &Path) -> Result<BaselineArtifacts> {
    let corpus = config.load_corpus()?;
    let split = split(&corpus, config.split.ratio, config.split.seed)?;
    let train: Vec<Sample> = split
        .train
        .iter()
        .map(|id| corpus.get(id).expect("split ids come from corpus").clone())
        .collect();
    let model = NbModel::fit(&train, corpus.classes(), config.baseline.alpha)?;

    let predictions: Vec<(ClassLabel, ClassLabel)> = split
        .test
        .iter()
        .map(|id| {
            let sample = corpus.get(id).expect("split ids come from corpus");
            (sample.gold.clone(), model.predict(&sample.text).clone())
        })
        .collect();
    let report = score_classifier(&predictions, corpus.classes())?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let model_path = out_dir.join("baseline_model.json");
    model.save(&model_path)?;
    let report_path = out_dir.join("baseline_report.json");
    write_report_json(&report, &report_path)?;
    let table = comparison_table(&[("baseline-nb".to_string(), report.clone())])?;
    let table_path = out_dir.join("baseline_table.txt");
    std::fs::write(&table_path, table.to_text()).map_err(|e| Error::io(&table_path, e))?;

    Ok(BaselineArtifacts {
        report,
        model_path,
        report_path,
        table_path,
    })
}

/// Execute the configured model × template × sample grid.
pub fn cmd_run(config: &AppConfig) -> Result<RunSummary> {
    let corpus = config.load_corpus()?;
    let templates = config.resolve_templates()?;
    let experiment = config.to_experiment_config()?;
    let client = LlmClient::new();
    run_grid(&experiment, &corpus, &templates, &client)
}

pub fn cmd_resume(run_dir: &Path) -> Result<RunSummary> {
    let client = LlmClient::new();
    resume(run_dir, &client)
}

pub struct ScoreArtifacts {
    pub cells: Vec<CellScore>,
    pub warnings: Vec<String>,
    pub reports_dir: PathBuf,
    pub table_path: PathBuf,
    pub table_csv_path: PathBuf,
    pub plot_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

/// Score every grid cell of a run directory and emit the per-cell reports,
/// the comparison table, and the tier/size plot data.
pub fn cmd_score(run_dir: &Path, out_dir: &Path, emit_svg: bool) -> Result<ScoreArtifacts> {
    let scores = score_run_dir(run_dir)?;
    if scores.cells.is_empty() {
        return Err(Error::Score(format!(
            "{}: no scorable cells",
            run_dir.display()
        )));
    }

    let reports_dir = out_dir.join("reports");
    std::fs::create_dir_all(&reports_dir).map_err(|e| Error::io(&reports_dir, e))?;
    for cell in &scores.cells {
        let path = reports_dir.join(format!(
            "{}__{}.json",
            crate::runner::sanitize_component(&cell.model_name),
            cell.template_id
        ));
        write_report_json(&cell.report, &path)?;
    }

    let methods: Vec<(String, MetricsReport)> = scores
        .cells
        .iter()
        .map(|c| (c.method_name(), c.report.clone()))
        .collect();
    let table = comparison_table(&methods)?;
    let table_path = out_dir.join("score_table.txt");
    std::fs::write(&table_path, table.to_text()).map_err(|e| Error::io(&table_path, e))?;
    let table_csv_path = out_dir.join("score_table.csv");
    std::fs::write(&table_csv_path, table.to_csv()?).map_err(|e| Error::io(&table_csv_path, e))?;

    let points = plot_points(&scores.cells)?;
    let plot_path = out_dir.join("plot.csv");
    std::fs::write(&plot_path, plot_csv(&points)?).map_err(|e| Error::io(&plot_path, e))?;
    let svg_path = if emit_svg {
        let path = out_dir.join("plot.svg");
        std::fs::write(&path, plot_svg(&points)).map_err(|e| Error::io(&path, e))?;
        Some(path)
    } else {
        None
    };

    Ok(ScoreArtifacts {
        cells: scores.cells,
        warnings: scores.warnings,
        reports_dir,
        table_path,
        table_csv_path,
        plot_path,
        svg_path,
    })
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    id: String,
    predicted_label: String,
}

/// Load externally produced predictions (id,predicted_label) and score them
/// against the corpus gold labels. Rows may cover a subset of the corpus,
/// e.g. only the test split of a fine-tuned model.
pub fn cmd_import(
    config: &AppConfig,
    predictions_path: &Path,
    out_dir: &Path,
) -> Result<MetricsReport> {
    let corpus = config.load_corpus()?;
    let pairs = read_predictions(predictions_path, &corpus)?;
    let report = score_classifier(&pairs, corpus.classes())?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_report_json(&report, &out_dir.join("imported_report.json"))?;
    let table = comparison_table(&[("imported".to_string(), report.clone())])?;
    std::fs::write(out_dir.join("imported_table.txt"), table.to_text())
        .map_err(|e| Error::io(out_dir.join("imported_table.txt"), e))?;
    Ok(report)
}

fn read_predictions(
    path: &Path,
    corpus: &LabeledCorpus,
) -> Result<Vec<(ClassLabel, ClassLabel)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, row) in reader.deserialize::<PredictionRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::data(format!("{}:{line}: {e}", path.display())))?;
        let sample = corpus.get(&row.id).ok_or_else(|| {
            Error::data(format!(
                "{}:{line}: prediction for unknown sample '{}'",
                path.display(),
                row.id
            ))
        })?;
        let predicted = corpus
            .classes()
            .iter()
            .find(|c| c.name() == row.predicted_label)
            .ok_or_else(|| {
                Error::data(format!(
                    "{}:{line}: predicted label '{}' not in the class inventory",
                    path.display(),
                    row.predicted_label
                ))
            })?;
        pairs.push((sample.gold.clone(), predicted.clone()));
    }
    if pairs.is_empty() {
        return Err(Error::data(format!(
            "{}: prediction file has no rows",
            path.display()
        )));
    }
    Ok(pairs)
}

/// Merge grid cell scores with optional baseline and imported reports into
/// one cross-method comparison table.
pub fn cmd_report(
    run_dir: &Path,
    baseline_report: Option<&Path>,
    imported_report: Option<&Path>,
    out_dir: &Path,
) -> Result<ComparisonTable> {
    let mut methods: Vec<(String, MetricsReport)> = Vec::new();
    if let Some(path) = baseline_report {
        methods.push(("baseline-nb".to_string(), read_report_json(path)?));
    }
    let scores = score_run_dir(run_dir)?;
    for cell in &scores.cells {
        methods.push((cell.method_name(), cell.report.clone()));
    }
    if let Some(path) = imported_report {
        methods.push(("imported".to_string(), read_report_json(path)?));
    }
    let table = comparison_table(&methods)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    std::fs::write(out_dir.join("report_table.txt"), table.to_text())
        .map_err(|e| Error::io(out_dir.join("report_table.txt"), e))?;
    std::fs::write(out_dir.join("report_table.csv"), table.to_csv()?)
        .map_err(|e| Error::io(out_dir.join("report_table.csv"), e))?;
    Ok(table)
}
