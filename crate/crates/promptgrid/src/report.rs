//! Scoring of run directories and emission of comparison tables and plot
//! data.
//!
//! Tables compare methods column-wise per class; plot data assumes a
//! sequential relationship between model size and score, one series per
//! prompt tier. Emission is data-first: CSV for machines, fixed-width text
//! for terminals, and an optional static SVG line chart.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{score_prompt_run, EvalMode, MetricsReport};
use crate::prompting::{Language, PromptTier, SegmentOrder};
use crate::runner::{load_manifest, load_run_templates, read_cell_records};

/// Scores for one (model, template) grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellScore {
    pub model_name: String,
    pub size_rank: usize,
    pub template_id: String,
    pub tier: PromptTier,
    pub language: Language,
    pub order: SegmentOrder,
    pub report: MetricsReport,
}

impl CellScore {
    /// Column label in comparison tables.
    pub fn method_name(&self) -> String {
        format!(
            "{}+{}-{}-{}",
            self.model_name,
            self.tier.as_str(),
            self.language.as_str(),
            self.order.as_str()
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunScores {
    pub cells: Vec<CellScore>,
    pub warnings: Vec<String>,
}

/// Score every grid cell of a run directory. Pure with respect to the run
/// directory: records are only read. Partial cells score what exists, with a
/// warning; error records are skipped and warned about.
pub fn score_run_dir(run_dir: &Path) -> Result<RunScores> {
    let manifest = load_manifest(run_dir)?;
    let corpus = manifest.config.load_corpus()?;
    let templates = load_run_templates(run_dir)?;

    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for model in &manifest.config.models {
        for template in &templates {
            let records = read_cell_records(run_dir, &model.name, template.id())?;
            let mut outcomes = Vec::with_capacity(records.len());
            let mut skipped_errors = 0usize;
            for record in &records {
                if record.error.is_some() {
                    skipped_errors += 1;
                    continue;
                }
                let sample = corpus.get(&record.sample_id).ok_or_else(|| {
                    Error::Score(format!(
                        "record for unknown sample '{}' in cell {}/{}",
                        record.sample_id,
                        model.name,
                        template.id()
                    ))
                })?;
                outcomes.push((sample.gold.clone(), record.outcome.clone()));
            }
            if skipped_errors > 0 {
                warnings.push(format!(
                    "cell {}/{}: skipped {skipped_errors} error records",
                    model.name,
                    template.id()
                ));
            }
            if outcomes.is_empty() {
                warnings.push(format!(
                    "cell {}/{}: no scorable records, cell omitted",
                    model.name,
                    template.id()
                ));
                continue;
            }
            if outcomes.len() < corpus.len() {
                warnings.push(format!(
                    "cell {}/{}: partial ({}/{} records)",
                    model.name,
                    template.id(),
                    outcomes.len(),
                    corpus.len()
                ));
            }
            let report = score_prompt_run(&outcomes, corpus.classes())?;
            cells.push(CellScore {
                model_name: model.name.clone(),
                size_rank: model.size_rank,
                template_id: template.id().to_string(),
                tier: template.tier(),
                language: template.language(),
                order: template.order(),
                report,
            });
        }
    }
    Ok(RunScores { cells, warnings })
}

/// One point of the tier/size trend plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub tier: PromptTier,
    pub model: String,
    pub size_rank: usize,
    pub macro_average: f64,
}

/// Aggregate cell scores into one point per (tier, model), ordered by
/// (tier, size_rank). Multiple templates of the same tier average out.
/// Within a tier the size ranks must be distinct so the series is strictly
/// increasing along x.
pub fn plot_points(cells: &[CellScore]) -> Result<Vec<PlotPoint>> {
    let mut grouped: BTreeMap<(PromptTier, usize, String), Vec<f64>> = BTreeMap::new();
    for cell in cells {
        grouped
            .entry((cell.tier, cell.size_rank, cell.model_name.clone()))
            .or_default()
            .push(cell.report.macro_average);
    }
    let mut points = Vec::new();
    let mut last: Option<(PromptTier, usize)> = None;
    for ((tier, size_rank, model), values) in grouped {
        if let Some((prev_tier, prev_rank)) = last {
            if prev_tier == tier && prev_rank == size_rank {
                return Err(Error::Score(format!(
                    "duplicate size_rank {size_rank} within tier {}; series x values must be strictly increasing",
                    tier.as_str()
                )));
            }
        }
        last = Some((tier, size_rank));
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        points.push(PlotPoint {
            tier,
            model,
            size_rank,
            macro_average: mean,
        });
    }
    Ok(points)
}

/// Plot data as CSV: tier,model,size_rank,macro_average.
pub fn plot_csv(points: &[PlotPoint]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["tier", "model", "size_rank", "macro_average"])
        .map_err(|e| Error::Score(format!("plot csv: {e}")))?;
    for p in points {
        writer
            .write_record([
                p.tier.as_str(),
                &p.model,
                &p.size_rank.to_string(),
                &p.macro_average.to_string(),
            ])
            .map_err(|e| Error::Score(format!("plot csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Score(format!("plot csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Score(format!("plot csv: {e}")))
}

const SVG_COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// Static line chart of the trend series, one polyline per tier.
pub fn plot_svg(points: &[PlotPoint]) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 20.0, 20.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let ranks: Vec<usize> = points.iter().map(|p| p.size_rank).collect();
    let min_rank = ranks.iter().copied().min().unwrap_or(1);
    let max_rank = ranks.iter().copied().max().unwrap_or(2).max(min_rank + 1);
    let x = |rank: usize| {
        left + (rank - min_rank) as f64 / (max_rank - min_rank) as f64 * plot_w
    };
    let y = |value: f64| top + (1.0 - value.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    for i in 0..=4 {
        let value = i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{value:.2}</text>\n",
            left - 6.0,
            y(value) + 4.0
        ));
    }
    for rank in min_rank..=max_rank {
        if ranks.contains(&rank) {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{rank}</text>\n",
                x(rank),
                top + plot_h + 16.0
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">model size rank</text>\n",
        left + plot_w / 2.0,
        height - 12.0
    ));

    let mut by_tier: BTreeMap<PromptTier, Vec<&PlotPoint>> = BTreeMap::new();
    for p in points {
        by_tier.entry(p.tier).or_default().push(p);
    }
    for (i, (tier, mut series)) in by_tier.into_iter().enumerate() {
        series.sort_by_key(|p| p.size_rank);
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let path: Vec<String> = series
            .iter()
            .map(|p| format!("{:.1},{:.1}", x(p.size_rank), y(p.macro_average)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for p in &series {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                x(p.size_rank),
                y(p.macro_average)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            left + plot_w - 110.0,
            top + 16.0 + i as f64 * 16.0,
            tier.as_str()
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-class comparison of methods. Cells carry F1 for confusion-capable
/// methods and strict-match accuracy for prompt-based ones, so every cell is
/// traceable to its MetricsReport.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub classes: Vec<String>,
    pub methods: Vec<String>,
    /// rows[class_idx][method_idx]
    pub cells: Vec<Vec<Option<f64>>>,
    pub macro_row: Vec<f64>,
    pub weighted_f1_row: Vec<Option<f64>>,
}

pub fn comparison_table(methods: &[(String, MetricsReport)]) -> Result<ComparisonTable> {
    let Some((_, first)) = methods.first() else {
        return Err(Error::Score("comparison table needs at least one method".into()));
    };
    let classes: Vec<String> = first
        .per_class
        .iter()
        .map(|c| c.class.name().to_string())
        .collect();
    for (name, report) in methods {
        let these: Vec<String> = report
            .per_class
            .iter()
            .map(|c| c.class.name().to_string())
            .collect();
        if these != classes {
            return Err(Error::Score(format!(
                "method '{name}' was scored against a different class inventory"
            )));
        }
    }

    let mut cells = vec![Vec::with_capacity(methods.len()); classes.len()];
    for (_, report) in methods {
        for (ci, class_metrics) in report.per_class.iter().enumerate() {
            let value = match report.mode {
                EvalMode::Classifier => class_metrics.f1,
                EvalMode::Prompt => class_metrics.accuracy,
            };
            cells[ci].push(value);
        }
    }

    Ok(ComparisonTable {
        classes,
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        cells,
        macro_row: methods.iter().map(|(_, r)| r.macro_average).collect(),
        weighted_f1_row: methods.iter().map(|(_, r)| r.weighted_f1).collect(),
    })
}

impl ComparisonTable {
    /// Fixed-width text rendering, two decimals.
    pub fn to_text(&self) -> String {
        let label_width = self
            .classes
            .iter()
            .map(|c| c.chars().count())
            .chain(["macro average".len(), "weighted F1".len()])
            .max()
            .unwrap_or(12)
            .max(5);
        let col_widths: Vec<usize> = self
            .methods
            .iter()
            .map(|m| m.chars().count().max(5))
            .collect();

        let mut out = String::new();
        out.push_str(&format!("{:label_width$}", "class"));
        for (method, w) in self.methods.iter().zip(&col_widths) {
            out.push_str(&format!(" | {method:>w$}"));
        }
        out.push('\n');
        let total = label_width + col_widths.iter().map(|w| w + 3).sum::<usize>();
        out.push_str(&"-".repeat(total));
        out.push('\n');

        let fmt = |v: &Option<f64>, w: usize| match v {
            Some(x) => format!(" | {:>w$.2}", x),
            None => format!(" | {:>w$}", "-"),
        };
        for (class, row) in self.classes.iter().zip(&self.cells) {
            out.push_str(&format!("{class:label_width$}"));
            for (value, w) in row.iter().zip(&col_widths) {
                out.push_str(&fmt(value, *w));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:label_width$}", "macro average"));
        for (value, w) in self.macro_row.iter().zip(&col_widths) {
            out.push_str(&format!(" | {:>w$.2}", value));
        }
        out.push('\n');
        out.push_str(&format!("{:label_width$}", "weighted F1"));
        for (value, w) in self.weighted_f1_row.iter().zip(&col_widths) {
            out.push_str(&fmt(value, *w));
        }
        out.push('\n');
        out
    }

    /// Machine-readable rendering, full precision.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["class".to_string()];
        header.extend(self.methods.iter().cloned());
        writer
            .write_record(&header)
            .map_err(|e| Error::Score(format!("table csv: {e}")))?;
        let render = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (class, row) in self.classes.iter().zip(&self.cells) {
            let mut record = vec![class.clone()];
            record.extend(row.iter().map(render));
            writer
                .write_record(&record)
                .map_err(|e| Error::Score(format!("table csv: {e}")))?;
        }
        let mut macro_record = vec!["macro average".to_string()];
        macro_record.extend(self.macro_row.iter().map(|v| v.to_string()));
        writer
            .write_record(&macro_record)
            .map_err(|e| Error::Score(format!("table csv: {e}")))?;
        let mut weighted = vec!["weighted F1".to_string()];
        weighted.extend(self.weighted_f1_row.iter().map(render));
        writer
            .write_record(&weighted)
            .map_err(|e| Error::Score(format!("table csv: {e}")))?;
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Score(format!("table csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Score(format!("table csv: {e}")))
    }
}

/// Write a metrics report as JSON: full precision, fixed key order, trailing
/// newline.
pub fn write_report_json(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Score(format!("serialize report: {e}")))?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<MetricsReport> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&content)
        .map_err(|e| Error::Score(format!("{}: invalid report: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClassLabel;
    use crate::evaluation::{score_classifier, ParseOutcome};

    fn labels(names: &[&str]) -> Vec<ClassLabel> {
        names.iter().map(|n| ClassLabel::new(*n).unwrap()).collect()
    }

    fn prompt_report(correct: usize, wrong: usize) -> MetricsReport {
        let a = ClassLabel::new("A").unwrap();
        let b = ClassLabel::new("B").unwrap();
        let classes = vec![a.clone(), b.clone()];
        let mut outcomes = Vec::new();
        for _ in 0..correct {
            outcomes.push((a.clone(), ParseOutcome::ValidMatch { label: a.clone() }));
        }
        for _ in 0..wrong {
            outcomes.push((b.clone(), ParseOutcome::Hallucinated { text: "Z".into() }));
        }
        score_prompt_run(&outcomes, &classes).unwrap()
    }

    fn cell(tier: PromptTier, model: &str, rank: usize, report: MetricsReport) -> CellScore {
        CellScore {
            model_name: model.into(),
            size_rank: rank,
            template_id: "0123456789abcdef".into(),
            tier,
            language: Language::En,
            order: SegmentOrder::TaskFirst,
            report,
        }
    }

    #[test]
    fn plot_rows_cover_tiers_times_models() {
        let mut cells = Vec::new();
        for tier in [PromptTier::Base, PromptTier::TaskName] {
            for (rank, model) in [(1, "m1"), (2, "m2"), (3, "m3")] {
                cells.push(cell(tier, model, rank, prompt_report(rank + 1, 1)));
            }
        }
        let points = plot_points(&cells).unwrap();
        assert_eq!(points.len(), 2 * 3);
        let csv = plot_csv(&points).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6);
        assert!(csv.starts_with("tier,model,size_rank,macro_average"));
    }

    #[test]
    fn duplicate_rank_within_tier_is_rejected() {
        let cells = vec![
            cell(PromptTier::Base, "m1", 1, prompt_report(2, 1)),
            cell(PromptTier::Base, "m2", 1, prompt_report(3, 1)),
        ];
        assert!(plot_points(&cells).is_err());
    }

    #[test]
    fn table_cells_match_reports_exactly() {
        let a = ClassLabel::new("A").unwrap();
        let b = ClassLabel::new("B").unwrap();
        let classes = vec![a.clone(), b.clone()];
        let predictions = vec![
            (a.clone(), a.clone()),
            (a.clone(), b.clone()),
            (b.clone(), b.clone()),
        ];
        let classifier = score_classifier(&predictions, &classes).unwrap();
        let prompt = prompt_report(3, 2);
        let table = comparison_table(&[
            ("baseline-nb".into(), classifier.clone()),
            ("grid".into(), prompt.clone()),
        ])
        .unwrap();
        assert_eq!(table.cells[0][0], classifier.per_class[0].f1);
        assert_eq!(table.cells[0][1], prompt.per_class[0].accuracy);
        assert_eq!(table.macro_row[0], classifier.macro_average);
        assert_eq!(table.weighted_f1_row[1], None);
        let text = table.to_text();
        assert!(text.contains("baseline-nb"));
        assert!(text.contains("weighted F1"));
        let csv = table.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 + 2);
    }

    #[test]
    fn mismatched_inventories_are_rejected() {
        let report_ab = prompt_report(1, 1);
        let c = ClassLabel::new("C").unwrap();
        let other = score_prompt_run(
            &[(c.clone(), ParseOutcome::ValidMatch { label: c.clone() })],
            &labels(&["C"]),
        )
        .unwrap();
        let err = comparison_table(&[("x".into(), report_ab), ("y".into(), other)]).unwrap_err();
        assert!(matches!(err, Error::Score(_)));
    }

    #[test]
    fn svg_contains_a_series_per_tier() {
        let cells = vec![
            cell(PromptTier::Base, "m1", 1, prompt_report(2, 1)),
            cell(PromptTier::Base, "m2", 2, prompt_report(3, 1)),
            cell(PromptTier::Handbook, "m1", 1, prompt_report(4, 1)),
            cell(PromptTier::Handbook, "m2", 2, prompt_report(5, 1)),
        ];
        let svg = plot_svg(&plot_points(&cells).unwrap());
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("handbook"));
    }
}
