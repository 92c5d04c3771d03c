//! End-to-end evaluation orchestration and table rendering.
//!
//! `evaluate` renders inference prompts, runs the configured backend, maps
//! the raw generations to labels, computes metrics, and persists predictions
//! plus the report. With a replay or mock backend the whole path is
//! deterministic: identical spec means identical persisted bytes, so wall
//! clock is logged rather than written into the report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::inference::{run_backend_blocking, sha256_hex, BackendConfig};
use crate::instructgen::{assign_templates, load_templates, render_inference, TemplateBank};
use crate::labelmap::{map_predictions, predictions_to_jsonl, Prediction};
use crate::metrics::{ConfusionMatrix, EvalReport, F1Mode, Provenance};

/// How instructions are picked for inference prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TemplateMode {
    /// Every sample uses the same template id.
    Fixed { id: usize },
    /// Seeded random assignment over the bank.
    #[default]
    Random,
}

impl TemplateMode {
    fn describe(&self) -> String {
        match self {
            TemplateMode::Fixed { id } => format!("fixed:{id}"),
            TemplateMode::Random => "random".to_string(),
        }
    }
}

/// One evaluation run: dataset, backend, template policy, seed, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub backend: BackendConfig,
    #[serde(default)]
    pub template: TemplateMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub f1_mode: F1Mode,
    #[serde(default)]
    pub extended_synonyms: bool,
    /// Optional custom template bank, one template per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_file: Option<PathBuf>,
    /// Dataset path; CLI flags may override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Output directory; CLI flags may override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(backend: BackendConfig) -> Self {
        Self {
            backend,
            template: TemplateMode::default(),
            seed: 0,
            f1_mode: F1Mode::default(),
            extended_synonyms: false,
            template_file: None,
            dataset: None,
            out_dir: None,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Render the per-sample inference prompts for a run.
pub fn build_prompts(
    ds: &Dataset,
    bank: &TemplateBank,
    mode: TemplateMode,
    seed: u64,
) -> Result<Vec<(String, String)>> {
    match mode {
        TemplateMode::Fixed { id } => {
            let template = bank.get(id)?;
            Ok(ds
                .iter()
                .map(|s| (s.id.clone(), render_inference(&template.text, &s.text)))
                .collect())
        }
        TemplateMode::Random => {
            let assignments = assign_templates(ds, bank, seed)?;
            ds.iter()
                .zip(assignments)
                .map(|(s, (_, template_id))| {
                    Ok((
                        s.id.clone(),
                        render_inference(&bank.get(template_id)?.text, &s.text),
                    ))
                })
                .collect()
        }
    }
}

/// Evaluate a dataset against the spec's backend. Persists
/// `predictions.jsonl` and `report.json` under `out_dir` when given.
pub fn evaluate(ds: &Dataset, spec: &RunSpec, out_dir: Option<&Path>) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let started = Instant::now();

    let bank = load_templates(spec.template_file.as_deref())?;
    let prompts = build_prompts(ds, &bank, spec.template, spec.seed)?;
    let outcomes = run_backend_blocking(&spec.backend, &prompts)?;

    let pairs: Vec<(String, String)> = outcomes
        .into_iter()
        .map(|o| (o.sample_id, o.raw_output))
        .collect();
    let predictions = map_predictions(&pairs, spec.extended_synonyms)?;

    let gold: Vec<_> = ds.iter().map(|s| s.gold).collect();
    let pred: Vec<_> = predictions.iter().map(|p| p.label).collect();
    let confusion = ConfusionMatrix::from_pairs(&gold, &pred)?;

    let mut report = EvalReport::from_confusion(ds.name(), spec.backend.backend_id(), confusion);
    let bank_text: Vec<&str> = bank.templates().iter().map(|t| t.text.as_str()).collect();
    report.provenance = Some(Provenance {
        seed: spec.seed,
        template_mode: spec.template.describe(),
        template_bank_sha256: sha256_hex(&bank_text.join("\n")),
        backend_config_sha256: sha256_hex(
            &serde_json::to_string(&spec.backend).expect("config serializes"),
        ),
        extended_synonyms: spec.extended_synonyms,
    });

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let pred_path = dir.join("predictions.jsonl");
        fs::write(&pred_path, predictions_to_jsonl(&predictions))
            .map_err(|e| Error::io(&pred_path, e))?;
        let report_path = dir.join("report.json");
        let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
        body.push('\n');
        fs::write(&report_path, body).map_err(|e| Error::io(&report_path, e))?;
    }

    tracing::info!(
        dataset = ds.name(),
        model = report.model_name.as_str(),
        n = report.n,
        accuracy = report.accuracy,
        wall_clock_ms = started.elapsed().as_millis() as u64,
        "evaluation complete"
    );
    Ok(report)
}

/// Output format for rendered tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (expected markdown or csv)"
            ))),
        }
    }
}

fn markdown_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn csv_rows(rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("csv row");
    }
    String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv utf-8")
}

/// Render a comparison table: datasets as row groups, models as columns,
/// Acc and F1 rows per dataset. Markdown cells are fixed 3-decimal; CSV
/// carries the same values at 6 decimals.
pub fn render_comparison(
    reports: &[EvalReport],
    fmt: TableFormat,
    f1_mode: F1Mode,
) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut datasets: Vec<&str> = Vec::new();
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset_name.as_str()) {
            datasets.push(&r.dataset_name);
        }
        if !models.contains(&r.model_name.as_str()) {
            models.push(&r.model_name);
        }
    }
    let lookup = |dataset: &str, model: &str| {
        reports
            .iter()
            .find(|r| r.dataset_name == dataset && r.model_name == model)
    };
    let f1_label = format!("F1 ({})", f1_mode.as_str());

    match fmt {
        TableFormat::Markdown => {
            let mut out = String::new();
            let mut header = vec!["Dataset".to_string(), "Metric".to_string()];
            header.extend(models.iter().map(|m| m.to_string()));
            out.push_str(&markdown_row(&header));
            out.push_str(&markdown_row(
                &header.iter().map(|_| "---".to_string()).collect::<Vec<_>>(),
            ));
            for dataset in &datasets {
                let acc_cells: Vec<String> = models
                    .iter()
                    .map(|m| {
                        lookup(dataset, m)
                            .map(|r| format!("{:.3}", r.accuracy))
                            .unwrap_or_else(|| "-".to_string())
                    })
                    .collect();
                let f1_cells: Vec<String> = models
                    .iter()
                    .map(|m| {
                        lookup(dataset, m)
                            .map(|r| format!("{:.3}", r.f1(f1_mode)))
                            .unwrap_or_else(|| "-".to_string())
                    })
                    .collect();
                let mut acc_row = vec![dataset.to_string(), "Acc".to_string()];
                acc_row.extend(acc_cells);
                out.push_str(&markdown_row(&acc_row));
                let mut f1_row = vec![String::new(), f1_label.clone()];
                f1_row.extend(f1_cells);
                out.push_str(&markdown_row(&f1_row));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut rows: Vec<Vec<String>> = Vec::new();
            let mut header = vec!["dataset".to_string(), "metric".to_string()];
            header.extend(models.iter().map(|m| m.to_string()));
            rows.push(header);
            for dataset in &datasets {
                for (metric, value_of) in [
                    (
                        "Acc",
                        Box::new(|r: &EvalReport| r.accuracy) as Box<dyn Fn(&EvalReport) -> f64>,
                    ),
                    (
                        f1_label.as_str(),
                        Box::new(move |r: &EvalReport| r.f1(f1_mode)),
                    ),
                ] {
                    let mut row = vec![dataset.to_string(), metric.to_string()];
                    for m in &models {
                        row.push(
                            lookup(dataset, m)
                                .map(|r| format!("{:.6}", value_of(r)))
                                .unwrap_or_else(|| "-".to_string()),
                        );
                    }
                    rows.push(row);
                }
            }
            Ok(csv_rows(&rows))
        }
    }
}

/// Render per-sample error exhibits: text, gold label, and each model's
/// prediction. With `disagreements_only`, keeps rows where at least one
/// model disagrees with the gold label.
pub fn error_table(
    ds: &Dataset,
    model_predictions: &[(String, Vec<Prediction>)],
    fmt: TableFormat,
    disagreements_only: bool,
) -> Result<String> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for sample in ds.iter() {
        let mut labels = Vec::with_capacity(model_predictions.len());
        for (model, predictions) in model_predictions {
            let prediction = predictions
                .iter()
                .find(|p| p.sample_id == sample.id)
                .ok_or_else(|| Error::MissingPrediction {
                    model: model.clone(),
                    id: sample.id.clone(),
                })?;
            labels.push(prediction.label);
        }
        if disagreements_only && labels.iter().all(|l| *l == sample.gold) {
            continue;
        }
        let mut row = vec![sample.text.clone(), sample.gold.title().to_string()];
        row.extend(labels.iter().map(|l| l.title().to_string()));
        rows.push(row);
    }

    let mut header = vec!["News".to_string(), "True Value".to_string()];
    header.extend(model_predictions.iter().map(|(m, _)| m.clone()));

    match fmt {
        TableFormat::Markdown => {
            let mut out = String::new();
            out.push_str(&markdown_row(&header));
            out.push_str(&markdown_row(
                &header.iter().map(|_| "---".to_string()).collect::<Vec<_>>(),
            ));
            for row in &rows {
                out.push_str(&markdown_row(row));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut all = vec![header];
            all.extend(rows);
            Ok(csv_rows(&all))
        }
    }
}
