//! `finsent` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend failure
//! beyond the abort threshold.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use finsent_core::corpus::{self, DatasetFormat, LabelVocabulary, LoadOptions, TextEncoding};
use finsent_core::instructgen::{self, TrainingConfig};
use finsent_core::labelmap;
use finsent_core::metrics::{EvalReport, F1Mode};
use finsent_core::reporter::{self, RunSpec, TableFormat, TemplateMode};
use finsent_core::subsetter::{self, IndicationLexicon};
use finsent_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "finsent",
    version,
    about = "Financial sentiment instruction-data builder and model evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a dataset file into the canonical JSONL form.
    Ingest {
        /// Source file.
        #[arg(long)]
        input: PathBuf,
        /// Input layout: csv, jsonl, or at-delimited.
        #[arg(long, default_value = "jsonl", value_parser = parse_dataset_format)]
        format: DatasetFormat,
        /// Dataset name (defaults to the input file stem).
        #[arg(long)]
        name: Option<String>,
        /// Built-in vocabulary (words, twitter, fpb, fiqa) or a JSON file
        /// mapping raw tokens to label words.
        #[arg(long, default_value = "twitter")]
        vocab: String,
        /// Byte decoding: auto, utf8, or latin1.
        #[arg(long, default_value = "auto", value_parser = parse_encoding)]
        encoding: TextEncoding,
        /// Canonical JSONL output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render canonical datasets into instruction-tuning records.
    BuildInstructions {
        /// Canonical JSONL dataset(s); records follow input order.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Template bank file, one template per line (default: embedded bank of 10).
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSONL path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the training hyperparameter configuration file.
    EmitTrainConfig {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        #[arg(long)]
        batch_size: Option<u32>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long)]
        lr_scheduler: Option<String>,
        #[arg(long)]
        warmup_steps: Option<u32>,
        #[arg(long)]
        max_token_length: Option<u32>,
    },
    /// Build the numerical-sensitivity subset of a dataset.
    FilterNumerical {
        /// Canonical JSONL dataset.
        #[arg(long)]
        input: PathBuf,
        /// Minimum financial numeric mentions per retained sample.
        #[arg(long, default_value_t = 2)]
        min_numbers: usize,
        /// Indication lexicon file, one lowercase word per line.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a seeded candidate pool for the contextual subset.
    SampleContextual {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restrict a dataset to a curated id list.
    ApplyCuration {
        #[arg(long)]
        input: PathBuf,
        /// File of sample ids to keep, one per line.
        #[arg(long)]
        keep: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a backend over a dataset and persist predictions plus a report.
    Evaluate {
        /// Canonical JSONL dataset (overrides the config's dataset path).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Run configuration JSON (backend plus run options).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Use one fixed template id instead of seeded-random assignment.
        #[arg(long)]
        template_id: Option<usize>,
    },
    /// Render a comparison table from stored report files.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "markdown", value_parser = parse_table_format)]
        format: TableFormat,
        /// Which F1 average the table shows: macro, micro, or weighted.
        #[arg(long, default_value = "weighted", value_parser = parse_f1_mode)]
        f1_mode: F1Mode,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render per-sample predictions against gold labels.
    ErrorTable {
        #[arg(long)]
        dataset: PathBuf,
        /// Prediction files as model=path pairs.
        #[arg(long, required = true, num_args = 1.., value_parser = parse_model_path)]
        predictions: Vec<(String, PathBuf)>,
        #[arg(long, default_value = "markdown", value_parser = parse_table_format)]
        format: TableFormat,
        /// Keep only rows where some model disagrees with the gold label.
        #[arg(long)]
        disagreements_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dataset_format(s: &str) -> Result<DatasetFormat, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_table_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_f1_mode(s: &str) -> Result<F1Mode, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_encoding(s: &str) -> Result<TextEncoding, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(TextEncoding::Auto),
        "utf8" | "utf-8" => Ok(TextEncoding::Utf8),
        "latin1" | "latin-1" => Ok(TextEncoding::Latin1),
        other => Err(format!("unknown encoding '{other}'")),
    }
}

fn parse_model_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((model, path)) if !model.is_empty() && !path.is_empty() => {
            Ok((model.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected model=path, got '{s}'")),
    }
}

fn resolve_vocab(spec: &str) -> anyhow::Result<LabelVocabulary> {
    if let Some(builtin) = LabelVocabulary::builtin(spec) {
        return Ok(builtin);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(LabelVocabulary::from_file(path)?);
    }
    Err(CoreError::InvalidConfig(format!(
        "unknown vocabulary '{spec}' (expected words, twitter, fpb, fiqa, or a JSON file path)"
    ))
    .into())
}

fn load_canonical(path: &Path) -> anyhow::Result<corpus::Dataset> {
    let options = LoadOptions::new(DatasetFormat::Jsonl, LabelVocabulary::words());
    Ok(corpus::load_dataset(path, &options)?)
}

fn write_output(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest {
            input,
            format,
            name,
            vocab,
            encoding,
            out,
        } => {
            let mut options = LoadOptions::new(format, resolve_vocab(&vocab)?);
            options.encoding = encoding;
            if let Some(name) = name {
                options = options.with_name(name);
            }
            let ds = corpus::load_dataset(&input, &options)?;
            ds.save_jsonl(&out)?;
            let stats = corpus::dataset_stats(&ds);
            println!("ingested '{}' -> {} ({stats})", ds.name(), out.display());
        }
        Command::BuildInstructions {
            input,
            templates,
            seed,
            out,
        } => {
            let bank = instructgen::load_templates(templates.as_deref())?;
            let mut records = Vec::new();
            for path in &input {
                let ds = load_canonical(path)?;
                records.extend(instructgen::build_records(&ds, &bank, seed)?);
            }
            instructgen::export_jsonl(&records, &out)?;
            println!(
                "wrote {} instruction records ({} templates, seed {seed}) -> {}",
                records.len(),
                bank.len(),
                out.display()
            );
        }
        Command::EmitTrainConfig {
            out,
            learning_rate,
            weight_decay,
            batch_size,
            epochs,
            lr_scheduler,
            warmup_steps,
            max_token_length,
        } => {
            let mut config = TrainingConfig::default();
            if let Some(v) = learning_rate {
                config.learning_rate = v;
            }
            if let Some(v) = weight_decay {
                config.weight_decay = v;
            }
            if let Some(v) = batch_size {
                config.batch_size = v;
            }
            if let Some(v) = epochs {
                config.epochs = v;
            }
            if let Some(v) = lr_scheduler {
                config.lr_scheduler = v;
            }
            if let Some(v) = warmup_steps {
                config.warmup_steps = v;
            }
            if let Some(v) = max_token_length {
                config.max_token_length = v;
            }
            instructgen::emit_training_config(&config, &out)?;
            println!("wrote training config -> {}", out.display());
        }
        Command::FilterNumerical {
            input,
            min_numbers,
            lexicon,
            out,
        } => {
            let ds = load_canonical(&input)?;
            let lex = match lexicon {
                Some(path) => IndicationLexicon::from_file(path)?,
                None => IndicationLexicon::default(),
            };
            let filtered = subsetter::filter_numerical(&ds, min_numbers, &lex)?;
            filtered.save_jsonl(&out)?;
            println!(
                "kept {} of {} samples -> {}",
                filtered.len(),
                ds.len(),
                out.display()
            );
        }
        Command::SampleContextual {
            input,
            n,
            seed,
            out,
        } => {
            let ds = load_canonical(&input)?;
            let pool = subsetter::sample_contextual(&ds, n, seed)?;
            pool.save_jsonl(&out)?;
            println!(
                "sampled {} of {} (seed {seed}) -> {}",
                pool.len(),
                ds.len(),
                out.display()
            );
        }
        Command::ApplyCuration { input, keep, out } => {
            let ds = load_canonical(&input)?;
            let curated = subsetter::apply_curation(&ds, &keep)?;
            curated.save_jsonl(&out)?;
            println!(
                "kept {} of {} curated samples -> {}",
                curated.len(),
                ds.len(),
                out.display()
            );
        }
        Command::Evaluate {
            dataset,
            config,
            out_dir,
            seed,
            template_id,
        } => {
            let mut spec = RunSpec::from_file(&config)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(id) = template_id {
                spec.template = TemplateMode::Fixed { id };
            }
            let dataset_path = dataset.or_else(|| spec.dataset.clone()).ok_or_else(|| {
                CoreError::InvalidConfig(
                    "no dataset given (use --dataset or the config's 'dataset')".to_string(),
                )
            })?;
            let ds = load_canonical(&dataset_path)?;
            let out_dir = out_dir.or_else(|| spec.out_dir.clone());
            let report = reporter::evaluate(&ds, &spec, out_dir.as_deref())?;
            println!(
                "{} on '{}': n={} acc={:.3} f1[{}]={:.3}",
                report.model_name,
                report.dataset_name,
                report.n,
                report.accuracy,
                spec.f1_mode.as_str(),
                report.f1(spec.f1_mode),
            );
            if let Some(dir) = out_dir {
                println!(
                    "wrote {} and {}",
                    dir.join("predictions.jsonl").display(),
                    dir.join("report.json").display()
                );
            }
        }
        Command::Report {
            reports,
            format,
            f1_mode,
            out,
        } => {
            let mut loaded = Vec::with_capacity(reports.len());
            for path in &reports {
                let raw = fs::read_to_string(path).map_err(|e| CoreError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let report: EvalReport =
                    serde_json::from_str(&raw).map_err(|e| CoreError::Json {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                loaded.push(report);
            }
            let table = reporter::render_comparison(&loaded, format, f1_mode)?;
            write_output(out.as_deref(), &table)?;
        }
        Command::ErrorTable {
            dataset,
            predictions,
            format,
            disagreements_only,
            out,
        } => {
            let ds = load_canonical(&dataset)?;
            let mut per_model = Vec::with_capacity(predictions.len());
            for (model, path) in predictions {
                per_model.push((model, labelmap::load_predictions(&path)?));
            }
            let table = reporter::error_table(&ds, &per_model, format, disagreements_only)?;
            write_output(out.as_deref(), &table)?;
        }
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(core_err) => core_err.exit_code() as u8,
        None => 2,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with status 0; everything
            // else is a usage error (exit 1).
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
