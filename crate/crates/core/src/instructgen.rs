//! Instruction-record construction: template bank, prompt rendering,
//! training-data export, and the training-configuration artifact.
//!
//! A record renders as `Human: {instruction} {input}\nAssistant: {output}`,
//! with the inference form stopping after `Assistant:`. A single space joins
//! instruction and input; exactly one LF precedes `Assistant:`. The
//! assignment of templates to samples is driven by the pinned [`SplitMix64`]
//! generator so (dataset, bank, seed) fully determines every record.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default task instructions. The bank is replaceable via [`load_templates`];
/// each phrasing names the three answer options so bare decoder models have
/// the label words in context.
const DEFAULT_TEMPLATES: [&str; 10] = [
    "Determine the sentiment of the financial news as negative, neutral or positive.",
    "Classify the sentiment of this financial headline as negative, neutral, or positive.",
    "Decide whether the sentiment expressed in the following financial text is negative, neutral, or positive.",
    "Assess the tone of this financial news item and answer with negative, neutral, or positive.",
    "Label the following financial statement with one sentiment: negative, neutral, or positive.",
    "Judge the market sentiment of this news and reply with negative, neutral, or positive.",
    "Identify the sentiment conveyed by the financial text below as negative, neutral, or positive.",
    "Rate the sentiment of the following market news as negative, neutral, or positive.",
    "Read the financial headline and state its sentiment: negative, neutral, or positive.",
    "Analyze this financial news excerpt and respond with negative, neutral, or positive.",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionTemplate {
    pub id: usize,
    pub text: String,
}

/// An ordered bank of instruction templates with ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBank {
    templates: Vec<InstructionTemplate>,
}

impl TemplateBank {
    fn from_texts<I: IntoIterator<Item = String>>(texts: I) -> Self {
        Self {
            templates: texts
                .into_iter()
                .enumerate()
                .map(|(id, text)| InstructionTemplate { id, text })
                .collect(),
        }
    }

    pub fn templates(&self) -> &[InstructionTemplate] {
        &self.templates
    }

    pub fn get(&self, id: usize) -> Result<&InstructionTemplate> {
        self.templates.get(id).ok_or(Error::TemplateOutOfRange {
            id,
            size: self.templates.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self::from_texts(DEFAULT_TEMPLATES.iter().map(|s| s.to_string()))
    }
}

/// Load a template bank from a plain-text file, one template per line.
/// With no path, returns the embedded default bank of 10.
pub fn load_templates(path: Option<&Path>) -> Result<TemplateBank> {
    let Some(path) = path else {
        return Ok(TemplateBank::default());
    };
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut texts = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            return Err(Error::BlankTemplate { line: i + 1 });
        }
        texts.push(line.to_string());
    }
    if texts.is_empty() {
        return Err(Error::EmptyTemplateFile {
            path: path.to_path_buf(),
        });
    }
    Ok(TemplateBank::from_texts(texts))
}

/// Assign one template id to each sample, in dataset order.
///
/// The result depends only on (dataset order, bank size, seed).
pub fn assign_templates(
    ds: &Dataset,
    bank: &TemplateBank,
    seed: u64,
) -> Result<Vec<(String, usize)>> {
    if bank.is_empty() {
        return Err(Error::InvalidConfig("template bank is empty".to_string()));
    }
    let mut rng = SplitMix64::new(seed);
    Ok(ds
        .iter()
        .map(|s| (s.id.clone(), rng.next_below(bank.len())))
        .collect())
}

/// Render the training prompt form.
pub fn render(instruction: &str, input: &str, output: &str) -> String {
    format!("Human: {instruction} {input}\nAssistant: {output}")
}

/// Render the inference prompt form (no output).
pub fn render_inference(instruction: &str, input: &str) -> String {
    format!("Human: {instruction} {input}\nAssistant:")
}

/// Recover `(instruction + " " + input, output)` from a rendered prompt.
///
/// The split point is the last `\nAssistant:` so label words, which never
/// contain a newline, cannot be shadowed by prompt text.
pub fn parse_prompt(prompt: &str) -> Option<(String, Option<String>)> {
    const SEP: &str = "\nAssistant:";
    let head = prompt.strip_prefix("Human: ")?;
    let split = head.rfind(SEP)?;
    let combined = &head[..split];
    let tail = &head[split + SEP.len()..];
    let output = if tail.is_empty() {
        None
    } else {
        Some(tail.strip_prefix(' ')?.to_string())
    };
    Some((combined.to_string(), output))
}

/// A sample rendered into the instruction prompt format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub sample_id: String,
    pub template_id: usize,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub prompt: String,
}

/// Build one training record per sample, assigning templates with `seed`.
pub fn build_records(
    ds: &Dataset,
    bank: &TemplateBank,
    seed: u64,
) -> Result<Vec<InstructionRecord>> {
    let assignments = assign_templates(ds, bank, seed)?;
    ds.iter()
        .zip(assignments)
        .map(|(sample, (sample_id, template_id))| {
            debug_assert_eq!(sample.id, sample_id);
            let instruction = &bank.get(template_id)?.text;
            let output = sample.gold.as_str().to_string();
            Ok(InstructionRecord {
                sample_id,
                template_id,
                instruction: instruction.clone(),
                input: sample.text.clone(),
                prompt: render(instruction, &sample.text, &output),
                output,
            })
        })
        .collect()
}

/// Export records as JSONL with keys
/// `{"sample_id","template_id","instruction","input","output","prompt"}`.
/// Re-export of identical records is byte-identical.
pub fn export_jsonl(records: &[InstructionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::NothingToExport);
    }
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Fine-tuning hyperparameters emitted as a flat JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: u32,
    pub epochs: u32,
    pub lr_scheduler: String,
    pub warmup_steps: u32,
    pub max_token_length: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            weight_decay: 0.1,
            batch_size: 32,
            epochs: 10,
            lr_scheduler: "cosine_annealing".to_string(),
            warmup_steps: 0,
            max_token_length: 512,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.weight_decay <= 0.0
            || self.batch_size == 0
            || self.epochs == 0
            || self.max_token_length == 0
            || self.lr_scheduler.is_empty()
        {
            return Err(Error::InvalidConfig(
                "training config fields must be positive (warmup_steps may be 0)".to_string(),
            ));
        }
        Ok(())
    }
}

/// Write a training configuration as a flat JSON object.
pub fn emit_training_config(config: &TrainingConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    config.validate()?;
    let mut body = serde_json::to_string_pretty(config).expect("config serializes");
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sample, SentimentLabel};
    use proptest::prelude::*;

    fn dataset(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample {
                id: format!("tw-{i}"),
                text: format!("Headline number {i} about earnings."),
                gold: SentimentLabel::from_index(i % 3).unwrap(),
                source: "tw".to_string(),
            })
            .collect();
        Dataset::new("tw", samples).unwrap()
    }

    #[test]
    fn default_bank_has_ten_templates() {
        let bank = load_templates(None).unwrap();
        assert_eq!(bank.len(), 10);
        for (i, t) in bank.templates().iter().enumerate() {
            assert_eq!(t.id, i);
            assert!(!t.text.is_empty());
        }
    }

    #[test]
    fn bank_from_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "First instruction.").unwrap();
        writeln!(f, "Second instruction.").unwrap();
        writeln!(f, "Third instruction.").unwrap();
        let bank = load_templates(Some(f.path())).unwrap();
        assert_eq!(bank.len(), 3);
    }

    #[test]
    fn blank_template_line_names_the_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "First instruction.\n\nThird instruction.\n").unwrap();
        let err = load_templates(Some(f.path())).unwrap_err();
        assert!(matches!(err, Error::BlankTemplate { line: 2 }));
    }

    #[test]
    fn empty_template_file_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let err = load_templates(Some(f.path())).unwrap_err();
        assert!(matches!(err, Error::EmptyTemplateFile { .. }));
    }

    #[test]
    fn render_training_form_exact() {
        let prompt = render(
            "Determine the sentiment of the financial news as negative, neutral or positive.",
            "Madison Square Garden Q2 EPS $3.93 vs. $3.42.",
            "positive",
        );
        assert_eq!(
            prompt,
            "Human: Determine the sentiment of the financial news as negative, neutral or positive. Madison Square Garden Q2 EPS $3.93 vs. $3.42.\nAssistant: positive"
        );
    }

    #[test]
    fn render_inference_form_exact() {
        let prompt = render_inference(
            "Determine the sentiment of the financial news as negative, neutral or positive.",
            "Madison Square Garden Q2 EPS $3.93 vs. $3.42.",
        );
        assert_eq!(
            prompt,
            "Human: Determine the sentiment of the financial news as negative, neutral or positive. Madison Square Garden Q2 EPS $3.93 vs. $3.42.\nAssistant:"
        );
    }

    #[test]
    fn parse_recovers_both_forms() {
        let (combined, output) =
            parse_prompt(&render("Classify.", "Stocks up.", "positive")).unwrap();
        assert_eq!(combined, "Classify. Stocks up.");
        assert_eq!(output.as_deref(), Some("positive"));

        let (combined, output) =
            parse_prompt(&render_inference("Classify.", "Stocks up.")).unwrap();
        assert_eq!(combined, "Classify. Stocks up.");
        assert_eq!(output, None);
    }

    #[test]
    fn single_template_bank_assigns_zero() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "Only instruction.").unwrap();
        let bank = load_templates(Some(f.path())).unwrap();
        let ds = dataset(25);
        let assignments = assign_templates(&ds, &bank, 99).unwrap();
        assert!(assignments.iter().all(|(_, t)| *t == 0));
    }

    #[test]
    fn assignment_is_deterministic() {
        let ds = dataset(200);
        let bank = TemplateBank::default();
        let a = assign_templates(&ds, &bank, 42).unwrap();
        let b = assign_templates(&ds, &bank, 42).unwrap();
        assert_eq!(a, b);
        let c = assign_templates(&ds, &bank, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn template_histogram_near_uniform() {
        // 10,000 draws over 10 buckets: every count inside [800, 1200],
        // a +/-20% band around the 1,000 expectation (~6.7 sigma).
        let ds = dataset(10_000);
        let bank = TemplateBank::default();
        for seed in [0u64, 1, 42, 12345] {
            let mut histogram = [0usize; 10];
            for (_, t) in assign_templates(&ds, &bank, seed).unwrap() {
                histogram[t] += 1;
            }
            for (t, &count) in histogram.iter().enumerate() {
                assert!(
                    (800..=1200).contains(&count),
                    "seed {seed}: template {t} drawn {count} times"
                );
            }
        }
    }

    #[test]
    fn records_output_matches_gold() {
        let ds = dataset(30);
        let records = build_records(&ds, &TemplateBank::default(), 7).unwrap();
        assert_eq!(records.len(), 30);
        for (record, sample) in records.iter().zip(ds.iter()) {
            assert_eq!(record.sample_id, sample.id);
            assert_eq!(record.output, sample.gold.as_str());
            assert_eq!(
                record.prompt,
                render(&record.instruction, &record.input, &record.output)
            );
        }
    }

    #[test]
    fn export_twice_is_byte_identical() {
        let ds = dataset(50);
        let records = build_records(&ds, &TemplateBank::default(), 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        export_jsonl(&records, &a).unwrap();
        export_jsonl(&records, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 50);
    }

    #[test]
    fn export_empty_fails() {
        let dir = tempfile::tempdir().unwrap();
        let err = export_jsonl(&[], dir.path().join("x.jsonl")).unwrap_err();
        assert!(matches!(err, Error::NothingToExport));
    }

    #[test]
    fn training_config_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.json");
        emit_training_config(&TrainingConfig::default(), &path).unwrap();
        let parsed: TrainingConfig =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parsed.learning_rate, 1e-5);
        assert_eq!(parsed.weight_decay, 0.1);
        assert_eq!(parsed.batch_size, 32);
        assert_eq!(parsed.epochs, 10);
        assert_eq!(parsed.lr_scheduler, "cosine_annealing");
        assert_eq!(parsed.warmup_steps, 0);
        assert_eq!(parsed.max_token_length, 512);
    }

    #[test]
    fn training_config_override_keeps_other_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.json");
        let config = TrainingConfig {
            epochs: 1,
            ..TrainingConfig::default()
        };
        emit_training_config(&config, &path).unwrap();
        let parsed: TrainingConfig =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parsed.epochs, 1);
        assert_eq!(parsed.batch_size, 32);
        assert_eq!(parsed.learning_rate, 1e-5);
    }

    proptest! {
        #[test]
        fn prompt_round_trip(
            instruction in "[A-Za-z][A-Za-z ,.]{0,60}",
            input in "\\PC{1,80}",
            output in "(negative|neutral|positive)",
        ) {
            let (combined, parsed_output) = parse_prompt(&render(&instruction, &input, &output)).unwrap();
            prop_assert_eq!(&combined, &format!("{instruction} {input}"));
            prop_assert_eq!(parsed_output.as_deref(), Some(output.as_str()));

            let (combined, parsed_output) = parse_prompt(&render_inference(&instruction, &input)).unwrap();
            prop_assert_eq!(combined, format!("{instruction} {input}"));
            prop_assert_eq!(parsed_output, None);
        }
    }
}
