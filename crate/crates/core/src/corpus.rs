//! Dataset ingestion: file formats, label vocabularies, canonical persistence.
//!
//! Every loader funnels raw label tokens through a [`LabelVocabulary`] so the
//! rest of the pipeline only ever sees the three canonical labels. Ingestion
//! is deterministic: loading the same file twice yields byte-identical
//! serializations.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical three-way sentiment value shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    /// Fixed label order used by confusion matrices and reports.
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }

    /// Capitalized display form used by error tables.
    pub fn title(&self) -> &'static str {
        match self {
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::Positive => "Positive",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            SentimentLabel::Negative => 0,
            SentimentLabel::Neutral => 1,
            SentimentLabel::Positive => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<SentimentLabel> {
        SentimentLabel::ALL.get(i).copied()
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" => Ok(SentimentLabel::Negative),
            "neutral" => Ok(SentimentLabel::Neutral),
            "positive" => Ok(SentimentLabel::Positive),
            other => Err(Error::UnmappableToken {
                token: other.to_string(),
            }),
        }
    }
}

/// One labeled text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    #[serde(rename = "label")]
    pub gold: SentimentLabel,
    pub source: String,
}

/// A named, ordered collection of samples with pairwise-distinct ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for sample in &samples {
            if !seen.insert(sample.id.as_str()) {
                return Err(Error::DuplicateSampleId {
                    id: sample.id.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            samples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// Serialize to the canonical JSONL form: one object per line with keys
    /// `{"id","text","label","source"}`, label lowercase, UTF-8, LF endings.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for sample in &self.samples {
            out.push_str(&serde_json::to_string(sample).expect("sample serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Raw-label-token to canonical label mapping for one source family.
///
/// Lookups are case-insensitive and whitespace-trimmed. The mapping must be
/// total over tokens observed in a source file or ingestion fails.
#[derive(Debug, Clone)]
pub struct LabelVocabulary {
    map: HashMap<String, SentimentLabel>,
}

impl LabelVocabulary {
    pub fn new() -> Self {
        Self {
            map: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: impl AsRef<str>, label: SentimentLabel) {
        self.map
            .insert(token.as_ref().trim().to_ascii_lowercase(), label);
    }

    pub fn lookup(&self, token: &str) -> Option<SentimentLabel> {
        self.map
            .get(token.trim().to_ascii_lowercase().as_str())
            .copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The three canonical label words only.
    pub fn words() -> Self {
        let mut v = Self::new();
        v.insert("negative", SentimentLabel::Negative);
        v.insert("neutral", SentimentLabel::Neutral);
        v.insert("positive", SentimentLabel::Positive);
        v
    }

    /// Twitter financial news conventions: canonical words, market-direction
    /// words, and the integer coding from the public dataset card
    /// (0 = Bearish, 1 = Bullish, 2 = Neutral).
    pub fn twitter() -> Self {
        let mut v = Self::words();
        v.insert("bearish", SentimentLabel::Negative);
        v.insert("bullish", SentimentLabel::Positive);
        v.insert("0", SentimentLabel::Negative);
        v.insert("1", SentimentLabel::Positive);
        v.insert("2", SentimentLabel::Neutral);
        v
    }

    /// Look up a built-in vocabulary by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "words" | "fpb" | "fiqa" => Some(Self::words()),
            "twitter" => Some(Self::twitter()),
            _ => None,
        }
    }

    /// Load a custom vocabulary from a JSON object of token -> label word.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: HashMap<String, SentimentLabel> =
            serde_json::from_str(&raw).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let mut v = Self::new();
        for (token, label) in parsed {
            v.insert(token, label);
        }
        Ok(v)
    }
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        Self::twitter()
    }
}

/// Normalize one raw label token (string or integer rendered as text)
/// through a vocabulary. Case-insensitive.
pub fn normalize_label(raw: &str, vocab: &LabelVocabulary) -> Result<SentimentLabel> {
    vocab.lookup(raw).ok_or_else(|| Error::UnmappableToken {
        token: raw.trim().to_string(),
    })
}

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// CSV with `text` and `label` columns (optional `id`).
    Csv,
    /// One JSON object per line with `"text"` and `"label"` keys
    /// (optional `"id"` and `"source"`).
    Jsonl,
    /// One `sentence@label` per line (Financial PhraseBank layout).
    AtDelimited,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DatasetFormat::Csv),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "at" | "at-delimited" => Ok(DatasetFormat::AtDelimited),
            other => Err(Error::InvalidConfig(format!(
                "unknown dataset format '{other}' (expected csv, jsonl, or at-delimited)"
            ))),
        }
    }
}

/// Byte-to-text decoding policy.
///
/// `Auto` decodes strict UTF-8 and falls back to Latin-1 when the bytes are
/// not valid UTF-8; the public FPB distribution is Latin-1, while everything
/// we emit is UTF-8. Latin-1 decoding cannot fail, so `Auto` is the only
/// order in which the fallback is reachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextEncoding {
    Utf8,
    Latin1,
    #[default]
    Auto,
}

impl TextEncoding {
    fn decode(&self, bytes: Vec<u8>, path: &Path) -> Result<String> {
        match self {
            TextEncoding::Utf8 => String::from_utf8(bytes).map_err(|_| {
                Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::InvalidData, "file is not valid UTF-8"),
                )
            }),
            TextEncoding::Latin1 => Ok(latin1_to_string(&bytes)),
            TextEncoding::Auto => match String::from_utf8(bytes) {
                Ok(s) => Ok(s),
                Err(e) => Ok(latin1_to_string(e.as_bytes())),
            },
        }
    }
}

fn latin1_to_string(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: DatasetFormat,
    pub vocab: LabelVocabulary,
    /// Dataset name; defaults to the file stem.
    pub name: Option<String>,
    pub encoding: TextEncoding,
}

impl LoadOptions {
    pub fn new(format: DatasetFormat, vocab: LabelVocabulary) -> Self {
        Self {
            format,
            vocab,
            name: None,
            encoding: TextEncoding::Auto,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

/// Load a dataset file into canonical form.
///
/// Ids are assigned as `<name>-<zero-based index>` when the source carries no
/// id column. Text is trimmed of leading/trailing whitespace; interior
/// whitespace is preserved verbatim.
pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let name = options.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });

    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = options.encoding.decode(bytes, path)?;

    let rows = match options.format {
        DatasetFormat::Csv => parse_csv(&content, path)?,
        DatasetFormat::Jsonl => parse_jsonl(&content, path)?,
        DatasetFormat::AtDelimited => parse_at_delimited(&content, path)?,
    };

    let mut samples = Vec::with_capacity(rows.len());
    for (index, row) in rows.into_iter().enumerate() {
        let text = row.text.trim();
        if text.is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: row.line,
                message: "empty text".to_string(),
            });
        }
        let gold = options
            .vocab
            .lookup(&row.label)
            .ok_or_else(|| Error::UnmappableLabel {
                token: row.label.trim().to_string(),
                line: row.line,
            })?;
        let id = row.id.unwrap_or_else(|| format!("{name}-{index}"));
        let source = row.source.unwrap_or_else(|| name.clone());
        samples.push(Sample {
            id,
            text: text.to_string(),
            gold,
            source,
        });
    }

    Dataset::new(name, samples)
}

struct RawRow {
    line: usize,
    id: Option<String>,
    text: String,
    label: String,
    source: Option<String>,
}

fn parse_csv(content: &str, path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(content.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let text_col = col("text").ok_or_else(|| Error::MalformedLine {
        path: path.to_path_buf(),
        line: 1,
        message: "missing 'text' column".to_string(),
    })?;
    let label_col = col("label").ok_or_else(|| Error::MalformedLine {
        path: path.to_path_buf(),
        line: 1,
        message: "missing 'label' column".to_string(),
    })?;
    let id_col = col("id");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header row
        let record = record.map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let field = |idx: usize| {
            record
                .get(idx)
                .map(str::to_string)
                .ok_or_else(|| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line,
                    message: format!("missing column {idx}"),
                })
        };
        rows.push(RawRow {
            line,
            id: id_col.and_then(|c| record.get(c)).map(str::to_string),
            text: field(text_col)?,
            label: field(label_col)?,
            source: None,
        });
    }
    Ok(rows)
}

fn parse_jsonl(content: &str, path: &Path) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (i, raw_line) in content.lines().enumerate() {
        let line = i + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(raw_line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        let text = value
            .get("text")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::MalformedLine {
                path: path.to_path_buf(),
                line,
                message: "missing string key 'text'".to_string(),
            })?
            .to_string();
        let label = match value.get("label") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line,
                    message: "missing string-or-integer key 'label'".to_string(),
                })
            }
        };
        rows.push(RawRow {
            line,
            id: value.get("id").and_then(|v| v.as_str()).map(str::to_string),
            text,
            label,
            source: value
                .get("source")
                .and_then(|v| v.as_str())
                .map(str::to_string),
        });
    }
    Ok(rows)
}

fn parse_at_delimited(content: &str, path: &Path) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (i, raw_line) in content.lines().enumerate() {
        let line = i + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let (text, label) = raw_line
            .rsplit_once('@')
            .ok_or_else(|| Error::MalformedLine {
                path: path.to_path_buf(),
                line,
                message: "expected 'sentence@label'".to_string(),
            })?;
        rows.push(RawRow {
            line,
            id: None,
            text: text.to_string(),
            label: label.to_string(),
            source: None,
        });
    }
    Ok(rows)
}

/// Per-label counts for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
    pub total: usize,
}

impl DatasetStats {
    pub fn count(&self, label: SentimentLabel) -> usize {
        match label {
            SentimentLabel::Negative => self.negative,
            SentimentLabel::Neutral => self.neutral,
            SentimentLabel::Positive => self.positive,
        }
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "negative: {}, neutral: {}, positive: {}, total: {}",
            self.negative, self.neutral, self.positive, self.total
        )
    }
}

pub fn dataset_stats(ds: &Dataset) -> DatasetStats {
    let mut counts = [0usize; 3];
    for sample in ds.iter() {
        counts[sample.gold.index()] += 1;
    }
    DatasetStats {
        negative: counts[0],
        neutral: counts[1],
        positive: counts[2],
        total: ds.len(),
    }
}
