//! Diagnostic test-subset construction: the numerical-sensitivity filter and
//! the contextual-understanding candidate pool.
//!
//! The numeric recognizer works on whitespace tokens with surrounding
//! punctuation trimmed. A numeric literal (digits, optional thousands
//! separators, optional decimal part) counts as financial iff it
//!   (a) carries a currency sign ($, €, £) or sits next to a currency word,
//!   (b) carries a percent sign,
//!   (c) has a magnitude suffix (K, M, B, BN, MM, T, million, billion),
//!   (d) contains a decimal point, or
//!   (e) is a plain integer within two tokens of a financial keyword.
//! Standalone integers 1900-2099 are treated as years and never count, even
//! near keywords. Digits inside URL tokens and inside letter-led tokens
//! ("Q2") never count, and a digit-led token whose letter tail is not a
//! magnitude suffix ("737MAX") is not a numeric literal at all.
//!
//! A mention's `kind` is the first rule in (a)-(e) order that fired.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Which recognition rule fired for a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionKind {
    Currency,
    Percent,
    Magnitude,
    Decimal,
    KeywordAdjacentInteger,
}

/// One recognized financial number. Offsets are byte offsets into the
/// original text and always satisfy `text[start..end] == surface`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericMention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: MentionKind,
}

/// Tunable pieces of the recognizer. Defaults follow the rule table above.
#[derive(Debug, Clone)]
pub struct ExtractorConfig {
    /// Keywords that make a nearby plain integer financial.
    pub keywords: BTreeSet<String>,
    /// Words that mark an adjacent number as a money amount.
    pub currency_words: BTreeSet<String>,
    /// Token distance for the keyword rule.
    pub keyword_window: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        let keywords = [
            "eps",
            "revenue",
            "sales",
            "profit",
            "loss",
            "credit",
            "consensus",
            "shares",
            "estimate",
            "exp",
            "guidance",
        ];
        let currency_words = ["euro", "euros", "dollar", "dollars"];
        Self {
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            currency_words: currency_words.iter().map(|s| s.to_string()).collect(),
            keyword_window: 2,
        }
    }
}

const TRIM_CHARS: &[char] = &[
    ',', '.', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\'',
];
const CURRENCY_SIGNS: &[char] = &['$', '€', '£'];

struct Token<'a> {
    clean_start: usize,
    clean_end: usize,
    clean: &'a str,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut end = text.len();
        while let Some(&(pos, ch)) = chars.peek() {
            if ch.is_whitespace() {
                end = pos;
                break;
            }
            chars.next();
        }
        let raw = &text[start..end];
        let trimmed = raw.trim_matches(|c: char| TRIM_CHARS.contains(&c));
        let clean_start = start
            + (raw.len()
                - raw
                    .trim_start_matches(|c: char| TRIM_CHARS.contains(&c))
                    .len());
        let clean_end = clean_start + trimmed.len();
        tokens.push(Token {
            clean_start,
            clean_end,
            clean: trimmed,
        });
    }
    tokens
}

struct NumScan {
    /// byte length of the numeric literal within the scanned str
    len: usize,
    has_decimal: bool,
    integer_value: Option<u64>,
}

/// Scan `digits ( ',' digits{3} )* ( '.' digits+ )?` from the front of `s`.
fn scan_number(s: &str) -> Option<NumScan> {
    let bytes = s.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_digit() {
        return None;
    }
    let mut i = 0;
    let mut digits = String::new();
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        digits.push(bytes[i] as char);
        i += 1;
    }
    // thousands groups: ',' followed by exactly three digits
    while i + 3 < bytes.len()
        && bytes[i] == b','
        && bytes[i + 1].is_ascii_digit()
        && bytes[i + 2].is_ascii_digit()
        && bytes[i + 3].is_ascii_digit()
        && (i + 4 >= bytes.len() || !bytes[i + 4].is_ascii_digit())
    {
        digits.push_str(&s[i + 1..i + 4]);
        i += 4;
    }
    let mut has_decimal = false;
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        has_decimal = true;
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    let integer_value = if has_decimal {
        None
    } else {
        digits.parse().ok()
    };
    Some(NumScan {
        len: i,
        has_decimal,
        integer_value,
    })
}

fn is_magnitude_suffix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "k" | "m" | "b" | "bn" | "mm" | "t" | "million" | "billion"
    )
}

fn is_magnitude_word(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "million" | "billion")
}

fn looks_like_url(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    lower.contains("://") || lower.starts_with("www.")
}

/// Extract financial numeric mentions with the default configuration.
pub fn extract_financial_numbers(text: &str) -> Vec<NumericMention> {
    extract_financial_numbers_with(text, &ExtractorConfig::default())
}

/// Extract financial numeric mentions, in text order, non-overlapping,
/// longest-match.
pub fn extract_financial_numbers_with(text: &str, config: &ExtractorConfig) -> Vec<NumericMention> {
    let tokens = tokenize(text);
    let clean_lower: Vec<String> = tokens
        .iter()
        .map(|t| t.clean.to_ascii_lowercase())
        .collect();

    let keyword_at = |idx: usize| config.keywords.contains(&clean_lower[idx]);

    let mut mentions = Vec::new();
    let mut consumed_until = 0usize; // token index consumed by a magnitude-word extension

    for (i, token) in tokens.iter().enumerate() {
        if i < consumed_until || token.clean.is_empty() {
            continue;
        }
        if looks_like_url(token.clean) {
            continue;
        }
        let first = token.clean.chars().next().unwrap();
        if first.is_alphabetic() {
            continue;
        }

        let (sign_len, after_sign) = if CURRENCY_SIGNS.contains(&first) {
            (first.len_utf8(), &token.clean[first.len_utf8()..])
        } else {
            (0, token.clean)
        };
        let Some(scan) = scan_number(after_sign) else {
            continue;
        };
        let suffix = &after_sign[scan.len..];
        let has_sign = sign_len > 0;

        enum Attached {
            None,
            Percent,
            Magnitude,
        }
        let attached = if suffix.is_empty() {
            Attached::None
        } else if suffix == "%" {
            Attached::Percent
        } else if is_magnitude_suffix(suffix) {
            Attached::Magnitude
        } else {
            continue; // mixed alphanumeric token such as "737MAX"
        };

        let next_clean = clean_lower.get(i + 1).map(String::as_str);
        let prev_clean = if i > 0 {
            Some(clean_lower[i - 1].as_str())
        } else {
            None
        };
        let next_is_magnitude_word =
            matches!(attached, Attached::None) && next_clean.is_some_and(is_magnitude_word);
        let next_is_percent_token = matches!(attached, Attached::None) && next_clean == Some("%");
        let adjacent_currency_word = prev_clean.is_some_and(|w| config.currency_words.contains(w))
            || next_clean.is_some_and(|w| config.currency_words.contains(w));

        // Year heuristic: a bare integer 1900-2099 with nothing financial
        // attached is a date token and never counts.
        let standalone_integer = !has_sign
            && !scan.has_decimal
            && matches!(attached, Attached::None)
            && !next_is_magnitude_word
            && !next_is_percent_token;
        if standalone_integer {
            if let Some(v) = scan.integer_value {
                if (1900..=2099).contains(&v) {
                    continue;
                }
            }
        }

        let kind = if has_sign || adjacent_currency_word {
            Some(MentionKind::Currency)
        } else if matches!(attached, Attached::Percent) || next_is_percent_token {
            Some(MentionKind::Percent)
        } else if matches!(attached, Attached::Magnitude) || next_is_magnitude_word {
            Some(MentionKind::Magnitude)
        } else if scan.has_decimal {
            Some(MentionKind::Decimal)
        } else {
            let lo = i.saturating_sub(config.keyword_window);
            let hi = (i + config.keyword_window).min(tokens.len() - 1);
            let near_keyword = (lo..=hi).any(|j| j != i && keyword_at(j));
            near_keyword.then_some(MentionKind::KeywordAdjacentInteger)
        };
        let Some(kind) = kind else {
            continue;
        };

        let start = token.clean_start;
        let mut end = token.clean_start + sign_len + scan.len + suffix.len();
        if next_is_magnitude_word || next_is_percent_token {
            end = tokens[i + 1].clean_end;
            consumed_until = i + 2;
        }
        mentions.push(NumericMention {
            surface: text[start..end].to_string(),
            start,
            end,
            kind,
        });
    }
    mentions
}

/// Lowercase directional cue words whose presence disqualifies a sample from
/// the numerical subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicationLexicon {
    words: BTreeSet<String>,
}

const REQUIRED_STEMS: [&str; 4] = ["raise", "fall", "increase", "decrease"];

impl IndicationLexicon {
    /// The paper's four stems plus their common inflections.
    pub fn default_lexicon() -> Self {
        let words = [
            "raise",
            "raises",
            "raised",
            "rising",
            "rise",
            "rises",
            "rose",
            "risen",
            "fall",
            "falls",
            "fell",
            "fallen",
            "falling",
            "increase",
            "increases",
            "increased",
            "increasing",
            "decrease",
            "decreases",
            "decreased",
            "decreasing",
        ];
        Self {
            words: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Load from a plain-text file, one word per line. The four base stems
    /// must be present.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let words: BTreeSet<String> = content
            .lines()
            .map(|l| l.trim().to_ascii_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "indication lexicon {} is empty",
                path.display()
            )));
        }
        for stem in REQUIRED_STEMS {
            if !words.contains(stem) {
                return Err(Error::InvalidConfig(format!(
                    "indication lexicon {} is missing required stem '{stem}'",
                    path.display()
                )));
            }
        }
        Ok(Self { words })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_ascii_lowercase())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for IndicationLexicon {
    fn default() -> Self {
        Self::default_lexicon()
    }
}

/// Case-insensitive whole-word match against the lexicon. Returns the
/// matched words in first-occurrence order, deduplicated.
pub fn contains_indication_word(text: &str, lex: &IndicationLexicon) -> (bool, Vec<String>) {
    let mut matched = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        let lower = word.to_ascii_lowercase();
        if lex.contains(&lower) && !matched.contains(&lower) {
            matched.push(lower);
        }
    }
    (!matched.is_empty(), matched)
}

/// Keep samples with at least `min_numbers` financial numeric mentions and
/// no indication words. Order preserved; output named `<name>-numerical`.
pub fn filter_numerical(
    ds: &Dataset,
    min_numbers: usize,
    lex: &IndicationLexicon,
) -> Result<Dataset> {
    filter_numerical_with(ds, min_numbers, lex, &ExtractorConfig::default())
}

pub fn filter_numerical_with(
    ds: &Dataset,
    min_numbers: usize,
    lex: &IndicationLexicon,
    config: &ExtractorConfig,
) -> Result<Dataset> {
    if min_numbers < 1 {
        return Err(Error::InvalidConfig(
            "min_numbers must be at least 1".to_string(),
        ));
    }
    let kept = ds
        .iter()
        .filter(|s| {
            extract_financial_numbers_with(&s.text, config).len() >= min_numbers
                && !contains_indication_word(&s.text, lex).0
        })
        .cloned()
        .collect();
    Dataset::new(format!("{}-numerical", ds.name()), kept)
}

/// Uniform sample of `n` samples without replacement, preserving original
/// relative order. Deterministic in `seed`. Intended as a candidate pool for
/// manual curation.
pub fn sample_contextual(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > ds.len() {
        return Err(Error::SampleTooLarge { n, size: ds.len() });
    }
    let mut rng = SplitMix64::new(seed);
    let indices = rng.sample_indices(ds.len(), n);
    let samples = indices
        .into_iter()
        .map(|i| ds.samples()[i].clone())
        .collect();
    Dataset::new(format!("{}-contextual", ds.name()), samples)
}

/// Restrict a dataset to the ids listed in a curation file (one id per
/// line), keeping original order. Every listed id must exist.
pub fn apply_curation(ds: &Dataset, keep_path: impl AsRef<Path>) -> Result<Dataset> {
    let keep_path = keep_path.as_ref();
    let content = fs::read_to_string(keep_path).map_err(|e| Error::io(keep_path, e))?;
    let keep_ids: BTreeSet<&str> = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    for id in &keep_ids {
        if !ds.iter().any(|s| s.id == *id) {
            return Err(Error::UnknownSampleId { id: id.to_string() });
        }
    }
    let samples = ds
        .iter()
        .filter(|s| keep_ids.contains(s.id.as_str()))
        .cloned()
        .collect();
    Dataset::new(format!("{}-curated", ds.name()), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sample, SentimentLabel};
    use proptest::prelude::*;
    use std::io::Write as _;

    const TABLE_NUMERICAL: [&str; 4] = [
        "Pre-tax loss totaled euro 0.3 million, compared to a loss of euro 2.2 million in the first quarter of 2005.",
        "Madison Square Garden Q2 EPS $3.93 vs. $3.42.",
        "Consumer credit $18.9BN, Exp. $16BN, Last $9.6BN.",
        "Estee Lauder Q2 adj. EPS $2.11; FactSet consensus $1.90.",
    ];

    fn dataset_from_texts(texts: &[&str]) -> Dataset {
        let samples = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sample {
                id: format!("t-{i}"),
                text: t.to_string(),
                gold: SentimentLabel::Neutral,
                source: "t".to_string(),
            })
            .collect();
        Dataset::new("t", samples).unwrap()
    }

    #[test]
    fn euro_millions_two_mentions_year_excluded() {
        let mentions = extract_financial_numbers(TABLE_NUMERICAL[0]);
        let surfaces: Vec<&str> = mentions.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["0.3 million", "2.2 million"]);
        assert!(!TABLE_NUMERICAL[0][mentions[0].start..].starts_with("2005"));
    }

    #[test]
    fn consumer_credit_three_mentions() {
        let mentions = extract_financial_numbers(TABLE_NUMERICAL[2]);
        let surfaces: Vec<&str> = mentions.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["$18.9BN", "$16BN", "$9.6BN"]);
        assert!(mentions.iter().all(|m| m.kind == MentionKind::Currency));
    }

    #[test]
    fn boeing_737_max_yields_nothing() {
        let mentions =
            extract_financial_numbers("Boeing announces additional order for 737 MAX planes.");
        assert!(mentions.is_empty());
    }

    #[test]
    fn eps_dollar_amounts() {
        let mentions = extract_financial_numbers(TABLE_NUMERICAL[1]);
        let surfaces: Vec<&str> = mentions.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["$3.93", "$3.42"]);
    }

    #[test]
    fn percent_and_currency_kinds() {
        let text =
            "PPD's stock indicated in early going to open at $30, or 11% above $27 IPO price.";
        let mentions = extract_financial_numbers(text);
        let kinds: Vec<MentionKind> = mentions.iter().map(|m| m.kind).collect();
        assert_eq!(
            kinds,
            vec![
                MentionKind::Currency,
                MentionKind::Percent,
                MentionKind::Currency
            ]
        );
    }

    #[test]
    fn keyword_adjacent_integer_within_window() {
        let mentions = extract_financial_numbers("EPS of 12 reported");
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].surface, "12");
        assert_eq!(mentions[0].kind, MentionKind::KeywordAdjacentInteger);

        // three tokens away: outside the window
        let far = extract_financial_numbers("EPS was reported there 12");
        assert!(far.is_empty());
    }

    #[test]
    fn year_near_keyword_still_excluded() {
        assert!(extract_financial_numbers("revenue in 2005").is_empty());
    }

    #[test]
    fn urls_and_letter_led_tokens_excluded() {
        assert!(
            extract_financial_numbers("See https://example.com/123?q=4 for Q2 news").is_empty()
        );
        assert!(extract_financial_numbers("The 737MAX outlook").is_empty());
    }

    #[test]
    fn thousands_separator_parses_as_one_literal() {
        let mentions = extract_financial_numbers("Volume hit 1,234.5 on sales desks");
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].surface, "1,234.5");
        assert_eq!(mentions[0].kind, MentionKind::Decimal);
    }

    #[test]
    fn offsets_slice_to_surface() {
        for text in TABLE_NUMERICAL {
            for m in extract_financial_numbers(text) {
                assert_eq!(&text[m.start..m.end], m.surface);
                assert!(m.start < m.end);
            }
        }
    }

    #[test]
    fn indication_word_matches() {
        let lex = IndicationLexicon::default_lexicon();
        let (hit, words) = contains_indication_word("Shares increase 5% today", &lex);
        assert!(hit);
        assert_eq!(words, vec!["increase"]);

        let (hit, words) = contains_indication_word("The increased costs weigh on margins", &lex);
        assert!(hit);
        assert_eq!(words, vec!["increased"]);

        let (hit, words) = contains_indication_word(TABLE_NUMERICAL[1], &lex);
        assert!(!hit);
        assert!(words.is_empty());
    }

    #[test]
    fn whole_word_only() {
        let lex = IndicationLexicon::default_lexicon();
        // "fallout" contains "fall" as a substring but is not a whole word
        let (hit, _) = contains_indication_word("The fallout settled", &lex);
        assert!(!hit);
    }

    #[test]
    fn filter_retains_all_table_texts() {
        let ds = dataset_from_texts(&TABLE_NUMERICAL);
        let filtered = filter_numerical(&ds, 2, &IndicationLexicon::default_lexicon()).unwrap();
        assert_eq!(filtered.len(), 4);
        assert_eq!(filtered.name(), "t-numerical");
    }

    #[test]
    fn appending_indication_word_rejects() {
        let lex = IndicationLexicon::default_lexicon();
        let texts: Vec<String> = TABLE_NUMERICAL
            .iter()
            .map(|t| format!("{t} increases"))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let ds = dataset_from_texts(&refs);
        let filtered = filter_numerical(&ds, 2, &lex).unwrap();
        assert!(filtered.is_empty());
    }

    #[test]
    fn min_numbers_zero_rejected() {
        let ds = dataset_from_texts(&TABLE_NUMERICAL);
        assert!(filter_numerical(&ds, 0, &IndicationLexicon::default_lexicon()).is_err());
    }

    #[test]
    fn contextual_sample_is_deterministic_and_ordered() {
        let texts: Vec<String> = (0..100).map(|i| format!("Sample text {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let ds = dataset_from_texts(&refs);

        let a = sample_contextual(&ds, 20, 7).unwrap();
        let b = sample_contextual(&ds, 20, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);

        // relative order preserved
        let positions: Vec<usize> = a
            .iter()
            .map(|s| ds.iter().position(|o| o.id == s.id).unwrap())
            .collect();
        for pair in positions.windows(2) {
            assert!(pair[0] < pair[1]);
        }

        let full = sample_contextual(&ds, ds.len(), 3).unwrap();
        assert_eq!(full.samples(), ds.samples());

        assert!(matches!(
            sample_contextual(&ds, 101, 3),
            Err(Error::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn curation_subsets_by_id() {
        let ds = dataset_from_texts(&TABLE_NUMERICAL);
        let mut keep = tempfile::NamedTempFile::new().unwrap();
        writeln!(keep, "t-2").unwrap();
        writeln!(keep, "t-0").unwrap();
        let curated = apply_curation(&ds, keep.path()).unwrap();
        let ids: Vec<&str> = curated.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["t-0", "t-2"]); // original order, not file order

        let empty = tempfile::NamedTempFile::new().unwrap();
        assert!(apply_curation(&ds, empty.path()).unwrap().is_empty());

        let mut all = tempfile::NamedTempFile::new().unwrap();
        for s in ds.iter() {
            writeln!(all, "{}", s.id).unwrap();
        }
        let unchanged = apply_curation(&ds, all.path()).unwrap();
        assert_eq!(unchanged.samples(), ds.samples());

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "t-99").unwrap();
        match apply_curation(&ds, bad.path()).unwrap_err() {
            Error::UnknownSampleId { id } => assert_eq!(id, "t-99"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn lexicon_file_requires_stems() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "raise\nfall\nincrease").unwrap();
        assert!(IndicationLexicon::from_file(f.path()).is_err());

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "raise\nfall\nincrease\ndecrease\nsoar").unwrap();
        let lex = IndicationLexicon::from_file(g.path()).unwrap();
        assert!(lex.contains("soar"));
        assert_eq!(lex.len(), 5);
    }

    proptest! {
        #[test]
        fn mention_offsets_always_slice_exactly(text in "\\PC{0,120}") {
            for m in extract_financial_numbers(&text) {
                prop_assert_eq!(&text[m.start..m.end], m.surface.as_str());
                prop_assert!(m.start < m.end);
            }
        }

        #[test]
        fn filter_output_is_ordered_subset(n in 1usize..30) {
            let texts: Vec<String> = (0..n)
                .map(|i| {
                    if i % 3 == 0 {
                        format!("Revenue ${i}.5M against ${i}.1M consensus")
                    } else if i % 3 == 1 {
                        format!("Shares rose {i}% after earnings")
                    } else {
                        format!("Quarterly update number {i}")
                    }
                })
                .collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let ds = dataset_from_texts(&refs);
            let filtered =
                filter_numerical(&ds, 2, &IndicationLexicon::default_lexicon()).unwrap();
            prop_assert!(filtered.len() <= ds.len());
            let positions: Vec<usize> = filtered
                .iter()
                .map(|s| ds.iter().position(|o| o.id == s.id).unwrap())
                .collect();
            for pair in positions.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
        }
    }
}
