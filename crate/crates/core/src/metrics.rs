//! Classification metrics over the three sentiment labels.
//!
//! All tallies are exact integer counts; division happens once per final
//! value. Per-class F1 uses the pooled form `2*TP / (2*TP + FP + FN)`, which
//! makes micro F1 equal accuracy bit-for-bit on single-label data.

use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};

/// 3x3 confusion counts; rows are gold labels, columns predicted labels,
/// both in the fixed order (Negative, Neutral, Positive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; 3]; 3],
    n: u64,
}

impl ConfusionMatrix {
    /// Tally gold/pred pairs. Inputs must be equally long and non-empty.
    pub fn from_pairs(gold: &[SentimentLabel], pred: &[SentimentLabel]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::LengthMismatch {
                gold: gold.len(),
                pred: pred.len(),
            });
        }
        if gold.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts = [[0u64; 3]; 3];
        for (g, p) in gold.iter().zip(pred) {
            counts[g.index()][p.index()] += 1;
        }
        Ok(Self {
            counts,
            n: gold.len() as u64,
        })
    }

    /// Build from raw counts (rows gold, columns predicted).
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Result<Self> {
        let n: u64 = counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[[u64; 3]; 3] {
        &self.counts
    }

    pub fn get(&self, gold: SentimentLabel, pred: SentimentLabel) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..3).map(|i| self.counts[i][j]).sum()
    }

    /// Proportion of correct predictions.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.n as f64
    }

    /// Precision, recall, F1 and support per label, in fixed label order.
    /// Zero-denominator precision and recall are defined as 0.
    pub fn per_class(&self) -> [ClassMetrics; 3] {
        std::array::from_fn(|c| {
            let tp = self.counts[c][c];
            let fp = self.col_sum(c) - tp;
            let fn_ = self.row_sum(c) - tp;
            ClassMetrics {
                label: SentimentLabel::from_index(c).unwrap(),
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
                f1: ratio(2 * tp, 2 * tp + fp + fn_),
                support: self.row_sum(c),
            }
        })
    }

    /// Aggregate F1 under the given averaging mode.
    pub fn f1_aggregate(&self, mode: F1Mode) -> f64 {
        let per_class = self.per_class();
        match mode {
            F1Mode::Macro => per_class.iter().map(|c| c.f1).sum::<f64>() / 3.0,
            F1Mode::Micro => {
                let tp = self.trace();
                let fp: u64 = (0..3).map(|c| self.col_sum(c) - self.counts[c][c]).sum();
                let fn_: u64 = (0..3).map(|c| self.row_sum(c) - self.counts[c][c]).sum();
                ratio(2 * tp, 2 * tp + fp + fn_)
            }
            F1Mode::Weighted => per_class
                .iter()
                .map(|c| (c.support as f64 / self.n as f64) * c.f1)
                .sum(),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// F1 averaging mode. The headline report mode defaults to Weighted; all
/// three are always computed so tables can label which one they show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Mode {
    Macro,
    Micro,
    #[default]
    Weighted,
}

impl F1Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            F1Mode::Macro => "macro",
            F1Mode::Micro => "micro",
            F1Mode::Weighted => "weighted",
        }
    }
}

impl std::str::FromStr for F1Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "macro" => Ok(F1Mode::Macro),
            "micro" => Ok(F1Mode::Micro),
            "weighted" => Ok(F1Mode::Weighted),
            other => Err(Error::InvalidConfig(format!(
                "unknown F1 mode '{other}' (expected macro, micro, or weighted)"
            ))),
        }
    }
}

/// Full evaluation result for one (dataset, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_name: String,
    pub model_name: String,
    pub n: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub weighted_f1: f64,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Everything needed to re-derive a report's numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub template_mode: String,
    pub template_bank_sha256: String,
    pub backend_config_sha256: String,
    pub extended_synonyms: bool,
}

impl EvalReport {
    pub fn from_confusion(
        dataset_name: impl Into<String>,
        model_name: impl Into<String>,
        confusion: ConfusionMatrix,
    ) -> Self {
        let per_class = confusion.per_class().to_vec();
        Self {
            dataset_name: dataset_name.into(),
            model_name: model_name.into(),
            n: confusion.n(),
            accuracy: confusion.accuracy(),
            macro_f1: confusion.f1_aggregate(F1Mode::Macro),
            micro_f1: confusion.f1_aggregate(F1Mode::Micro),
            weighted_f1: confusion.f1_aggregate(F1Mode::Weighted),
            per_class,
            confusion,
            provenance: None,
        }
    }

    pub fn f1(&self, mode: F1Mode) -> f64 {
        match mode {
            F1Mode::Macro => self.macro_f1,
            F1Mode::Micro => self.micro_f1,
            F1Mode::Weighted => self.weighted_f1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;
    use SentimentLabel::{Negative as Neg, Neutral as Neu, Positive as Pos};

    #[test]
    fn all_correct_is_diagonal() {
        let labels = [Pos, Neg, Neu, Pos];
        let cm = ConfusionMatrix::from_pairs(&labels, &labels).unwrap();
        assert_eq!(cm.accuracy(), 1.0);
        for g in 0..3 {
            for p in 0..3 {
                if g != p {
                    assert_eq!(cm.counts()[g][p], 0);
                }
            }
        }
        for mode in [F1Mode::Macro, F1Mode::Micro, F1Mode::Weighted] {
            assert_eq!(cm.f1_aggregate(mode), 1.0);
        }
    }

    #[test]
    fn three_element_hand_tally() {
        let gold = [Pos, Neg, Neg];
        let pred = [Pos, Pos, Neg];
        let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
        assert_eq!(cm.get(Pos, Pos), 1);
        assert_eq!(cm.get(Neg, Pos), 1);
        assert_eq!(cm.get(Neg, Neg), 1);
        assert_eq!(cm.n(), 3);
    }

    #[test]
    fn accuracy_three_of_four() {
        let gold = [Pos, Pos, Neg, Neu];
        let pred = [Pos, Neg, Neg, Neu];
        let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
        assert_eq!(cm.accuracy(), 0.75);
    }

    #[test]
    fn per_class_hand_computed() {
        // gold [P,P,Neg,Neu], pred [P,Neg,Neg,Neu]:
        //   Positive: P=1,   R=0.5, F1=2/3
        //   Negative: P=0.5, R=1,   F1=2/3
        //   Neutral:  P=R=F1=1
        let gold = [Pos, Pos, Neg, Neu];
        let pred = [Pos, Neg, Neg, Neu];
        let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
        let per = cm.per_class();

        let pos = &per[Pos.index()];
        assert_eq!(pos.precision, 1.0);
        assert_eq!(pos.recall, 0.5);
        assert!((pos.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pos.support, 2);

        let neg = &per[Neg.index()];
        assert_eq!(neg.precision, 0.5);
        assert_eq!(neg.recall, 1.0);
        assert!((neg.f1 - 2.0 / 3.0).abs() < 1e-15);

        let neu = &per[Neu.index()];
        assert_eq!(neu.f1, 1.0);

        // weighted = (2*(2/3) + 1*(2/3) + 1*1)/4 = 0.75; macro = mean = 7/9
        assert!((cm.f1_aggregate(F1Mode::Weighted) - 0.75).abs() < 1e-15);
        assert!((cm.f1_aggregate(F1Mode::Macro) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_gets_zeros() {
        let gold = [Pos, Pos, Neu];
        let pred = [Pos, Pos, Neu];
        let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
        let neg = &cm.per_class()[Neg.index()];
        assert_eq!(neg.precision, 0.0);
        assert_eq!(neg.recall, 0.0);
        assert_eq!(neg.f1, 0.0);
        assert_eq!(neg.support, 0);
    }

    #[test]
    fn length_mismatch_and_empty_rejected() {
        assert!(matches!(
            ConfusionMatrix::from_pairs(&[Pos], &[Pos, Neg]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ConfusionMatrix::from_pairs(&[], &[]),
            Err(Error::EmptyInput)
        ));
    }

    fn random_labels(rng: &mut SplitMix64, len: usize) -> Vec<SentimentLabel> {
        (0..len)
            .map(|_| SentimentLabel::from_index(rng.next_below(3)).unwrap())
            .collect()
    }

    /// Brute-force per-class tallies straight from the label pairs,
    /// bypassing the confusion matrix.
    fn brute_force(gold: &[SentimentLabel], pred: &[SentimentLabel]) -> (f64, [f64; 3], f64, f64) {
        let n = gold.len() as f64;
        let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64;
        let mut f1s = [0.0f64; 3];
        let mut weighted = 0.0;
        for label in SentimentLabel::ALL {
            let tp = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| **g == label && **p == label)
                .count() as f64;
            let fp = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| **g != label && **p == label)
                .count() as f64;
            let fn_ = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| **g == label && **p != label)
                .count() as f64;
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            f1s[label.index()] = f1;
            let support = gold.iter().filter(|g| **g == label).count() as f64;
            weighted += support / n * f1;
        }
        let macro_f1 = (f1s[0] + f1s[1] + f1s[2]) / 3.0;
        (correct / n, f1s, macro_f1, weighted)
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = SplitMix64::new(0xACCE55);
        for _ in 0..200 {
            let len = 1 + rng.next_below(50);
            let gold = random_labels(&mut rng, len);
            let pred = random_labels(&mut rng, len);
            let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
            let (acc, f1s, macro_f1, weighted) = brute_force(&gold, &pred);
            assert!((cm.accuracy() - acc).abs() <= 1e-12);
            for (c, class) in cm.per_class().iter().enumerate() {
                assert!((class.f1 - f1s[c]).abs() <= 1e-12);
            }
            assert!((cm.f1_aggregate(F1Mode::Macro) - macro_f1).abs() <= 1e-12);
            assert!((cm.f1_aggregate(F1Mode::Weighted) - weighted).abs() <= 1e-12);
            assert_eq!(cm.f1_aggregate(F1Mode::Micro), cm.accuracy());
        }
    }

    #[test]
    fn report_carries_all_aggregates() {
        let gold = [Pos, Pos, Neg, Neu];
        let pred = [Pos, Neg, Neg, Neu];
        let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
        let report = EvalReport::from_confusion("ds", "model", cm);
        assert_eq!(report.n, 4);
        assert_eq!(report.accuracy, 0.75);
        assert_eq!(report.micro_f1, report.accuracy);
        assert_eq!(report.f1(F1Mode::Weighted), report.weighted_f1);
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #[test]
        fn micro_equals_accuracy(pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..120)) {
            let gold: Vec<_> = pairs.iter().map(|(g, _)| SentimentLabel::from_index(*g).unwrap()).collect();
            let pred: Vec<_> = pairs.iter().map(|(_, p)| SentimentLabel::from_index(*p).unwrap()).collect();
            let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();
            prop_assert_eq!(cm.f1_aggregate(F1Mode::Micro), cm.accuracy());
            prop_assert!((0.0..=1.0).contains(&cm.accuracy()));
            for mode in [F1Mode::Macro, F1Mode::Micro, F1Mode::Weighted] {
                prop_assert!((0.0..=1.0).contains(&cm.f1_aggregate(mode)));
            }
        }

        #[test]
        fn permutation_invariant(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 2..80),
            seed in any::<u64>(),
        ) {
            let gold: Vec<_> = pairs.iter().map(|(g, _)| SentimentLabel::from_index(*g).unwrap()).collect();
            let pred: Vec<_> = pairs.iter().map(|(_, p)| SentimentLabel::from_index(*p).unwrap()).collect();
            let cm = ConfusionMatrix::from_pairs(&gold, &pred).unwrap();

            let mut indices: Vec<usize> = (0..pairs.len()).collect();
            let mut rng = SplitMix64::new(seed);
            for i in (1..indices.len()).rev() {
                let j = rng.next_below(i + 1);
                indices.swap(i, j);
            }
            let shuffled_gold: Vec<_> = indices.iter().map(|&i| gold[i]).collect();
            let shuffled_pred: Vec<_> = indices.iter().map(|&i| pred[i]).collect();
            let cm2 = ConfusionMatrix::from_pairs(&shuffled_gold, &shuffled_pred).unwrap();
            prop_assert_eq!(cm, cm2);
        }
    }
}
