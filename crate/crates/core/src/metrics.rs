//! Confusion matrices and macro-averaged accuracy, precision, recall and F1.

use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};

/// `K × K` counts. Rows are the actual class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_predictions(y_true: &[u32], y_pred: &[u32], k: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} true labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        let mut counts = vec![0u64; k * k];
        for (&a, &p) in y_true.iter().zip(y_pred) {
            for label in [a, p] {
                if label as usize >= k {
                    return Err(Error::InvalidLabel { label, classes: k });
                }
            }
            counts[a as usize * k + p as usize] += 1;
        }
        Ok(Self {
            class_names: default_names(k),
            counts,
        })
    }

    /// Builds a matrix from rows of counts (actual class per row).
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("confusion rows must form a square".into()));
        }
        Ok(Self {
            class_names: default_names(k),
            counts: rows.concat(),
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::ShapeMismatch(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n_classes() + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        let k = self.n_classes().max(1);
        self.counts.chunks(k).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.get(c, c)).sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        (0..self.n_classes()).map(|p| self.get(c, p)).sum()
    }

    fn column_sum(&self, c: usize) -> u64 {
        (0..self.n_classes()).map(|a| self.get(a, c)).sum()
    }
}

fn default_names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("class_{c}")).collect()
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Mean of the per-class F1 scores.
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
}

pub fn evaluate(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 || cm.n_classes() == 0 {
        return Err(Error::DegenerateInput("confusion matrix is empty".into()));
    }
    let per_class: Vec<ClassScores> = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.column_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            // 2TP / (2TP + FP + FN), which is the harmonic mean without a 0/0.
            let f1 = ratio(2 * tp, cm.column_sum(c) + cm.row_sum(c));
            ClassScores { precision, recall, f1 }
        })
        .collect();
    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    Ok(EvalReport {
        accuracy: ratio(cm.trace(), total),
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        macro_f1: mean(|s| s.f1),
        per_class,
        confusion: cm.clone(),
    })
}

/// Confusion matrix of predictions followed by [`evaluate`].
pub fn evaluate_predictions(y_true: &[u32], y_pred: &[u32], class_names: &[String]) -> Result<EvalReport> {
    let cm =
        ConfusionMatrix::from_predictions(y_true, y_pred, class_names.len())?.with_class_names(class_names.to_vec())?;
    evaluate(&cm)
}

/// Micro-averaged recall; equal to accuracy for single-label data.
pub fn micro_recall(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = cm.trace();
    let support: u64 = (0..cm.n_classes()).map(|c| cm.row_sum(c)).sum();
    ratio(tp, support)
}

fn fixed6(v: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{v:.6}")).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct ClassJson<'a> {
    name: &'a str,
    precision: Box<RawValue>,
    recall: Box<RawValue>,
    f1: Box<RawValue>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    averaging: &'static str,
    class_names: &'a [String],
    confusion: Vec<Vec<u64>>,
    accuracy: Box<RawValue>,
    precision: Box<RawValue>,
    recall: Box<RawValue>,
    f1: Box<RawValue>,
    per_class: Vec<ClassJson<'a>>,
}

impl EvalReport {
    /// Pretty JSON with every metric printed to six decimals.
    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            averaging: "macro",
            class_names: self.confusion.class_names(),
            confusion: self.confusion.rows(),
            accuracy: fixed6(self.accuracy),
            precision: fixed6(self.macro_precision),
            recall: fixed6(self.macro_recall),
            f1: fixed6(self.macro_f1),
            per_class: self
                .per_class
                .iter()
                .zip(self.confusion.class_names())
                .map(|(s, name)| ClassJson {
                    name,
                    precision: fixed6(s.precision),
                    recall: fixed6(s.recall),
                    f1: fixed6(s.f1),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lemon() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(&[vec![6, 0, 0, 0], vec![0, 14, 0, 1], vec![0, 0, 9, 0], vec![0, 0, 0, 10]])
            .unwrap()
    }

    #[test]
    fn lemon_matrix_metrics() {
        let r = evaluate(&lemon()).unwrap();
        assert_eq!(r.accuracy, 39.0 / 40.0);
        assert!((r.macro_recall - (3.0 + 14.0 / 15.0) / 4.0).abs() < 1e-12);
        assert!((r.macro_precision - (3.0 + 10.0 / 11.0) / 4.0).abs() < 1e-12);
        let f1_canker = 28.0 / 29.0;
        let f1_scab = 20.0 / 21.0;
        assert!((r.macro_f1 - (2.0 + f1_canker + f1_scab) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_perfect() {
        let y: Vec<u32> = (0..40).map(|i| i % 4).collect();
        let cm = ConfusionMatrix::from_predictions(&y, &y, 4).unwrap();
        assert_eq!(cm.total(), 40);
        assert_eq!(cm.trace(), 40);
        let r = evaluate(&cm).unwrap();
        for m in [r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1] {
            assert_eq!(m, 1.0);
        }
    }

    #[test]
    fn absent_predicted_class_scores_zero_not_nan() {
        let cm = ConfusionMatrix::from_predictions(&[0, 1], &[0, 0], 2).unwrap();
        let r = evaluate(&cm).unwrap();
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert_eq!(r.macro_precision, 0.25);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ConfusionMatrix::from_predictions(&[0], &[0, 1], 2),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            ConfusionMatrix::from_predictions(&[0], &[2], 2),
            Err(Error::InvalidLabel { label: 2, classes: 2 })
        ));
        let empty = ConfusionMatrix::from_predictions(&[], &[], 3).unwrap();
        assert!(matches!(evaluate(&empty), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn json_uses_six_decimals() {
        let cm = lemon()
            .with_class_names(vec!["healthy".into(), "canker".into(), "mold".into(), "scab".into()])
            .unwrap();
        let json = evaluate(&cm).unwrap().to_json();
        assert!(json.contains("\"accuracy\": 0.975000"));
        assert!(json.contains("\"recall\": 0.983333"));
        assert!(json.contains("\"averaging\": \"macro\""));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["confusion"][1][3], 1);
    }

    proptest! {
        #[test]
        fn permutation_leaves_macro_metrics_unchanged(
            pairs in prop::collection::vec((0u32..4, 0u32..4), 1..80),
            perm in Just(vec![0u32, 1, 2, 3]).prop_shuffle(),
        ) {
            let (t, p): (Vec<u32>, Vec<u32>) = pairs.iter().copied().unzip();
            let tp: Vec<u32> = t.iter().map(|&c| perm[c as usize]).collect();
            let pp: Vec<u32> = p.iter().map(|&c| perm[c as usize]).collect();
            let a = ConfusionMatrix::from_predictions(&t, &p, 4).unwrap();
            let b = ConfusionMatrix::from_predictions(&tp, &pp, 4).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert_eq!(a.get(i, j), b.get(perm[i] as usize, perm[j] as usize));
                }
            }
            let (ra, rb) = (evaluate(&a).unwrap(), evaluate(&b).unwrap());
            prop_assert!((ra.macro_f1 - rb.macro_f1).abs() < 1e-12);
            prop_assert!((ra.macro_precision - rb.macro_precision).abs() < 1e-12);
            prop_assert!((ra.macro_recall - rb.macro_recall).abs() < 1e-12);
            prop_assert_eq!(ra.accuracy, rb.accuracy);
        }

        #[test]
        fn metrics_bounded_and_micro_recall_is_accuracy(
            pairs in prop::collection::vec((0u32..5, 0u32..5), 1..100),
        ) {
            let (t, p): (Vec<u32>, Vec<u32>) = pairs.iter().copied().unzip();
            let cm = ConfusionMatrix::from_predictions(&t, &p, 5).unwrap();
            let r = evaluate(&cm).unwrap();
            for m in [r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1] {
                prop_assert!((0.0..=1.0).contains(&m));
            }
            prop_assert_eq!(micro_recall(&cm), r.accuracy);
            prop_assert_eq!(r.accuracy == 1.0, t == p);
        }
    }
}
