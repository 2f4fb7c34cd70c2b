//! Confusion matrices, classification metrics, timing and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|c| self.counts[c][c]).sum()
    }

    /// Plain-text table labelled with the class names.
    pub fn render(&self) -> String {
        let corner = "true \\ pred";
        let first = self
            .class_names
            .iter()
            .map(String::len)
            .chain([corner.len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = (0..self.k())
            .map(|c| {
                let digits = self
                    .counts
                    .iter()
                    .map(|r| r[c].to_string().len())
                    .max()
                    .unwrap_or(1);
                self.class_names[c].len().max(digits)
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{corner:<first$}");
        for (name, w) in self.class_names.iter().zip(&widths) {
            let _ = write!(out, "  {name:>w$}");
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let _ = write!(out, "{name:<first$}");
            for (v, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(
    truth: &[usize],
    predictions: &[usize],
    class_names: &[String],
) -> Result<ConfusionMatrix> {
    if truth.len() != predictions.len() {
        return Err(Error::invalid("truth and prediction lengths differ"));
    }
    let k = class_names.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(predictions) {
        if t >= k || p >= k {
            return Err(Error::invalid(format!(
                "label pair ({t}, {p}) out of range for {k} classes"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Support-weighted means of the per-class values.
    pub weighted: Averages,
}

/// Metrics plus any zero-division flags raised while computing them.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<(Metrics, Vec<String>)> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let k = cm.k();
    let mut flags = Vec::new();
    let ratio = |num: u64, den: u64, what: &str, name: &str, flags: &mut Vec<String>| {
        if den == 0 {
            flags.push(format!("zero_division:{what}:{name}"));
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let name = &cm.class_names[c];
        let tp = cm.counts[c][c];
        let predicted: u64 = (0..k).map(|t| cm.counts[t][c]).sum();
        let support: u64 = cm.counts[c].iter().sum();
        let precision = ratio(tp, predicted, "precision", name, &mut flags);
        let recall = ratio(tp, support, "recall", name, &mut flags);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            flags.push(format!("zero_division:f1:{name}"));
            0.0
        };
        per_class.push(ClassMetrics {
            name: name.clone(),
            precision,
            recall,
            f1,
            support,
        });
    }
    let weighted_mean = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| m.support as f64 / n as f64 * f(m))
            .sum::<f64>()
    };
    let weighted = Averages {
        precision: weighted_mean(|m| m.precision),
        recall: weighted_mean(|m| m.recall),
        f1: weighted_mean(|m| m.f1),
    };
    Ok((
        Metrics {
            accuracy: cm.trace() as f64 / n as f64,
            per_class,
            weighted,
        },
        flags,
    ))
}

/// Run `action` and measure its wall-clock duration in seconds on a monotonic clock.
pub fn timed<T>(action: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = action();
    (out, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub class_names: Vec<String>,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_s: f64,
    pub infer_total_s: f64,
    pub infer_per_sample_s: f64,
    /// What the timings cover.
    pub scope: String,
}

impl Timing {
    pub fn new(train_s: f64, infer_total_s: f64, n: usize) -> Self {
        Timing {
            train_s,
            infer_total_s,
            infer_per_sample_s: if n == 0 {
                0.0
            } else {
                infer_total_s / n as f64
            },
            scope: "model fit and predict only; feature extraction excluded".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSummary {
    pub tau: f64,
    pub base_fraction: f64,
    pub refine_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub model_kind: String,
    pub dataset: DatasetSummary,
    pub metrics: Metrics,
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeSummary>,
    pub flags: Vec<String>,
    /// Fully resolved configuration of the run that produced the report.
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Path of the text confusion matrix written next to a JSON report.
pub fn matrix_path(json_path: &Path) -> PathBuf {
    let mut p = json_path.as_os_str().to_owned();
    p.push(".cm.txt");
    PathBuf::from(p)
}

/// Write the JSON report to `destination` and the confusion matrix text next to it.
pub fn emit_report(report: &EvalReport, cm: &ConfusionMatrix, destination: &Path) -> Result<()> {
    fs::write(destination, report.to_json()?)?;
    fs::write(matrix_path(destination), cm.render())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["anthracnose".into(), "fruit_fly".into(), "healthy".into()]
    }

    #[test]
    fn perfect_predictions_fill_the_diagonal() {
        let y = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let cm = confusion_matrix(&y, &y, &names()).unwrap();
        assert_eq!(cm.counts, vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]]);
        let (m, flags) = classification_report(&cm).unwrap();
        assert!(flags.is_empty());
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(
            m.weighted,
            Averages {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
    }

    #[test]
    fn constant_predictor_fills_one_column() {
        let y = [0, 1, 2, 2, 1];
        let cm = confusion_matrix(&y, &[0; 5], &names()).unwrap();
        let col0: u64 = cm.counts.iter().map(|r| r[0]).sum();
        assert_eq!(col0, 5);
        assert!(cm.counts.iter().all(|r| r[1] == 0 && r[2] == 0));
    }

    #[test]
    fn pair_order_does_not_matter() {
        let t = [0, 1, 2, 1, 0, 2];
        let p = [0, 2, 2, 1, 1, 0];
        let a = confusion_matrix(&t, &p, &names()).unwrap();
        let (tr, pr): (Vec<usize>, Vec<usize>) =
            t.iter().zip(&p).rev().map(|(a, b)| (*a, *b)).unzip();
        assert_eq!(a, confusion_matrix(&tr, &pr, &names()).unwrap());
    }

    #[test]
    fn hand_counted_matrix() {
        let cm = ConfusionMatrix {
            class_names: names(),
            counts: vec![vec![5, 0, 0], vec![1, 4, 0], vec![0, 1, 4]],
        };
        let (m, flags) = classification_report(&cm).unwrap();
        assert!(flags.is_empty());
        assert!((m.accuracy - 13.0 / 15.0).abs() < 1e-15);
        // TP/FP/FN counted by hand: c0 (5,1,0), c1 (4,1,1), c2 (4,0,1)
        let expect = [(5.0 / 6.0, 1.0), (4.0 / 5.0, 4.0 / 5.0), (1.0, 4.0 / 5.0)];
        for (mc, (p, r)) in m.per_class.iter().zip(expect) {
            assert!((mc.precision - p).abs() < 1e-15);
            assert!((mc.recall - r).abs() < 1e-15);
            assert!((mc.f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
            assert_eq!(mc.support, 5);
        }
        assert!((m.weighted.recall - m.accuracy).abs() < 1e-15);
    }

    #[test]
    fn zero_support_class_is_flagged() {
        let cm = ConfusionMatrix {
            class_names: names(),
            counts: vec![vec![3, 0, 0], vec![0, 2, 1], vec![0, 0, 0]],
        };
        let (m, flags) = classification_report(&cm).unwrap();
        assert!(flags.contains(&"zero_division:recall:healthy".to_string()));
        assert!(flags.contains(&"zero_division:f1:healthy".to_string()));
        assert_eq!(m.per_class[2].recall, 0.0);
        assert_eq!(m.per_class[2].precision, 0.0);
        let manual = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
        assert!((m.weighted.recall - manual).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(confusion_matrix(&[0, 3], &[0, 0], &names()).is_err());
        assert!(confusion_matrix(&[0], &[0, 0], &names()).is_err());
        let empty = ConfusionMatrix {
            class_names: names(),
            counts: vec![vec![0; 3]; 3],
        };
        assert!(classification_report(&empty).is_err());
    }

    #[test]
    fn timing_bounds() {
        let (_, quick) = timed(|| 1 + 1);
        assert!(quick >= 0.0);
        let (inner, outer) =
            timed(|| timed(|| std::thread::sleep(std::time::Duration::from_millis(20))).1);
        assert!(inner >= 0.02);
        assert!(outer >= inner);
    }

    #[test]
    fn rendered_matrix_matches_golden() {
        let cm = ConfusionMatrix {
            class_names: names(),
            counts: vec![vec![5, 0, 0], vec![1, 4, 0], vec![0, 1, 14]],
        };
        let golden = "\
true \\ pred  anthracnose  fruit_fly  healthy
anthracnose            5          0        0
fruit_fly              1          4        0
healthy                0          1       14
";
        assert_eq!(cm.render(), golden);
    }
}
