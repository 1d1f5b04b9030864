use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Label;

/// Binary classification metrics with Real as the positive class.
///
/// `fold` is the fold index, or `None` for a mean over folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub train_seconds: f64,
    pub fold: Option<usize>,
}

impl MetricsReport {
    /// Same report without the wall-clock field, for reproducibility checks.
    pub fn without_timing(mut self) -> Self {
        self.train_seconds = 0.0;
        self
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fold {
            Some(k) => writeln!(f, "fold={k}")?,
            None => writeln!(f, "fold=mean")?,
        }
        writeln!(f, "accuracy={}", self.accuracy)?;
        writeln!(f, "precision={}", self.precision)?;
        writeln!(f, "recall={}", self.recall)?;
        writeln!(f, "f1={}", self.f1)?;
        writeln!(f, "auc={}", self.auc)?;
        write!(f, "train_seconds={}", self.train_seconds)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Area under the ROC curve from the rank-sum statistic; tied scores count
/// half. Without both classes present the curve is undefined and 0.5 is
/// returned.
pub fn auc(scores: &[f64], labels: &[Label]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l == Label::Real).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // ranks are 1-based; a tie group spanning ranks lo..=hi shares (lo+hi)/2
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + end + 2) as f64 / 2.0;
        let pos_in_group = order[start..=end]
            .iter()
            .filter(|&&i| labels[i] == Label::Real)
            .count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        start = end + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos * n_neg) as f64
}

/// Scores `>= threshold` predict Real.
pub fn evaluate(scores: &[f64], labels: &[Label], threshold: f64) -> Result<MetricsReport> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "scores vs labels",
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidParameter("cannot evaluate an empty prediction set".into()));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {bad}")));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == Label::Real) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        accuracy: ratio(tp + tn, scores.len()),
        precision,
        recall,
        f1,
        auc: auc(scores, labels),
        train_seconds: 0.0,
        fold: None,
    })
}

/// Field-wise arithmetic mean over folds.
pub fn mean_report(reports: &[MetricsReport]) -> Option<MetricsReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(MetricsReport {
        accuracy: mean(|r| r.accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        auc: mean(|r| r.auc),
        train_seconds: mean(|r| r.train_seconds),
        fold: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Fake as F, Real as R};

    #[test]
    fn hand_computed_confusion_matrix() {
        let m = evaluate(&[1.0, 1.0, 0.0, 0.0], &[R, F, F, R], 0.5).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn perfect_ranking() {
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.2], &[R, R, F, F]), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[R, R, F, F]), 0.0);
        assert_eq!(auc(&[0.5, 0.5], &[R, F]), 0.5);
    }

    #[test]
    fn all_positive() {
        let m = evaluate(&[0.9, 0.6, 0.7], &[R, R, R], 0.5).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.auc, 0.5);
    }

    #[test]
    fn no_predicted_positives() {
        let m = evaluate(&[0.1, 0.2], &[R, F], 0.5).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.0, 0.0, 0.0, 0.5));
    }

    #[test]
    fn input_errors() {
        assert!(evaluate(&[], &[], 0.5).is_err());
        assert!(evaluate(&[0.5], &[R, F], 0.5).is_err());
        assert!(evaluate(&[f64::NAN], &[R], 0.5).is_err());
    }

    #[test]
    fn report_formats() {
        let m = MetricsReport {
            accuracy: 0.75,
            precision: 1.0,
            recall: 0.5,
            f1: 2.0 / 3.0,
            auc: 0.8,
            train_seconds: 1.5,
            fold: Some(2),
        };
        let text = m.to_string();
        assert!(text.starts_with("fold=2\naccuracy=0.75\n"));
        assert!(text.ends_with("train_seconds=1.5"));
        let json: serde_json::Value = serde_json::to_value(m).unwrap();
        for key in ["accuracy", "precision", "recall", "f1", "auc", "train_seconds", "fold"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let mean = mean_report(&[m, MetricsReport { accuracy: 0.25, ..m }]).unwrap();
        assert_eq!(mean.accuracy, 0.5);
        assert_eq!(mean.fold, None);
        assert!(mean.to_string().starts_with("fold=mean\n"));
    }
}
