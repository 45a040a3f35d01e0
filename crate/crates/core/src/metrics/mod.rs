//! Precision, recall, F1 and the PU-estimable PUF1 (`r̂² / Pr(ŷ = 1)`),
//! reported against observed labels (estimated) or true labels (defacto).

mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use table::{render_markdown, write_matrix_csv, MatrixCell, MATRIX_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Reference labels are `s`: hidden positives count as negatives.
    Estimated,
    /// Reference labels are `y`.
    Defacto,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Estimated => "estimated",
            Variant::Defacto => "defacto",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Puf1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Puf1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Puf1 => "puf1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::Puf1 => "PUF1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub puf1: f64,
    pub positive_rate: f64,
    pub variant: Variant,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Puf1 => self.puf1,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Confusion counts and derived metrics of `predictions` against `reference`.
/// Precision is 0 when nothing is predicted positive; PUF1 uses recall
/// against `reference`. The variant is `Estimated`; see
/// [`MetricsReport::with_variant`].
pub fn standard_metrics(predictions: &[bool], reference: &[bool]) -> Result<MetricsReport> {
    check_lengths(predictions.len(), reference.len())?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &r) in predictions.iter().zip(reference) {
        match (p, r) {
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
    let positive_rate = ratio(tp + fp, predictions.len());
    // r² / rate = tp²·n / ((tp + fn)²·(tp + fp)), divided once so that
    // exact ratios come out exact.
    let puf1 = if tp > 0 {
        let num = (tp as u128).pow(2) * predictions.len() as u128;
        let den = ((tp + fn_) as u128).pow(2) * (tp + fp) as u128;
        num as f64 / den as f64
    } else {
        0.0
    };
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        puf1,
        positive_rate,
        variant: Variant::Estimated,
        tp,
        fp,
        tn,
        fn_,
    })
}

/// `r̂² / Pr(ŷ = 1)` with `r̂` the fraction of labeled positives predicted
/// positive. Zero when nothing is predicted positive.
pub fn puf1(predictions: &[bool], s: &[bool]) -> Result<f64> {
    check_lengths(predictions.len(), s.len())?;
    if predictions.is_empty() {
        return Err(Error::UndefinedMetric("PUF1 of an empty prediction set".into()));
    }
    if !s.iter().any(|&b| b) {
        return Err(Error::UndefinedMetric("PUF1 needs at least one labeled positive".into()));
    }
    Ok(standard_metrics(predictions, s)?.puf1)
}

/// The same predictions scored against `s` and against `y`.
pub fn estimated_vs_defacto(
    predictions: &[bool],
    s: &[bool],
    y: Option<&[bool]>,
) -> Result<(MetricsReport, MetricsReport)> {
    let y = y.ok_or_else(|| Error::UndefinedMetric("defacto metrics need true labels y".into()))?;
    check_lengths(s.len(), y.len())?;
    let est = standard_metrics(predictions, s)?;
    let def = standard_metrics(predictions, y)?.with_variant(Variant::Defacto);
    Ok((est, def))
}

/// Mean and sample standard deviation of each metric across reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: [f64; 4],
    pub sd: [f64; 4],
    pub n: usize,
}

impl MetricSummary {
    pub fn of(reports: &[MetricsReport]) -> Self {
        let n = reports.len();
        let mut mean = [0.0; 4];
        let mut sd = [0.0; 4];
        if n == 0 {
            return Self { mean, sd, n };
        }
        for (k, metric) in Metric::ALL.iter().enumerate() {
            let vals: Vec<f64> = reports.iter().map(|r| r.get(*metric)).collect();
            let m = vals.iter().sum::<f64>() / n as f64;
            mean[k] = m;
            if n > 1 {
                sd[k] = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt();
            }
        }
        Self { mean, sd, n }
    }

    pub fn mean_of(&self, metric: Metric) -> f64 {
        self.mean[Metric::ALL.iter().position(|&m| m == metric).unwrap()]
    }

    pub fn sd_of(&self, metric: Metric) -> f64 {
        self.sd[Metric::ALL.iter().position(|&m| m == metric).unwrap()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counted(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<bool>, Vec<bool>) {
        let mut pred = Vec::new();
        let mut refr = Vec::new();
        for (n, p, r) in [(tp, true, true), (fp, true, false), (fn_, false, true), (tn, false, false)] {
            pred.extend(std::iter::repeat_n(p, n));
            refr.extend(std::iter::repeat_n(r, n));
        }
        (pred, refr)
    }

    #[test]
    fn perfect_predictions() {
        let (p, r) = counted(5, 0, 0, 5);
        let m = standard_metrics(&p, &r).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn counted_eight_two_two() {
        let (p, r) = counted(8, 2, 2, 88);
        let m = standard_metrics(&p, &r).unwrap();
        assert!((m.precision - 0.8).abs() < 1e-15);
        assert!((m.recall - 0.8).abs() < 1e-15);
        assert!((m.f1 - 0.8).abs() < 1e-15);
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (8, 2, 2, 88));
    }

    #[test]
    fn all_negative_predictions() {
        let (_, r) = counted(3, 0, 0, 7);
        let m = standard_metrics(&[false; 10], &r).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.puf1), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            standard_metrics(&[true], &[true, false]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn puf1_perfect_at_half_rate() {
        let (p, s) = counted(50, 0, 0, 50);
        assert_eq!(puf1(&p, &s).unwrap(), 2.0);
    }

    #[test]
    fn puf1_counted_fixture() {
        // 10 labeled positives, 8 of them predicted; 40 positive predictions in 100.
        let (p, s) = counted(8, 32, 2, 58);
        assert_eq!(p.len(), 100);
        assert_eq!(puf1(&p, &s).unwrap(), 1.6);
    }

    #[test]
    fn puf1_all_positive_predictor_is_one() {
        let s: Vec<bool> = (0..20).map(|i| i % 4 == 0).collect();
        assert_eq!(puf1(&[true; 20], &s).unwrap(), 1.0);
    }

    #[test]
    fn puf1_undefined() {
        assert!(matches!(puf1(&[true, false], &[false, false]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(puf1(&[], &[]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn hidden_positives_predicted() {
        // 10 labeled positives, then 10 unlabeled of which the first 2 are
        // hidden positives; predictions match y exactly.
        let y: Vec<bool> = (0..20).map(|i| i < 12).collect();
        let s: Vec<bool> = (0..20).map(|i| i < 10).collect();
        let (est, def) = estimated_vs_defacto(&y, &s, Some(&y)).unwrap();
        assert!((est.precision - 10.0 / 12.0).abs() < 1e-15);
        assert_eq!(def.precision, 1.0);
        assert_eq!(est.recall, 1.0);
        assert_eq!(def.recall, 1.0);
        assert_eq!(est.variant, Variant::Estimated);
        assert_eq!(def.variant, Variant::Defacto);
    }

    #[test]
    fn no_hidden_positives_identical() {
        let y = [true, false, true, true, false];
        let pred = [true, true, false, true, false];
        let (est, def) = estimated_vs_defacto(&pred, &y, Some(&y)).unwrap();
        assert_eq!(est.with_variant(Variant::Defacto), def);
    }

    #[test]
    fn missing_y() {
        assert!(estimated_vs_defacto(&[true], &[true], None).is_err());
    }

    #[test]
    fn summary_mean_sd() {
        let (p, r) = counted(1, 1, 0, 0);
        let a = standard_metrics(&p, &r).unwrap();
        let b = standard_metrics(&r, &r).unwrap();
        let s = MetricSummary::of(&[a, b]);
        assert_eq!(s.mean_of(Metric::Precision), 0.75);
        assert!((s.sd_of(Metric::Precision) - 0.5f64.sqrt() * 0.5).abs() < 1e-12);
        assert_eq!(s.n, 2);
    }
}
