use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::PuDataset;
use super::{check_fit_input, ScoredModel};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-column z-scoring. Constant columns are centred but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            scale.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        Self { mean, scale }
    }

    fn apply(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        for (j, v) in row.iter().enumerate() {
            out[j] = (v - self.mean[j]) / self.scale[j];
        }
    }

    fn transform(&self, x: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
        x.rows()
            .into_iter()
            .map(|r| {
                let mut z = vec![0.0; r.len()];
                self.apply(r, &mut z);
                z
            })
            .collect()
    }
}

/// `w · standardize(x) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut acc = self.bias;
        for (j, v) in row.iter().enumerate() {
            acc += self.weights[j] * (v - self.standardizer.mean[j]) / self.standardizer.scale[j];
        }
        acc
    }

    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.decision_row(r)).collect()
    }
}

fn dot(w: &[f64], z: &[f64]) -> f64 {
    w.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Running mean of SGD iterates over the second half of training.
struct Averager {
    w: Vec<f64>,
    b: f64,
    count: f64,
}

impl Averager {
    fn new(d: usize) -> Self {
        Self { w: vec![0.0; d], b: 0.0, count: 0.0 }
    }

    fn push(&mut self, w: &[f64], b: f64) {
        self.count += 1.0;
        let k = 1.0 / self.count;
        for (a, v) in self.w.iter_mut().zip(w) {
            *a += (v - *a) * k;
        }
        self.b += (b - self.b) * k;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregConfig {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LogregConfig {
    fn default() -> Self {
        Self { l2: 1e-4, epochs: 100, lr: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    pub scorer: LinearScorer,
}

impl LogregModel {
    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.scorer.decision_row(row))
    }
}

/// L2-regularised log loss by averaged SGD on `s` as the class label.
pub fn fit_logreg(data: &PuDataset, cfg: &LogregConfig, seed: u64) -> Result<ScoredModel> {
    check_fit_input(data)?;
    let data = &data.canonical();
    if !(cfg.l2 >= 0.0 && cfg.lr > 0.0) || cfg.epochs == 0 {
        return Err(Error::Config("logreg needs l2 ≥ 0, lr > 0, epochs ≥ 1".into()));
    }
    let standardizer = Standardizer::fit(data.view());
    let z = standardizer.transform(data.view());
    let y: Vec<f64> = data.s.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();
    let d = data.dim();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg = Averager::new(d);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = rng_from_seed(seed);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr / (1.0 + 0.05 * epoch as f64);
        for &i in &order {
            let err = sigmoid(dot(&w, &z[i]) + b) - y[i];
            for (wj, zj) in w.iter_mut().zip(&z[i]) {
                *wj -= lr * (err * zj + cfg.l2 * *wj);
            }
            b -= lr * err;
            if 2 * epoch >= cfg.epochs {
                avg.push(&w, b);
            }
        }
    }
    Ok(ScoredModel::Logreg(LogregModel {
        scorer: LinearScorer { standardizer, weights: avg.w, bias: avg.b },
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Inverse regularisation strength; `λ = 1 / (c_reg · n)`.
    pub c_reg: f64,
    pub epochs: usize,
    pub lr: f64,
    pub calibration_fraction: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c_reg: 1.0, epochs: 50, lr: 0.1, calibration_fraction: 0.2 }
    }
}

/// Platt sigmoid `1 / (1 + exp(a·f + b))` over the decision value `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling {
    pub a: f64,
    pub b: f64,
}

impl PlattScaling {
    pub fn apply(&self, f: f64) -> f64 {
        sigmoid(-(self.a * f + self.b))
    }

    /// Newton fit with regularised targets (Lin, Lin & Weng's variant).
    pub fn fit(decision: &[f64], labels: &[bool]) -> Result<Self> {
        let n_pos = labels.iter().filter(|&&l| l).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        if n_pos == 0.0 || n_neg == 0.0 {
            return Err(Error::Calibration("calibration slice holds a single class".into()));
        }
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let t: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();
        let objective = |a: f64, b: f64| -> f64 {
            decision
                .iter()
                .zip(&t)
                .map(|(&f, &ti)| {
                    let z = f * a + b;
                    if z >= 0.0 {
                        ti * z + (-z).exp().ln_1p()
                    } else {
                        (ti - 1.0) * z + z.exp().ln_1p()
                    }
                })
                .sum()
        };
        let mut a = 0.0;
        let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
        let mut fval = objective(a, b);
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (&f, &ti) in decision.iter().zip(&t) {
                let p = sigmoid(-(f * a + b));
                let d2 = p * (1.0 - p);
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = ti - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step *= 0.5;
            }
            if step < 1e-10 {
                break;
            }
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Calibration("Platt scaling diverged".into()));
        }
        Ok(Self { a, b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub scorer: LinearScorer,
    pub platt: PlattScaling,
}

impl SvmModel {
    pub fn decision_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.scorer.decision_row(row)
    }

    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.platt.apply(self.decision_row(row))
    }
}

/// Calibration rows: one shuffle of all rows, then the first
/// `ceil(fraction · |class|)` rows of each class in shuffled order. Depends
/// only on the class partition, not on which side is called positive.
fn calibration_rows(labels: &[bool], fraction: f64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let n_pos = labels.iter().filter(|&&l| l).count();
    let quota = |count: usize| ((fraction * count as f64).ceil() as usize).clamp(1, count);
    let (q_pos, q_neg) = (quota(n_pos), quota(labels.len() - n_pos));
    let (mut c_pos, mut c_neg) = (0, 0);
    let mut rows = Vec::with_capacity(q_pos + q_neg);
    for i in order {
        let (count, quota) = if labels[i] { (&mut c_pos, q_pos) } else { (&mut c_neg, q_neg) };
        if *count < quota {
            *count += 1;
            rows.push(i);
        }
    }
    rows.sort_unstable();
    rows
}

/// Hinge loss with L2 penalty by averaged SGD, then Platt scaling on a
/// stratified slice of the training rows.
pub fn fit_linear_svm(data: &PuDataset, cfg: &SvmConfig, seed: u64) -> Result<ScoredModel> {
    check_fit_input(data)?;
    let data = &data.canonical();
    if !(cfg.c_reg > 0.0 && cfg.lr > 0.0) || cfg.epochs == 0 {
        return Err(Error::Config("linear_svm needs c_reg > 0, lr > 0, epochs ≥ 1".into()));
    }
    if !(cfg.calibration_fraction > 0.0 && cfg.calibration_fraction <= 1.0) {
        return Err(Error::Config("calibration_fraction must be in (0,1]".into()));
    }
    let standardizer = Standardizer::fit(data.view());
    let z = standardizer.transform(data.view());
    let y: Vec<f64> = data.s.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
    let n = data.len();
    let d = data.dim();
    let lambda = 1.0 / (cfg.c_reg * n as f64);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg = Averager::new(d);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let mut t = 0.0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = cfg.lr / (1.0 + cfg.lr * lambda * t);
            t += 1.0;
            let margin = y[i] * (dot(&w, &z[i]) + b);
            for wj in w.iter_mut() {
                *wj *= 1.0 - lr * lambda;
            }
            if margin < 1.0 {
                for (wj, zj) in w.iter_mut().zip(&z[i]) {
                    *wj += lr * y[i] * zj;
                }
                b += lr * y[i];
            }
            if 2 * epoch >= cfg.epochs {
                avg.push(&w, b);
            }
        }
    }
    let scorer = LinearScorer { standardizer, weights: avg.w, bias: avg.b };
    let rows = calibration_rows(&data.s, cfg.calibration_fraction, derive_seed(seed, 1));
    let decision: Vec<f64> = rows.iter().map(|&i| scorer.decision_row(data.features.row(i))).collect();
    let labels: Vec<bool> = rows.iter().map(|&i| data.s[i]).collect();
    let platt = PlattScaling::fit(&decision, &labels)?;
    Ok(ScoredModel::LinearSvm(SvmModel { scorer, platt }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-1000.0) >= 0.0);
        assert!(sigmoid(1000.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standardizer_handles_constant_column() {
        let x = Array2::from_shape_vec((3, 2), vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0]).unwrap();
        let s = Standardizer::fit(x.view());
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale[1], 1.0);
    }

    #[test]
    fn platt_recovers_logistic_link() {
        // Decision values with labels drawn from p = sigmoid(2f).
        let mut f = Vec::new();
        let mut l = Vec::new();
        for k in 0..400 {
            let v = -2.0 + 4.0 * k as f64 / 399.0;
            let p = sigmoid(2.0 * v);
            let reps = 20;
            let pos = (p * reps as f64).round() as usize;
            for r in 0..reps {
                f.push(v);
                l.push(r < pos);
            }
        }
        let platt = PlattScaling::fit(&f, &l).unwrap();
        assert!((platt.a + 2.0).abs() < 0.1, "a = {}", platt.a);
        assert!(platt.b.abs() < 0.1, "b = {}", platt.b);
    }

    #[test]
    fn platt_single_class_fails() {
        assert!(PlattScaling::fit(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn calibration_rows_symmetric_under_flip() {
        let labels: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        assert_eq!(calibration_rows(&labels, 0.2, 4), calibration_rows(&flipped, 0.2, 4));
        let rows = calibration_rows(&labels, 0.2, 4);
        let pos = rows.iter().filter(|&&i| labels[i]).count();
        assert_eq!(pos, 4);
        assert_eq!(rows.len() - pos, 7);
    }
}
