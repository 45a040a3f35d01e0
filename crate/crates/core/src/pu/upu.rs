use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::classify::{sigmoid, LinearScorer, PuDataset, Standardizer};
use crate::error::{Error, Result};

use super::elkanoto::{estimate_class_prior, ElkanotoConfig};

/// `ℓ(z) = max(−z, max(0, (1 − z) / 2))`; satisfies `ℓ(z) − ℓ(−z) = −z`.
pub fn double_hinge(z: f64) -> f64 {
    (-z).max(0.0_f64.max(0.5 * (1.0 - z)))
}

fn double_hinge_slope(z: f64) -> f64 {
    if z < -1.0 {
        -1.0
    } else if z < 1.0 {
        -0.5
    } else {
        0.0
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Unbiased PU risk of decision values `g` with labeled set `{s = 1}` and
/// every row standing in for the unlabeled marginal sample:
/// `π·mean_P ℓ(g) − π·mean_P ℓ(−g) + mean_all ℓ(−g)`.
pub fn upu_risk(g: &[f64], s: &[bool], prior: f64) -> f64 {
    let pos = || g.iter().zip(s).filter(|(_, &s)| s).map(|(&g, _)| g);
    prior * mean(pos().map(double_hinge)) - prior * mean(pos().map(|g| double_hinge(-g)))
        + mean(g.iter().map(|&g| double_hinge(-g)))
}

/// Fully labeled risk `π·mean_{y=1} ℓ(g) + (1 − π)·mean_{y=0} ℓ(−g)`.
pub fn pn_risk(g: &[f64], y: &[bool], prior: f64) -> f64 {
    let p = mean(g.iter().zip(y).filter(|(_, &y)| y).map(|(&g, _)| double_hinge(g)));
    let n = mean(g.iter().zip(y).filter(|(_, &y)| !y).map(|(&g, _)| double_hinge(-g)));
    prior * p + (1.0 - prior) * n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpuConfig {
    /// Class prior `π`; estimated from the data when absent.
    pub prior: Option<f64>,
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub prior_estimator: ElkanotoConfig,
}

impl Default for UpuConfig {
    fn default() -> Self {
        Self {
            prior: None,
            epochs: 300,
            lr: 0.5,
            l2: 1e-3,
            prior_estimator: ElkanotoConfig::default(),
        }
    }
}

/// Estimated priors are kept this far inside `(0, 1)`.
const PRIOR_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpuModel {
    pub scorer: LinearScorer,
    pub prior: f64,
    /// Regularised training risk after each epoch.
    pub risk_history: Vec<f64>,
}

impl UpuModel {
    pub fn decision_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.scorer.decision_row(row)
    }

    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.decision_row(row))
    }
}

/// Linear `g` minimising the double-hinge uPU risk plus `l2/2·‖w‖²` by
/// full-batch subgradient descent with a `1/√t` step.
pub fn fit_upu(data: &PuDataset, cfg: &UpuConfig, seed: u64) -> Result<UpuModel> {
    let data = super::observed_only(data).canonical();
    let n_pos = data.labeled_count();
    if n_pos == 0 || n_pos == data.len() {
        return Err(Error::DegenerateData(format!(
            "uPU needs labeled and unlabeled rows, got {n_pos} of {}",
            data.len()
        )));
    }
    if !(cfg.lr > 0.0 && cfg.l2 >= 0.0) || cfg.epochs == 0 {
        return Err(Error::Config("upu needs lr > 0, l2 ≥ 0, epochs ≥ 1".into()));
    }
    let prior = match cfg.prior {
        Some(p) if p > 0.0 && p < 1.0 => p,
        Some(p) => return Err(Error::Config(format!("upu prior must be in (0,1), got {p}"))),
        None => estimate_class_prior(&data, &cfg.prior_estimator, seed)?
            .pi_hat
            .clamp(PRIOR_MARGIN, 1.0 - PRIOR_MARGIN),
    };

    let standardizer = Standardizer::fit(data.view());
    let d = data.dim();
    let n = data.len() as f64;
    let z: Vec<Vec<f64>> = data
        .features
        .rows()
        .into_iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (v - standardizer.mean[j]) / standardizer.scale[j]).collect())
        .collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut g = vec![0.0; data.len()];
    let mut risk_history = Vec::with_capacity(cfg.epochs);
    // With ℓ(z) − ℓ(−z) = −z the labeled term is linear: −π·mean_P g.
    let pos_weight = -prior / n_pos as f64;
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr / ((epoch + 1) as f64).sqrt();
        let mut gw: Vec<f64> = w.iter().map(|wj| cfg.l2 * wj).collect();
        let mut gb = 0.0;
        for (i, zi) in z.iter().enumerate() {
            let gi = zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            // d/dg ℓ(−g) = −ℓ'(−g)
            let mut coef = -double_hinge_slope(-gi) / n;
            if data.s[i] {
                coef += pos_weight;
            }
            for (gj, zj) in gw.iter_mut().zip(zi) {
                *gj += coef * zj;
            }
            gb += coef;
        }
        for (wj, gj) in w.iter_mut().zip(&gw) {
            *wj -= lr * gj;
        }
        b -= lr * gb;
        for (gi, zi) in g.iter_mut().zip(&z) {
            *gi = zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
        }
        let reg = 0.5 * cfg.l2 * w.iter().map(|v| v * v).sum::<f64>();
        risk_history.push(upu_risk(&g, &data.s, prior) + reg);
        if epoch == 0 || epoch + 1 == cfg.epochs {
            log::debug!("upu epoch {}: risk {:.6}", epoch + 1, risk_history[epoch]);
        }
    }
    Ok(UpuModel {
        scorer: LinearScorer {
            standardizer,
            weights: w,
            bias: b,
        },
        prior,
        risk_history,
    })
}
