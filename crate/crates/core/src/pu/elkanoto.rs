use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::classify::{BaseLearner, LogregConfig, PuDataset, ScoredModel};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const MIN_HOLDOUT_POSITIVES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElkanotoConfig {
    pub base: BaseLearner,
    pub holdout_fraction: f64,
}

impl Default for ElkanotoConfig {
    fn default() -> Self {
        Self {
            base: BaseLearner::Logreg(LogregConfig::default()),
            holdout_fraction: 0.2,
        }
    }
}

/// Base model `g(x) ≈ Pr(s=1|x)` and label frequency `ĉ`;
/// the adapted score is `min(1, g(x) / ĉ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElkanotoModel {
    pub base: Box<ScoredModel>,
    pub c_hat: f64,
}

impl ElkanotoModel {
    pub fn new(base: ScoredModel, c_hat: f64) -> Result<Self> {
        if !(c_hat > 0.0 && c_hat <= 1.0) {
            return Err(Error::Calibration(format!("label frequency estimate {c_hat} outside (0, 1]")));
        }
        Ok(Self {
            base: Box::new(base),
            c_hat,
        })
    }

    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        (self.base.score_row(row) / self.c_hat).min(1.0)
    }
}

/// Fits the base on the non-holdout part of `(features, s)` and sets `ĉ` to
/// the mean base score over holdout labeled positives.
pub fn fit_elkanoto(data: &PuDataset, cfg: &ElkanotoConfig, seed: u64) -> Result<ElkanotoModel> {
    let data = super::observed_only(data).canonical();
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::Config(format!(
            "holdout_fraction must be in (0,1), got {}",
            cfg.holdout_fraction
        )));
    }
    let (holdout, rest) = data.stratified_indices(cfg.holdout_fraction, derive_seed(seed, 0));
    let holdout_pos: Vec<usize> = holdout.into_iter().filter(|&i| data.s[i]).collect();
    if holdout_pos.len() < MIN_HOLDOUT_POSITIVES {
        return Err(Error::DegenerateData(format!(
            "holdout has {} labeled positives, need at least {MIN_HOLDOUT_POSITIVES}",
            holdout_pos.len()
        )));
    }
    let base = cfg.base.fit(&data.subset(&rest), derive_seed(seed, 1))?;
    let scores = base.scores(data.subset(&holdout_pos).view())?;
    let c_hat = scores.iter().sum::<f64>() / scores.len() as f64;
    if c_hat <= 0.0 {
        return Err(Error::Calibration("base model scores every holdout positive at 0".into()));
    }
    log::debug!("elkanoto: c_hat = {c_hat:.4} from {} holdout positives", holdout_pos.len());
    ElkanotoModel::new(base, c_hat.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub pi_hat: f64,
    /// `None` when every row is labeled and no model was fitted.
    pub c_hat: Option<f64>,
}

/// `π̂ = Pr(s=1) / ĉ`, clipped to `(0, 1]`.
pub fn class_prior_from(labeled_fraction: f64, c_hat: f64) -> f64 {
    (labeled_fraction / c_hat).clamp(f64::MIN_POSITIVE, 1.0)
}

pub fn estimate_class_prior(data: &PuDataset, cfg: &ElkanotoConfig, seed: u64) -> Result<PriorEstimate> {
    let frac = data.labeled_fraction();
    if data.labeled_count() == data.len() && !data.is_empty() {
        return Ok(PriorEstimate { pi_hat: 1.0, c_hat: None });
    }
    let model = fit_elkanoto(data, cfg, seed)?;
    Ok(PriorEstimate {
        pi_hat: class_prior_from(frac, model.c_hat),
        c_hat: Some(model.c_hat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::fit_logreg;
    use ndarray::{array, Array2};

    #[test]
    fn adapted_scores_by_hand() {
        let x = array![[-2.0], [0.0], [2.0], [-1.0], [1.0], [3.0]];
        let s = vec![false, false, true, false, true, true];
        let data = PuDataset::new(x, s, None).unwrap();
        let base = fit_logreg(&data, &LogregConfig::default(), 1).unwrap();
        let probe = array![[-1.5], [0.5], [4.0]];
        let g = base.scores(probe.view()).unwrap();
        let m = ElkanotoModel::new(base, 0.6).unwrap();
        let f = m.base.scores(probe.view()).unwrap();
        assert_eq!(f, g);
        let adapted: Vec<f64> = probe.rows().into_iter().map(|r| m.score_row(r)).collect();
        for (a, g) in adapted.iter().zip(&g) {
            assert!((a - (g / 0.6).min(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn c_hat_bounds() {
        let data = PuDataset::new(Array2::zeros((2, 1)), vec![true, false], None).unwrap();
        let base = fit_logreg(&data, &LogregConfig::default(), 0).unwrap();
        assert!(ElkanotoModel::new(base.clone(), 0.0).is_err());
        assert!(ElkanotoModel::new(base.clone(), 1.2).is_err());
        assert!(ElkanotoModel::new(base, 1.0).is_ok());
    }

    #[test]
    fn prior_from_c_one_is_labeled_fraction() {
        assert_eq!(class_prior_from(0.15, 1.0), 0.15);
        assert_eq!(class_prior_from(0.6, 0.5), 1.0);
    }

    #[test]
    fn all_labeled_prior_is_one() {
        let data = PuDataset::new(Array2::zeros((4, 1)), vec![true; 4], None).unwrap();
        let est = estimate_class_prior(&data, &ElkanotoConfig::default(), 0).unwrap();
        assert_eq!(est.pi_hat, 1.0);
    }

    #[test]
    fn too_few_holdout_positives() {
        let x = Array2::from_shape_fn((30, 1), |(i, _)| i as f64);
        let s = (0..30).map(|i| i >= 25).collect();
        let data = PuDataset::new(x, s, None).unwrap();
        assert!(matches!(
            fit_elkanoto(&data, &ElkanotoConfig::default(), 0),
            Err(Error::DegenerateData(_))
        ));
    }
}
