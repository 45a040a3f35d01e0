use ndarray::ArrayView1;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::classify::{BaseLearner, PuDataset, ScoredModel, SvmConfig};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaggingPuConfig {
    pub base: BaseLearner,
    pub rounds: usize,
    /// Unlabeled draws per round; `None` means the number of labeled positives.
    pub sample_size: Option<usize>,
    pub replacement: bool,
}

impl Default for BaggingPuConfig {
    fn default() -> Self {
        Self {
            base: BaseLearner::LinearSvm(SvmConfig::default()),
            rounds: 100,
            sample_size: None,
            replacement: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggingPuModel {
    pub members: Vec<ScoredModel>,
    pub sample_size: usize,
    /// Per training row: mean score over the rounds that did not draw it.
    /// `None` for labeled rows and for unlabeled rows drawn in every round.
    pub oob_scores: Vec<Option<f64>>,
}

impl BaggingPuModel {
    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.members.iter().map(|m| m.score_row(row)).sum::<f64>() / self.members.len() as f64
    }
}

/// Seed handed to the base learner in `round`. Draws use a separate stream.
pub fn member_seed(seed: u64, round: usize) -> u64 {
    derive_seed(derive_seed(seed, round as u64), 0)
}

fn draw_seed(seed: u64, round: usize) -> u64 {
    derive_seed(derive_seed(seed, round as u64), 1)
}

/// Each round fits the base on all labeled positives plus `K` unlabeled rows
/// taken as negatives. Training rows keep their original order.
pub fn fit_bagging_pu(data: &PuDataset, cfg: &BaggingPuConfig, seed: u64) -> Result<BaggingPuModel> {
    let data = super::observed_only(data);
    let positives: Vec<usize> = (0..data.len()).filter(|&i| data.s[i]).collect();
    let unlabeled: Vec<usize> = (0..data.len()).filter(|&i| !data.s[i]).collect();
    if positives.is_empty() || unlabeled.is_empty() {
        return Err(Error::DegenerateData(format!(
            "bagging needs positives and unlabeled rows, got {} and {}",
            positives.len(),
            unlabeled.len()
        )));
    }
    if cfg.rounds == 0 {
        return Err(Error::Config("bagging rounds must be ≥ 1".into()));
    }
    let k = cfg.sample_size.unwrap_or(positives.len());
    if k == 0 {
        return Err(Error::Config("bagging sample_size must be ≥ 1".into()));
    }
    if !cfg.replacement && k > unlabeled.len() {
        return Err(Error::Sampling(format!(
            "sample_size {k} exceeds {} unlabeled rows without replacement",
            unlabeled.len()
        )));
    }

    let rounds = par::map_indexed(cfg.rounds, |t| -> Result<(ScoredModel, Vec<bool>)> {
        let mut rng = rng_from_seed(draw_seed(seed, t));
        let drawn: Vec<usize> = if cfg.replacement {
            (0..k).map(|_| unlabeled[rng.random_range(0..unlabeled.len())]).collect()
        } else {
            sample(&mut rng, unlabeled.len(), k).into_iter().map(|j| unlabeled[j]).collect()
        };
        let mut in_bag = vec![false; data.len()];
        for &i in &drawn {
            in_bag[i] = true;
        }
        let mut rows: Vec<usize> = positives.iter().copied().chain(drawn).collect();
        rows.sort_unstable();
        let model = cfg.base.fit(&data.subset(&rows), member_seed(seed, t))?;
        Ok((model, in_bag))
    });

    let mut members = Vec::with_capacity(cfg.rounds);
    let mut sums = vec![0.0; data.len()];
    let mut counts = vec![0usize; data.len()];
    let u_view = data.subset(&unlabeled);
    for r in rounds {
        let (model, in_bag) = r?;
        let scores = model.scores(u_view.view())?;
        for (&i, s) in unlabeled.iter().zip(scores) {
            if !in_bag[i] {
                sums[i] += s;
                counts[i] += 1;
            }
        }
        members.push(model);
    }
    let oob_scores = (0..data.len())
        .map(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64))
        .collect();
    Ok(BaggingPuModel {
        members,
        sample_size: k,
        oob_scores,
    })
}
