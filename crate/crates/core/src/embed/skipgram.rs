//! Skip-gram with negative sampling over node sequences.

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Context radius on each side; the effective radius is drawn from
    /// `1..=window` per position.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to `lr * 1e-4`.
    pub lr: f64,
    pub rng_seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: super::DEFAULT_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            rng_seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else if x < -30.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Unigram^0.75 sampler via cumulative weights.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[usize]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut crate::rng::Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

/// Trains input vectors for tokens `0..vocab_size`. Tokens absent from the
/// corpus keep their random initialisation.
pub fn train_skipgram(corpus: &[Vec<usize>], vocab_size: usize, cfg: &SkipGramConfig) -> Result<Array2<f64>> {
    if cfg.dim == 0 {
        return Err(Error::Config("embedding dim must be ≥ 1".into()));
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    let dim = cfg.dim;
    let mut rng = rng_from_seed(cfg.rng_seed);
    let mut syn0: Vec<f64> = (0..vocab_size * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut syn1 = vec![0.0; vocab_size * dim];

    let mut counts = vec![0usize; vocab_size];
    let mut tokens = 0usize;
    for walk in corpus {
        for &t in walk {
            if t >= vocab_size {
                return Err(Error::Config(format!("token {t} outside vocabulary of {vocab_size}")));
            }
            counts[t] += 1;
        }
        tokens += walk.len();
    }
    if tokens == 0 || vocab_size == 0 {
        return Ok(Array2::from_shape_vec((vocab_size, dim), syn0).expect("shape"));
    }
    let noise = NoiseTable::new(&counts);

    let total = (tokens * cfg.epochs).max(1) as f64;
    let min_lr = cfg.lr * 1e-4;
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];

    for _ in 0..cfg.epochs {
        for walk in corpus {
            for (i, &center) in walk.iter().enumerate() {
                let lr = (cfg.lr * (1.0 - processed as f64 / total)).max(min_lr);
                processed += 1;
                let radius = if cfg.window == 0 { 0 } else { rng.random_range(1..=cfg.window) };
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(walk.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let ctx = walk[j];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let input = ctx * dim;
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (center, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = target * dim;
                        let dot: f64 = (0..dim).map(|d| syn0[input + d] * syn1[out + d]).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * syn1[out + d];
                            syn1[out + d] += g * syn0[input + d];
                        }
                    }
                    for d in 0..dim {
                        syn0[input + d] += grad[d];
                    }
                }
            }
        }
    }
    Ok(Array2::from_shape_vec((vocab_size, dim), syn0).expect("shape"))
}
