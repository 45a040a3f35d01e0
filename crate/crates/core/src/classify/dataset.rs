use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
    #[default]
    None,
}

/// Features with observed labels `s` and, when known, true labels `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuDataset {
    pub features: Array2<f64>,
    pub s: Vec<bool>,
    pub y: Option<Vec<bool>>,
    pub split: SplitTag,
    /// Identifier of each row (e.g. local node id in a subnetwork).
    pub rows: Vec<usize>,
}

impl PuDataset {
    pub fn new(features: Array2<f64>, s: Vec<bool>, y: Option<Vec<bool>>) -> Result<Self> {
        if features.nrows() != s.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: s.len(),
            });
        }
        if let Some(y) = &y {
            if y.len() != s.len() {
                return Err(Error::LengthMismatch {
                    left: y.len(),
                    right: s.len(),
                });
            }
            if s.iter().zip(y).any(|(&s, &y)| s && !y) {
                return Err(Error::Config("labeled example with y = 0".into()));
            }
        }
        let rows = (0..s.len()).collect();
        Ok(Self {
            features,
            s,
            y,
            split: SplitTag::None,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labeled_count(&self) -> usize {
        self.s.iter().filter(|&&b| b).count()
    }

    pub fn labeled_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.labeled_count() as f64 / self.len() as f64
        }
    }

    pub fn subset(&self, idx: &[usize]) -> PuDataset {
        PuDataset {
            features: self.features.select(Axis(0), idx),
            s: idx.iter().map(|&i| self.s[i]).collect(),
            y: self.y.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
            split: self.split,
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
        }
    }

    /// Copy with rows sorted by feature values, then `s`. Fitting on this
    /// makes results independent of the input row order.
    pub(crate) fn canonical(&self) -> PuDataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.features
                .row(a)
                .iter()
                .zip(self.features.row(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.s[a].cmp(&self.s[b]))
        });
        self.subset(&idx)
    }

    /// Row indices split into `(first, second)` with `fraction` of each
    /// `s`-stratum in `first`. Row order within each part is ascending.
    pub fn stratified_indices(&self, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let mut first = Vec::new();
        let mut second = Vec::new();
        for label in [true, false] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.s[i] == label).collect();
            idx.shuffle(&mut rng);
            let take = (fraction * idx.len() as f64).round() as usize;
            first.extend_from_slice(&idx[..take]);
            second.extend_from_slice(&idx[take..]);
        }
        first.sort_unstable();
        second.sort_unstable();
        (first, second)
    }

    /// Stratified (by `s`) train/test split.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(PuDataset, PuDataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0,1), got {train_fraction}")));
        }
        let (train_idx, test_idx) = self.stratified_indices(train_fraction, seed);
        let mut train = self.subset(&train_idx);
        let mut test = self.subset(&test_idx);
        train.split = SplitTag::Train;
        test.split = SplitTag::Test;
        Ok((train, test))
    }
}
