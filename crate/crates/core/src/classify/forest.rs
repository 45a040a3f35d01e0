use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::PuDataset;
use super::{check_fit_input, ScoredModel};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or below `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf { positive: bool },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn vote(&self, row: ArrayView1<'_, f64>) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { positive } => return positive,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub dim: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Fraction of trees voting positive.
    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(row)).count();
        votes as f64 / self.trees.len() as f64
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [bool],
    cfg: &'a ForestConfig,
    max_features: usize,
    nodes: Vec<TreeNode>,
    rng: Rng,
    scratch: Vec<(f64, bool)>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let pos = rows.iter().filter(|&&i| self.y[i]).count();
        // Ties go to the positive side.
        self.nodes.push(TreeNode::Leaf { positive: 2 * pos >= rows.len() });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, impurity decrease) over a random feature subset.
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64)> {
        let d = self.x.ncols();
        let total = rows.len() as f64;
        let total_pos = rows.iter().filter(|&&i| self.y[i]).count() as f64;
        let parent = gini(total_pos, total);
        let mut best: Option<(usize, f64, f64)> = None;
        let features = sample(&mut self.rng, d, self.max_features.min(d));
        for f in features.iter() {
            self.scratch.clear();
            self.scratch.extend(rows.iter().map(|&i| (self.x[[i, f]], self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for k in 0..self.scratch.len() - 1 {
                if self.scratch[k].1 {
                    left_pos += 1.0;
                }
                let (v, next) = (self.scratch[k].0, self.scratch[k + 1].0);
                if v == next {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = total - nl;
                let impurity = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / total;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                    let mid = 0.5 * (v + next);
                    // Guard against midpoints that round onto `next`.
                    let threshold = if mid < next { mid } else { v };
                    best = Some((f, threshold, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let pos = rows.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == rows.len();
        let depth_capped = self.cfg.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || rows.len() < self.cfg.min_samples_split.max(2) {
            return self.leaf(rows);
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let x = self.x;
        rows.sort_by_key(|&i| x[[i, feature]] > threshold);
        let cut = rows.partition_point(|&i| x[[i, feature]] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { positive: false });
        let (l, r) = rows.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = TreeNode::Split { feature, threshold, left, right };
        at
    }
}

/// Bootstrap-sampled CART trees with Gini splits.
pub fn fit_random_forest(data: &PuDataset, cfg: &ForestConfig, seed: u64) -> Result<ScoredModel> {
    check_fit_input(data)?;
    let data = &data.canonical();
    if cfg.n_trees == 0 {
        return Err(Error::Config("random_forest needs n_trees ≥ 1".into()));
    }
    if cfg.max_features == Some(0) {
        return Err(Error::Config("random_forest max_features must be ≥ 1".into()));
    }
    let d = data.dim();
    let n = data.len();
    let max_features = cfg.max_features.unwrap_or(((d as f64).sqrt().ceil() as usize).max(1));
    let trees = par::map_indexed(cfg.n_trees, |t| {
        let mut rng = rng_from_seed(derive_seed(seed, t as u64));
        let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut b = Builder {
            x: data.view(),
            y: &data.s,
            cfg,
            max_features,
            nodes: Vec::new(),
            rng,
            scratch: Vec::new(),
        };
        b.grow(&mut rows, 0);
        DecisionTree { nodes: b.nodes }
    });
    Ok(ScoredModel::RandomForest(ForestModel { dim: d, trees }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn xor(n_side: usize) -> PuDataset {
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                let (a, b) = (i as f64 / n_side as f64 - 0.5, j as f64 / n_side as f64 - 0.5);
                rows.extend([a, b]);
                s.push((a > 0.0) != (b > 0.0));
            }
        }
        PuDataset::new(Array2::from_shape_vec((s.len(), 2), rows).unwrap(), s, None).unwrap()
    }

    #[test]
    fn single_deep_tree_fits_training_xor() {
        let data = xor(10);
        let cfg = ForestConfig { n_trees: 1, max_features: Some(2), ..Default::default() };
        let ScoredModel::RandomForest(m) = fit_random_forest(&data, &cfg, 1).unwrap() else {
            unreachable!()
        };
        assert!(m.trees[0].depth() >= 2);
        for row in data.features.rows() {
            let score = m.score_row(row);
            assert!(score == 0.0 || score == 1.0);
        }
    }

    #[test]
    fn identical_features_give_no_split() {
        let x = Array2::zeros((6, 3));
        let data = PuDataset::new(x, vec![true, false, true, false, true, false], None).unwrap();
        let ScoredModel::RandomForest(m) = fit_random_forest(&data, &ForestConfig::default(), 0).unwrap() else {
            unreachable!()
        };
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn zero_trees_rejected() {
        let cfg = ForestConfig { n_trees: 0, ..Default::default() };
        assert!(fit_random_forest(&xor(4), &cfg, 0).is_err());
    }
}
