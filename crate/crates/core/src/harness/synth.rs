use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classify::PuDataset;
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, LabelStore, TransactionGraph};
use crate::rng::{derive_seed, rng_from_seed};

/// Planted-partition graph with illicit nodes packed into block 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_illicit: usize,
    pub n_blocks: usize,
    /// Edge probability inside a block.
    pub p_in: f64,
    /// Edge probability across blocks.
    pub p_out: f64,
    /// Multiplier on the edge probability between two illicit nodes.
    pub illicit_bias: f64,
    /// Fraction of illicit nodes that carry a label, `c`.
    pub label_frequency: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_nodes: 2000,
            n_illicit: 200,
            n_blocks: 8,
            p_in: 0.03,
            p_out: 0.001,
            illicit_bias: 5.0,
            label_frequency: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self =
            toml::from_str(text).map_err(|e| Error::Config(super::config::toml_message(text, &e)))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_illicit == 0 || self.n_illicit >= self.n_nodes {
            return Err(Error::Config(format!(
                "synthetic: need 0 < n_illicit < n_nodes, got {} of {}",
                self.n_illicit, self.n_nodes
            )));
        }
        if !(self.label_frequency > 0.0 && self.label_frequency <= 1.0) {
            return Err(Error::Config(format!(
                "synthetic: label_frequency must be in (0,1], got {}",
                self.label_frequency
            )));
        }
        if self.n_blocks == 0 {
            return Err(Error::Config("synthetic: n_blocks must be ≥ 1".into()));
        }
        let probs = [("p_in", self.p_in), ("p_out", self.p_out), ("p_in * illicit_bias", self.p_in * self.illicit_bias)];
        for (key, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("synthetic: infeasible probability {key} = {p}")));
            }
        }
        if self.illicit_bias < 0.0 {
            return Err(Error::Config("synthetic: illicit_bias must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn labeled_count(&self) -> usize {
        (self.label_frequency * self.n_illicit as f64).round() as usize
    }
}

/// Node ids are `n0 .. n{N-1}`; the illicit set is a uniform random subset
/// and exactly `round(c · n_illicit)` of it is labeled.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(TransactionGraph, LabelStore)> {
    spec.validate()?;
    let n = spec.n_nodes;
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let mut y = vec![false; n];
    for i in sample(&mut rng, n, spec.n_illicit) {
        y[i] = true;
    }
    let mut block = vec![0usize; n];
    let mut licit = 0;
    for i in 0..n {
        if !y[i] {
            block[i] = licit % spec.n_blocks;
            licit += 1;
        }
    }
    let mut b = GraphBuilder::new(false);
    for i in 0..n {
        b.add_node(&format!("n{i}"));
    }
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    for i in 0..n {
        for j in i + 1..n {
            let mut p = if block[i] == block[j] { spec.p_in } else { spec.p_out };
            if y[i] && y[j] {
                p *= spec.illicit_bias;
            }
            if p > 0.0 && rng.random::<f64>() < p {
                b.add_edge_dense(i, j, 1.0);
            }
        }
    }
    let illicit: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
    let mut s = vec![false; n];
    let mut rng = rng_from_seed(derive_seed(seed, 2));
    for k in sample(&mut rng, illicit.len(), spec.labeled_count()) {
        s[illicit[k]] = true;
    }
    Ok((b.build(), LabelStore { s, y: Some(y) }))
}

/// Two Gaussian blobs with SCAR labels, used where a graph is not needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScarBlobSpec {
    pub n: usize,
    pub dim: usize,
    /// Fraction of true positives, `π`.
    pub prior: f64,
    pub label_frequency: f64,
    /// Distance between blob centres along the first axis (unit variance).
    /// The default keeps the classes essentially disjoint, the regime in
    /// which the mean-holdout-score estimate of `c` is consistent.
    pub separation: f64,
}

impl Default for ScarBlobSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            dim: 2,
            prior: 0.1,
            label_frequency: 0.5,
            separation: 16.0,
        }
    }
}

/// Positives are the first `round(π·n)` rows; `round(c·|P|)` of them,
/// chosen uniformly, get `s = 1`.
pub fn generate_scar_blobs(spec: &ScarBlobSpec, seed: u64) -> Result<PuDataset> {
    if !(spec.prior > 0.0 && spec.prior < 1.0) || !(spec.label_frequency > 0.0 && spec.label_frequency <= 1.0) {
        return Err(Error::Config("blobs: need prior in (0,1) and label_frequency in (0,1]".into()));
    }
    if spec.dim == 0 || spec.n == 0 {
        return Err(Error::Config("blobs: n and dim must be ≥ 1".into()));
    }
    let n_pos = (spec.prior * spec.n as f64).round() as usize;
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let half = 0.5 * spec.separation;
    let x = Array2::from_shape_fn((spec.n, spec.dim), |(i, j)| {
        let z: f64 = StandardNormal.sample(&mut rng);
        let shift = if j == 0 {
            if i < n_pos {
                half
            } else {
                -half
            }
        } else {
            0.0
        };
        z + shift
    });
    let y: Vec<bool> = (0..spec.n).map(|i| i < n_pos).collect();
    let mut s = vec![false; spec.n];
    let n_lab = (spec.label_frequency * n_pos as f64).round() as usize;
    for i in sample(&mut rng_from_seed(derive_seed(seed, 1)), n_pos, n_lab) {
        s[i] = true;
    }
    PuDataset::new(x, s, Some(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_spec() {
        let spec = SyntheticSpec { n_nodes: 300, n_illicit: 30, label_frequency: 0.5, ..Default::default() };
        let (g, labels) = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(g.node_count(), 300);
        assert_eq!(labels.labeled_count(), 15);
        assert_eq!(labels.true_positive_count(), Some(30));
        assert!(labels.is_consistent());
    }

    #[test]
    fn full_label_frequency_labels_every_illicit_node() {
        let spec = SyntheticSpec { n_nodes: 100, n_illicit: 10, ..Default::default() };
        let (_, labels) = generate_synthetic(&spec, 4).unwrap();
        assert_eq!(labels.s, *labels.y.as_ref().unwrap());
    }

    #[test]
    fn illicit_nodes_are_denser() {
        let (g, labels) = generate_synthetic(&SyntheticSpec::default(), 3).unwrap();
        let y = labels.y.unwrap();
        let mean_deg = |flag: bool| {
            let v: Vec<usize> = (0..g.node_count()).filter(|&i| y[i] == flag).map(|i| g.degree(i)).collect();
            v.iter().sum::<usize>() as f64 / v.len() as f64
        };
        assert!(mean_deg(true) > 2.0 * mean_deg(false));
    }

    #[test]
    fn infeasible_probability() {
        let spec = SyntheticSpec { p_in: 0.5, illicit_bias: 5.0, ..Default::default() };
        assert!(matches!(generate_synthetic(&spec, 0), Err(Error::Config(_))));
        let spec = SyntheticSpec { n_illicit: 2000, ..Default::default() };
        assert!(generate_synthetic(&spec, 0).is_err());
    }

    #[test]
    fn blobs_shape_and_labels() {
        let d = generate_scar_blobs(&ScarBlobSpec::default(), 2).unwrap();
        assert_eq!(d.features.dim(), (2000, 2));
        assert_eq!(d.labeled_count(), 100);
        assert_eq!(d.y.as_ref().unwrap().iter().filter(|&&v| v).count(), 200);
    }
}
