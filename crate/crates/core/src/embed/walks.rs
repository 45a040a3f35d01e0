use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TransactionGraph;
use crate::par;
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Second-order random walk parameters. `p = q = 1` is an unbiased walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub p: f64,
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 5,
            walks_per_node: 10,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(Error::Config(format!("p and q must be positive (p={}, q={})", self.p, self.q)));
        }
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return Err(Error::Config("walk_length and walks_per_node must be ≥ 1".into()));
        }
        Ok(())
    }
}

fn pick(rng: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// One walk from `start`. Transition weight to `x` from `cur` (having come
/// from `prev`) is `w(cur,x)/p` if `x = prev`, `w(cur,x)` if `x` neighbours
/// `prev`, and `w(cur,x)/q` otherwise.
pub(crate) fn walk_from(graph: &TransactionGraph, start: usize, cfg: &WalkConfig, rng: &mut Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let unbiased = cfg.p == 1.0 && cfg.q == 1.0;
    let mut scratch = Vec::new();
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = graph.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let w = graph.neighbor_weights(cur);
        let next = if walk.len() == 1 || unbiased {
            nbrs[pick(rng, w)]
        } else {
            let prev = walk[walk.len() - 2];
            scratch.clear();
            scratch.extend(nbrs.iter().zip(w).map(|(&x, &wx)| {
                if x == prev {
                    wx / cfg.p
                } else if graph.is_adjacent(prev, x) {
                    wx
                } else {
                    wx / cfg.q
                }
            }));
            nbrs[pick(rng, &scratch)]
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` walks from every node, round by round. Each walk has its
/// own derived seed, so the corpus is identical with or without threads.
pub fn generate_walks(graph: &TransactionGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    let n = graph.node_count();
    let mut corpus = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let round_seed = derive_seed(cfg.rng_seed, round as u64);
        corpus.extend(par::map_indexed(n, |v| {
            let mut rng = rng_from_seed(derive_seed(round_seed, v as u64));
            walk_from(graph, v, cfg, &mut rng)
        }));
    }
    Ok(corpus)
}
