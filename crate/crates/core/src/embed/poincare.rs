//! Poincaré-ball embeddings trained with Riemannian SGD.
//!
//! Each undirected edge `(u, v)` is a positive pair scored against random
//! non-neighbours `v'` with the softmax loss
//! `-log(exp(-d(u,v)) / Σ exp(-d(u,v')))`. The Euclidean gradient is rescaled
//! by the inverse metric `(1 - |θ|²)² / 4` and points are pulled back inside
//! the ball at radius `1 - BALL_EPS` after every step.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::TransactionGraph;
use crate::rng::rng_from_seed;

pub const BALL_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareConfig {
    pub dim: usize,
    pub epochs: usize,
    pub burn_in_epochs: usize,
    /// Learning-rate multiplier during burn-in.
    pub burn_in_factor: f64,
    pub lr: f64,
    pub negatives: usize,
    pub rng_seed: u64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            dim: super::DEFAULT_DIM,
            epochs: 50,
            burn_in_epochs: 2,
            burn_in_factor: 0.1,
            lr: 0.3,
            negatives: 10,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoincareEmbedding {
    pub node_ids: Vec<String>,
    pub vectors: Array2<f64>,
    pub config: PoincareConfig,
}

impl PoincareEmbedding {
    pub fn norms(&self) -> Vec<f64> {
        self.vectors.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
    }

    pub fn into_matrix(self) -> EmbeddingMatrix {
        EmbeddingMatrix::new(self.node_ids, self.vectors, "poincare")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn poincare_distance(u: &[f64], v: &[f64]) -> f64 {
    let uu = dot(u, u);
    let vv = dot(v, v);
    let diff: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    let gamma = 1.0 + 2.0 * diff / ((1.0 - uu).max(1e-15) * (1.0 - vv).max(1e-15));
    gamma.max(1.0).acosh()
}

/// Gradient of `d(u, v)` with respect to `u`, accumulated into `out` with `scale`.
fn distance_grad(u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    let uu = dot(u, u);
    let vv = dot(v, v);
    let uv = dot(u, v);
    let alpha = (1.0 - uu).max(1e-15);
    let beta = (1.0 - vv).max(1e-15);
    let diff = (uu - 2.0 * uv + vv).max(0.0);
    let gamma = 1.0 + 2.0 * diff / (alpha * beta);
    let root = (gamma * gamma - 1.0).max(1e-10).sqrt();
    let c = 4.0 / (beta * root);
    let cu = (vv - 2.0 * uv + 1.0) / (alpha * alpha);
    for k in 0..u.len() {
        out[k] += scale * c * (cu * u[k] - v[k] / alpha);
    }
}

fn riemannian_step(theta: &mut [f64], grad: &[f64], lr: f64) {
    let factor = (1.0 - dot(theta, theta)).powi(2) / 4.0;
    for (t, g) in theta.iter_mut().zip(grad) {
        if g.is_finite() {
            *t -= lr * factor * g;
        }
    }
    let norm = dot(theta, theta).sqrt();
    // strictly inside radius 1 - BALL_EPS
    let max = (1.0 - BALL_EPS) * (1.0 - 1e-9);
    if norm >= max {
        let s = max / norm;
        theta.iter_mut().for_each(|t| *t *= s);
    }
}

pub fn train_poincare(graph: &TransactionGraph, cfg: &PoincareConfig) -> Result<PoincareEmbedding> {
    train_poincare_observed(graph, cfg, |_, _| {})
}

/// As [`train_poincare`], calling `observe(node, vector)` after every update.
pub fn train_poincare_observed(
    graph: &TransactionGraph,
    cfg: &PoincareConfig,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<PoincareEmbedding> {
    if !(cfg.lr > 0.0) {
        return Err(Error::Config(format!("poincare lr must be positive, got {}", cfg.lr)));
    }
    if cfg.dim == 0 {
        return Err(Error::Config("embedding dim must be ≥ 1".into()));
    }
    let n = graph.node_count();
    let dim = cfg.dim;
    let mut rng = rng_from_seed(cfg.rng_seed);
    let mut theta: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1e-3..1e-3)).collect();

    let mut pairs = Vec::new();
    for u in 0..n {
        for &v in graph.neighbors(u) {
            if v != u {
                pairs.push((u, v));
            }
        }
    }

    let mut grad_u = vec![0.0; dim];
    let mut grad_v = vec![0.0; dim];
    let mut candidates = Vec::with_capacity(cfg.negatives + 1);
    let mut dists = Vec::with_capacity(cfg.negatives + 1);
    for epoch in 0..cfg.epochs {
        let lr = if epoch < cfg.burn_in_epochs { cfg.lr * cfg.burn_in_factor } else { cfg.lr };
        pairs.shuffle(&mut rng);
        for &(u, v) in &pairs {
            candidates.clear();
            candidates.push(v);
            let non_neighbors = n.saturating_sub(graph.degree(u) + 1);
            if non_neighbors > 0 {
                let mut tries = 0;
                while candidates.len() <= cfg.negatives && tries < 10 * (cfg.negatives + 1) {
                    tries += 1;
                    let w = rng.random_range(0..n);
                    if w != u && !graph.is_adjacent(u, w) {
                        candidates.push(w);
                    }
                }
            }
            if candidates.len() < 2 {
                continue;
            }

            let tu = &theta[u * dim..(u + 1) * dim];
            dists.clear();
            dists.extend(candidates.iter().map(|&w| poincare_distance(tu, &theta[w * dim..(w + 1) * dim])));
            let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            let z: f64 = dists.iter().map(|d| (min - d).exp()).sum();

            grad_u.iter_mut().for_each(|g| *g = 0.0);
            let snapshot_u = tu.to_vec();
            for (idx, &w) in candidates.iter().enumerate() {
                let p = (min - dists[idx]).exp() / z;
                // dL/dd: 1 - p for the positive, -p for negatives
                let coef = if idx == 0 { 1.0 - p } else { -p };
                let tw = theta[w * dim..(w + 1) * dim].to_vec();
                distance_grad(&snapshot_u, &tw, coef, &mut grad_u);
                grad_v.iter_mut().for_each(|g| *g = 0.0);
                distance_grad(&tw, &snapshot_u, coef, &mut grad_v);
                let slot = &mut theta[w * dim..(w + 1) * dim];
                riemannian_step(slot, &grad_v, lr);
                observe(w, slot);
            }
            let slot = &mut theta[u * dim..(u + 1) * dim];
            riemannian_step(slot, &grad_u, lr);
            observe(u, slot);
        }
    }

    Ok(PoincareEmbedding {
        node_ids: graph.node_ids().to_vec(),
        vectors: Array2::from_shape_vec((n, dim), theta).expect("shape"),
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_basics() {
        let o = [0.0, 0.0];
        let x = [0.5, 0.0];
        // d(0, x) = 2 artanh(|x|)
        let expected = 2.0 * 0.5f64.atanh();
        assert!((poincare_distance(&o, &x) - expected).abs() < 1e-12);
        assert!((poincare_distance(&x, &o) - expected).abs() < 1e-12);
        assert_eq!(poincare_distance(&x, &x), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = [0.3, -0.2, 0.1];
        let v = [-0.1, 0.4, 0.25];
        let mut g = [0.0; 3];
        distance_grad(&u, &v, 1.0, &mut g);
        let h = 1e-6;
        for k in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[k] += h;
            dn[k] -= h;
            let fd = (poincare_distance(&up, &v) - poincare_distance(&dn, &v)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "coord {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn non_positive_lr_rejected() {
        let g = TransactionGraph::from_dense_edges(2, &[(0, 1)]);
        let cfg = PoincareConfig { lr: 0.0, ..Default::default() };
        assert!(matches!(train_poincare(&g, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn projection_clamps_to_ball() {
        let mut t = [0.9, 0.9];
        riemannian_step(&mut t, &[0.0, 0.0], 1.0);
        assert!(dot(&t, &t).sqrt() < 1.0 - BALL_EPS);
    }
}
