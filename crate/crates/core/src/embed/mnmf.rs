//! Modularized non-negative matrix factorisation.
//!
//! Minimises
//! `‖S − M Uᵀ‖² + α‖H − U Cᵀ‖² − β tr(Hᵀ B H) + λ‖HᵀH − I‖²`
//! over non-negative `M, U (n×d)`, `C (k×d)`, `H (n×k)` by multiplicative
//! updates. `S = A + η·S₂` mixes adjacency with cosine similarity of
//! adjacency rows, and `B = A − d dᵀ / 2m` is the modularity matrix, applied
//! implicitly so nothing n×n is ever materialised.

use ndarray::{Array2, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::TransactionGraph;
use crate::rng::rng_from_seed;

const FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnmfConfig {
    pub dim: usize,
    pub communities: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Weight of second-order proximity in `S`.
    pub eta: f64,
    /// Penalty keeping `HᵀH` close to the identity.
    pub lambda: f64,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Default for MnmfConfig {
    fn default() -> Self {
        Self {
            dim: super::DEFAULT_DIM,
            communities: 8,
            alpha: 1.0,
            beta: 1.0,
            eta: 5.0,
            lambda: 1.0,
            iterations: 100,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MnmfFactors {
    pub node_ids: Vec<String>,
    pub m: Array2<f64>,
    pub u: Array2<f64>,
    pub c: Array2<f64>,
    pub h: Array2<f64>,
    /// Objective after each iteration.
    pub objective: Vec<f64>,
}

impl MnmfFactors {
    /// Community with the largest membership weight per node.
    pub fn communities(&self) -> Vec<usize> {
        self.h
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect()
    }

    pub fn into_matrix(self) -> EmbeddingMatrix {
        EmbeddingMatrix::new(self.node_ids, self.u, "mnmf")
    }
}

/// Row-compressed sparse symmetric matrix.
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    fn mul(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.indptr.len() - 1, x.ncols()));
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                row.scaled_add(self.data[p], &x.row(self.indices[p]));
            }
        }
        out
    }

    fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

fn adjacency(graph: &TransactionGraph) -> Csr {
    let n = graph.node_count();
    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for v in 0..n {
        indices.extend_from_slice(graph.neighbors(v));
        data.extend_from_slice(graph.neighbor_weights(v));
        indptr.push(indices.len());
    }
    Csr { indptr, indices, data }
}

/// `S = A + η · cos(Aᵢ, Aⱼ)`, accumulated row by row over two-hop paths.
fn proximity(graph: &TransactionGraph, eta: f64) -> Csr {
    let n = graph.node_count();
    let norms: Vec<f64> = (0..n)
        .map(|v| graph.neighbor_weights(v).iter().map(|w| w * w).sum::<f64>().sqrt())
        .collect();
    let mut acc = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for i in 0..n {
        for (&k, &wik) in graph.neighbors(i).iter().zip(graph.neighbor_weights(i)) {
            for (&j, &wkj) in graph.neighbors(k).iter().zip(graph.neighbor_weights(k)) {
                if acc[j] == 0.0 {
                    touched.push(j);
                }
                acc[j] += eta * wik * wkj / (norms[i] * norms[j]);
            }
        }
        for (&j, &w) in graph.neighbors(i).iter().zip(graph.neighbor_weights(i)) {
            if acc[j] == 0.0 {
                touched.push(j);
            }
            acc[j] += w;
        }
        touched.sort_unstable();
        touched.dedup();
        for &j in &touched {
            indices.push(j);
            data.push(acc[j]);
            acc[j] = 0.0;
        }
        touched.clear();
        indptr.push(indices.len());
    }
    Csr { indptr, indices, data }
}

fn random_factor(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>())
}

/// `x ← x ⊙ num ⊘ den`
fn multiplicative(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) {
    Zip::from(x).and(num).and(den).for_each(|x, &n, &d| {
        *x *= n.max(0.0) / (d + FLOOR);
    });
}

struct Problem {
    s: Csr,
    a: Csr,
    degrees: Vec<f64>,
    two_m: f64,
    s_norm_sq: f64,
}

impl Problem {
    /// `(A H, d (dᵀH) / 2m)`
    fn modularity_parts(&self, h: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let ah = self.a.mul(h);
        let d = ndarray::Array1::from(self.degrees.clone());
        let dth = d.dot(h);
        let mut outer = Array2::zeros(h.raw_dim());
        for (i, mut row) in outer.rows_mut().into_iter().enumerate() {
            row.assign(&(&dth * (self.degrees[i] / self.two_m)));
        }
        (ah, outer)
    }

    fn objective(&self, cfg: &MnmfConfig, m: &Array2<f64>, u: &Array2<f64>, c: &Array2<f64>, h: &Array2<f64>) -> f64 {
        let su = self.s.mul(u);
        let recon = self.s_norm_sq - 2.0 * (&su * m).sum() + (&m.t().dot(m) * &u.t().dot(u)).sum();
        let community = (h - &u.dot(&c.t())).mapv(|v| v * v).sum();
        let (ah, b2h) = self.modularity_parts(h);
        let modularity = (h * &(&ah - &b2h)).sum();
        let hth = h.t().dot(h);
        let k = hth.nrows();
        let orth = (hth - Array2::<f64>::eye(k)).mapv(|v| v * v).sum();
        recon + cfg.alpha * community - cfg.beta * modularity + cfg.lambda * orth
    }
}

impl Problem {
    /// `(B + σI) X` with `σ` large enough to make the shifted matrix positive definite.
    fn shifted_modularity_mul(&self, x: &Array2<f64>, shift: f64) -> Array2<f64> {
        let (ax, outer) = self.modularity_parts(x);
        ax - outer + x * shift
    }
}

fn orthonormalize(x: &mut Array2<f64>) {
    for j in 0..x.ncols() {
        for i in 0..j {
            let proj = x.column(i).dot(&x.column(j));
            let ci = x.column(i).to_owned();
            x.column_mut(j).scaled_add(-proj, &ci);
        }
        let norm = x.column(j).dot(&x.column(j)).sqrt();
        if norm > FLOOR {
            x.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
}

/// Community indicator start: the leading eigenvectors of the modularity
/// matrix (subspace iteration), each split into its positive and negative
/// parts, with a small random floor so no entry starts at zero.
fn spectral_start(problem: &Problem, k: usize, rng: &mut crate::rng::Rng) -> Array2<f64> {
    let n = problem.degrees.len();
    let r = k.div_ceil(2).min(n);
    let max_degree = problem.degrees.iter().cloned().fold(0.0, f64::max);
    let shift = 2.0 * max_degree + 1.0;
    let mut x = random_factor(n, r, rng) - 0.5;
    orthonormalize(&mut x);
    for _ in 0..300 {
        x = problem.shifted_modularity_mul(&x, shift);
        orthonormalize(&mut x);
    }
    let mut h = Array2::zeros((n, k));
    for col in 0..k {
        let v = x.column((col / 2).min(r - 1));
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..n {
            h[[i, col]] = (sign * v[i]).max(0.0);
        }
    }
    let floor = 1e-2 / (n as f64).sqrt();
    h.mapv_inplace(|v| v + floor * rng.random::<f64>());
    h
}

pub fn train_mnmf(graph: &TransactionGraph, cfg: &MnmfConfig) -> Result<MnmfFactors> {
    if cfg.communities < 2 {
        return Err(Error::Config(format!("mnmf needs at least 2 communities, got {}", cfg.communities)));
    }
    if cfg.dim == 0 {
        return Err(Error::Config("embedding dim must be ≥ 1".into()));
    }
    if graph.edge_count() == 0 {
        return Err(Error::Config("mnmf needs at least one edge".into()));
    }
    let n = graph.node_count();
    let degrees: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v)).collect();
    let s = proximity(graph, cfg.eta);
    let problem = Problem {
        s_norm_sq: s.frobenius_sq(),
        s,
        a: adjacency(graph),
        two_m: degrees.iter().sum(),
        degrees,
    };

    let mut rng = rng_from_seed(cfg.rng_seed);
    let mut m = random_factor(n, cfg.dim, &mut rng);
    let mut u = random_factor(n, cfg.dim, &mut rng);
    let mut c = random_factor(cfg.communities, cfg.dim, &mut rng);
    let mut h = spectral_start(&problem, cfg.communities, &mut rng);
    let (alpha, beta, lambda) = (cfg.alpha, cfg.beta, cfg.lambda);

    let mut objective = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let (ah, b2h) = problem.modularity_parts(&h);
        let hhh = h.dot(&h.t().dot(&h));
        let uct = u.dot(&c.t());
        Zip::from(&mut h)
            .and(&ah)
            .and(&b2h)
            .and(&hhh)
            .and(&uct)
            .for_each(|h, &b1, &b2, &hhh, &uc| {
                let lin = 2.0 * beta * b2;
                let delta = lin * lin
                    + 16.0 * lambda * hhh * (2.0 * beta * b1 + 2.0 * alpha * uc + (4.0 * lambda - 2.0 * alpha) * *h);
                let top = -lin + delta.max(0.0).sqrt();
                *h *= (top.max(0.0) / (8.0 * lambda * hhh + FLOOR)).sqrt();
            });

        let utu = u.t().dot(&u);
        let su = problem.s.mul(&u);
        let den = m.dot(&utu);
        multiplicative(&mut m, &su, &den);

        let sm = problem.s.mul(&m);
        let num = &sm + &(h.dot(&c) * alpha);
        let den = u.dot(&(m.t().dot(&m) + c.t().dot(&c) * alpha));
        multiplicative(&mut u, &num, &den);

        let utu = u.t().dot(&u);
        let den = c.dot(&utu);
        multiplicative(&mut c, &h.t().dot(&u), &den);

        let j = problem.objective(cfg, &m, &u, &c, &h);
        log::debug!("mnmf iteration {} objective {:.6}", it + 1, j);
        objective.push(j);
    }

    Ok(MnmfFactors {
        node_ids: graph.node_ids().to_vec(),
        m,
        u,
        c,
        h,
        objective,
    })
}
