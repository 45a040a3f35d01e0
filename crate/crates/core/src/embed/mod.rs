//! Node embedding trainers and the [`EmbeddingMatrix`] they produce.

mod mnmf;
mod poincare;
mod role2vec;
mod skipgram;
mod walks;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

pub use mnmf::{train_mnmf, MnmfConfig, MnmfFactors};
pub use poincare::{poincare_distance, train_poincare, train_poincare_observed, PoincareConfig, PoincareEmbedding, BALL_EPS};
pub use role2vec::{structural_roles, train_role2vec, Role2VecConfig};
pub use skipgram::{train_skipgram, SkipGramConfig};
pub use walks::{generate_walks, WalkConfig};

use crate::error::{Error, Result};
use crate::graph::TransactionGraph;
use crate::graph::io::create;

pub const DEFAULT_DIM: usize = 64;

/// One row per node, aligned with `node_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_ids: Vec<String>,
    pub vectors: Array2<f64>,
    pub method_tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    method_tag: String,
    dim: usize,
    nodes: usize,
}

impl EmbeddingMatrix {
    pub fn new(node_ids: Vec<String>, vectors: Array2<f64>, method_tag: impl Into<String>) -> Self {
        assert_eq!(node_ids.len(), vectors.nrows());
        Self {
            node_ids,
            vectors,
            method_tag: method_tag.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().all(|v| v.is_finite())
    }

    pub fn row(&self, node: usize) -> ndarray::ArrayView1<'_, f64> {
        self.vectors.row(node)
    }

    /// Rows for the given nodes, in order.
    pub fn select(&self, nodes: &[usize]) -> Array2<f64> {
        self.vectors.select(ndarray::Axis(0), nodes)
    }

    /// Writes `node_id,e0..e{d-1}` and a `<path>.meta.json` sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = String::from("node_id");
        for j in 0..self.dim() {
            buf.push_str(&format!(",e{j}"));
        }
        buf.push('\n');
        for (id, row) in self.node_ids.iter().zip(self.vectors.rows()) {
            buf.push_str(id);
            for v in row {
                buf.push(',');
                buf.push_str(&v.to_string());
            }
            buf.push('\n');
        }
        create(path)?.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;

        let meta = Sidecar {
            method_tag: self.method_tag.clone(),
            dim: self.dim(),
            nodes: self.len(),
        };
        let meta_path = sidecar_path(path);
        create(&meta_path)?
            .write_all(serde_json::to_string_pretty(&meta)?.as_bytes())
            .map_err(|e| Error::io(&meta_path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let dim = header.split(',').count().saturating_sub(1);
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            ids.push(parts.next().unwrap_or_default().to_owned());
            let before = data.len();
            for p in parts {
                data.push(p.parse::<f64>().map_err(|e| Error::Parse {
                    line: i as u64 + 2,
                    message: e.to_string(),
                })?);
            }
            if data.len() - before != dim {
                return Err(Error::Parse {
                    line: i as u64 + 2,
                    message: format!("expected {dim} values"),
                });
            }
        }
        let vectors = Array2::from_shape_vec((ids.len(), dim), data).expect("shape checked per row");
        let method_tag = std::fs::read_to_string(sidecar_path(path))
            .ok()
            .and_then(|t| serde_json::from_str::<Sidecar>(&t).ok())
            .map(|m| m.method_tag)
            .unwrap_or_else(|| "unknown".into());
        Ok(Self::new(ids, vectors, method_tag))
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// Row-wise concatenation `a ⊕ b`. Rows of `b` are matched to `a` by node id.
pub fn concat_embeddings(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let b_index: HashMap<&str, usize> = b.node_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let same_size = a.len() == b.len();
    let mut order = Vec::with_capacity(a.len());
    for id in &a.node_ids {
        match b_index.get(id.as_str()) {
            Some(&i) => order.push(i),
            None => break,
        }
    }
    if !same_size || order.len() != a.len() {
        let left: BTreeSet<&str> = a.node_ids.iter().map(String::as_str).collect();
        let right: BTreeSet<&str> = b.node_ids.iter().map(String::as_str).collect();
        return Err(Error::NodeSetMismatch {
            left: left.difference(&right).map(|s| s.to_string()).collect(),
            right: right.difference(&left).map(|s| s.to_string()).collect(),
        });
    }

    let mut out = Array2::zeros((a.len(), a.dim() + b.dim()));
    out.slice_mut(s![.., ..a.dim()]).assign(&a.vectors);
    for (row, &j) in order.iter().enumerate() {
        out.slice_mut(s![row, a.dim()..]).assign(&b.vectors.row(j));
    }
    Ok(EmbeddingMatrix::new(
        a.node_ids.clone(),
        out,
        format!("{}+{}", a.method_tag, b.method_tag),
    ))
}

/// node2vec: biased walks followed by skip-gram.
pub fn train_node2vec(graph: &TransactionGraph, walk: &WalkConfig, sg: &SkipGramConfig) -> Result<EmbeddingMatrix> {
    let corpus = generate_walks(graph, walk)?;
    let vectors = train_skipgram(&corpus, graph.node_count(), sg)?;
    Ok(EmbeddingMatrix::new(graph.node_ids().to_vec(), vectors, "node2vec"))
}
