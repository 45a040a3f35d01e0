use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{generate_walks, train_skipgram, EmbeddingMatrix, SkipGramConfig, WalkConfig};
use crate::error::Result;
use crate::graph::TransactionGraph;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Role2VecConfig {
    pub walk: WalkConfig,
    pub skipgram: SkipGramConfig,
}

/// Structural role per node from `(⌊log2(degree + 1)⌋, min(triangles, 3))`.
/// Role ids are dense, in order of first appearance.
pub fn structural_roles(graph: &TransactionGraph) -> (Vec<usize>, usize) {
    let mut ids: HashMap<(u32, usize), usize> = HashMap::new();
    let roles = (0..graph.node_count())
        .map(|v| {
            let degree_bin = ((graph.degree(v) + 1) as f64).log2().floor() as u32;
            let triangle_bin = graph.triangles(v).min(3);
            let next = ids.len();
            *ids.entry((degree_bin, triangle_bin)).or_insert(next)
        })
        .collect();
    (roles, ids.len())
}

/// Walks over nodes, rewritten as role sequences; each node takes its role's vector.
pub fn train_role2vec(graph: &TransactionGraph, cfg: &Role2VecConfig) -> Result<EmbeddingMatrix> {
    let (roles, n_roles) = structural_roles(graph);
    let corpus: Vec<Vec<usize>> = generate_walks(graph, &cfg.walk)?
        .into_iter()
        .map(|w| w.into_iter().map(|v| roles[v]).collect())
        .collect();
    let role_vectors = train_skipgram(&corpus, n_roles, &cfg.skipgram)?;
    let mut out = Array2::zeros((graph.node_count(), cfg.skipgram.dim));
    for (v, &r) in roles.iter().enumerate() {
        out.row_mut(v).assign(&role_vectors.row(r));
    }
    Ok(EmbeddingMatrix::new(graph.node_ids().to_vec(), out, "role2vec"))
}
