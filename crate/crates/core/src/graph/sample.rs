use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::index;

use super::io::{create, write_edges};
use super::{LabelStore, TransactionGraph};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Labeled positives, an equal number of random unlabeled nodes, their
/// first-order neighbours and every edge among them.
#[derive(Debug, Clone)]
pub struct SubnetworkSample {
    pub graph: TransactionGraph,
    /// Parent dense id of each local node.
    pub parent_nodes: Vec<usize>,
    /// Local ids of the labeled seeds.
    pub seed_positives: Vec<usize>,
    /// Local ids of the sampled unlabeled seeds.
    pub seed_negatives: Vec<usize>,
    /// Parent labels restricted to the local nodes.
    pub labels: LabelStore,
    pub rng_seed: u64,
    pub parent_tag: String,
}

impl SubnetworkSample {
    /// Seed nodes (positives first, then negatives), the classification universe.
    pub fn seeds(&self) -> Vec<usize> {
        self.seed_positives.iter().chain(&self.seed_negatives).copied().collect()
    }

    /// Writes `edges.csv` and `seeds.csv` (id, role ∈ {pos, neg}).
    pub fn export(&self, dir: &Path) -> Result<()> {
        write_edges(&dir.join("edges.csv"), &self.graph)?;
        let path = dir.join("seeds.csv");
        let mut buf = String::from("id,role\n");
        for &p in &self.seed_positives {
            buf.push_str(&format!("{},pos\n", self.graph.external_id(p)));
        }
        for &n in &self.seed_negatives {
            buf.push_str(&format!("{},neg\n", self.graph.external_id(n)));
        }
        create(&path)?.write_all(buf.as_bytes()).map_err(|e| Error::io(&path, e))
    }
}

pub fn sample_subnetwork(graph: &TransactionGraph, labels: &LabelStore, rng_seed: u64) -> Result<SubnetworkSample> {
    if labels.len() != graph.node_count() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: graph.node_count(),
        });
    }
    let positives: Vec<usize> = (0..graph.node_count()).filter(|&i| labels.s[i]).collect();
    let unlabeled: Vec<usize> = (0..graph.node_count()).filter(|&i| !labels.s[i]).collect();
    if positives.is_empty() {
        return Err(Error::Sampling("no labeled positives to seed from".into()));
    }
    if unlabeled.len() < positives.len() {
        return Err(Error::Sampling(format!(
            "only {} unlabeled nodes for {} positives",
            unlabeled.len(),
            positives.len()
        )));
    }

    let mut rng = rng_from_seed(rng_seed);
    let mut negatives: Vec<usize> = index::sample(&mut rng, unlabeled.len(), positives.len())
        .into_iter()
        .map(|i| unlabeled[i])
        .collect();
    negatives.sort_unstable();

    let mut included = BTreeSet::new();
    for &seed in positives.iter().chain(&negatives) {
        included.insert(seed);
        included.extend(graph.neighbors(seed).iter().copied());
    }
    let parent_nodes: Vec<usize> = included.into_iter().collect();
    let sub = graph.induced_subgraph(&parent_nodes);
    let local = |p: usize| parent_nodes.binary_search(&p).expect("seed is included");

    let labels_local = LabelStore {
        s: parent_nodes.iter().map(|&p| labels.s[p]).collect(),
        y: labels.y.as_ref().map(|y| parent_nodes.iter().map(|&p| y[p]).collect()),
    };

    Ok(SubnetworkSample {
        seed_positives: positives.iter().map(|&p| local(p)).collect(),
        seed_negatives: negatives.iter().map(|&p| local(p)).collect(),
        graph: sub,
        parent_nodes,
        labels: labels_local,
        rng_seed,
        parent_tag: format!("n{}-m{}", graph.node_count(), graph.edge_count()),
    })
}
