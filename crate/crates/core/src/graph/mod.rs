//! Transaction graph storage, label ingestion and subnetwork sampling.

pub(crate) mod io;
mod sample;

use std::collections::HashMap;

pub use io::{
    load_edge_list, load_labels, read_edge_list, read_labels, read_snapshot, write_edges, write_nodes, write_snapshot,
    EdgeFormat,
};
pub use sample::{sample_subnetwork, SubnetworkSample};

/// A stored (possibly directed) edge between dense node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Node/edge store with an undirected adjacency view.
///
/// Edges keep their direction when the graph was built as directed, but all
/// neighbourhood queries (walks, sampling, factorisation) go through the
/// undirected CSR view where reciprocal edges are merged by summing weights.
#[derive(Debug, Clone)]
pub struct TransactionGraph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    directed: bool,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl TransactionGraph {
    pub fn empty() -> Self {
        GraphBuilder::new(false).build()
    }

    /// Builds a graph over `n` nodes named `"0".."n-1"` from dense-id edges.
    pub fn from_dense_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut b = GraphBuilder::new(false);
        for i in 0..n {
            b.add_node(&i.to_string());
        }
        for &(u, v) in edges {
            b.add_edge_dense(u, v, 1.0);
        }
        b.build()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn external_id(&self, node: usize) -> &str {
        &self.node_ids[node]
    }

    pub fn dense_id(&self, external: &str) -> Option<usize> {
        self.index.get(external).copied()
    }

    /// Sorted undirected neighbours of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Weights aligned with [`neighbors`](Self::neighbors).
    pub fn neighbor_weights(&self, node: usize) -> &[f64] {
        &self.weights[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn weighted_degree(&self, node: usize) -> f64 {
        self.neighbor_weights(node).iter().sum()
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected weight between `u` and `v`, 0 if not adjacent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        match self.neighbors(u).binary_search(&v) {
            Ok(i) => self.neighbor_weights(u)[i],
            Err(_) => 0.0,
        }
    }

    /// Number of triangles through `node` in the undirected simple view.
    pub fn triangles(&self, node: usize) -> usize {
        let nb = self.neighbors(node);
        let mut count = 0;
        for (i, &a) in nb.iter().enumerate() {
            if a == node {
                continue;
            }
            for &b in &nb[i + 1..] {
                if b != node && self.is_adjacent(a, b) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Subgraph induced by `nodes` (parent dense ids, any order). The result
    /// orders nodes as given and keeps every parent edge with both endpoints
    /// inside, with its weight and direction.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> TransactionGraph {
        let mut local = HashMap::with_capacity(nodes.len());
        let mut b = GraphBuilder::new(self.directed);
        for &n in nodes {
            local.insert(n, b.add_node(&self.node_ids[n]));
        }
        for e in &self.edges {
            if let (Some(&s), Some(&d)) = (local.get(&e.src), local.get(&e.dst)) {
                b.add_edge_dense(s, d, e.weight);
            }
        }
        b.build()
    }
}

impl PartialEq for TransactionGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_ids == other.node_ids && self.edges == other.edges && self.directed == other.directed
    }
}

/// Incremental graph construction; duplicate edges merge on `build`.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    directed: bool,
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    raw: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        Self {
            directed,
            node_ids: Vec::new(),
            index: HashMap::new(),
            raw: Vec::new(),
        }
    }

    /// Returns the dense id for `id`, inserting it if new.
    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&d) = self.index.get(id) {
            return d;
        }
        let d = self.node_ids.len();
        self.node_ids.push(id.to_owned());
        self.index.insert(id.to_owned(), d);
        d
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) {
        let s = self.add_node(src);
        let d = self.add_node(dst);
        self.add_edge_dense(s, d, weight);
    }

    pub fn add_edge_dense(&mut self, src: usize, dst: usize, weight: f64) {
        assert!(src < self.node_ids.len() && dst < self.node_ids.len(), "edge endpoint out of range");
        let (src, dst) = if self.directed || src <= dst { (src, dst) } else { (dst, src) };
        self.raw.push(Edge { src, dst, weight });
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn build(self) -> TransactionGraph {
        let n = self.node_ids.len();
        let mut raw = self.raw;
        raw.sort_by_key(|a| (a.src, a.dst));
        let mut edges: Vec<Edge> = Vec::with_capacity(raw.len());
        for e in raw {
            match edges.last_mut() {
                Some(last) if last.src == e.src && last.dst == e.dst => last.weight += e.weight,
                _ => edges.push(e),
            }
        }

        // undirected view: merge (u,v) and (v,u)
        let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for e in &edges {
            pairs.push((e.src, e.dst, e.weight));
            if e.src != e.dst {
                pairs.push((e.dst, e.src, e.weight));
            }
        }
        pairs.sort_by_key(|a| (a.0, a.1));
        let mut offsets = vec![0usize; n + 1];
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut last: Option<(usize, usize)> = None;
        for (u, v, w) in pairs {
            if last == Some((u, v)) {
                *weights.last_mut().unwrap() += w;
                continue;
            }
            last = Some((u, v));
            neighbors.push(v);
            weights.push(w);
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }

        TransactionGraph {
            node_ids: self.node_ids,
            index: self.index,
            edges,
            directed: self.directed,
            offsets,
            neighbors,
            weights,
        }
    }
}

/// Observed labels `s` and, for engineered or synthetic data, true labels `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStore {
    pub s: Vec<bool>,
    pub y: Option<Vec<bool>>,
}

impl LabelStore {
    pub fn unlabeled(n: usize) -> Self {
        Self { s: vec![false; n], y: None }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.s.iter().filter(|&&b| b).count()
    }

    pub fn true_positive_count(&self) -> Option<usize> {
        self.y.as_ref().map(|y| y.iter().filter(|&&b| b).count())
    }

    /// Checks `s = 1 ⇒ y = 1`.
    pub fn is_consistent(&self) -> bool {
        match &self.y {
            None => true,
            Some(y) => y.len() == self.s.len() && self.s.iter().zip(y).all(|(&s, &y)| !s || y),
        }
    }
}
