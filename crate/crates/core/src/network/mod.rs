//! Weighted transfer networks.
//!
//! Nodes are location (or category) labels, edges carry integer transfer
//! counts. Node indices follow the lexicographic order of labels, so two
//! networks with the same content always index identically.

mod io;

pub use io::{export, import, Format};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::eventlog::AdmissionJourney;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("edge {from:?} -> {to:?} has zero weight")]
    ZeroWeight { from: String, to: String },
    #[error("empty node label")]
    EmptyLabel,
    #[error("category annotation for unknown node {0:?}")]
    UnknownNode(String),
    #[error("operation requires a directed network")]
    NotDirected,
    #[error("unsupported format {0:?}")]
    UnsupportedFormat(String),
    #[error("malformed {format} input: {message}")]
    Parse { format: &'static str, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: u64,
}

/// Immutable weighted network. For undirected networks every edge is stored
/// once with `source < target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferNetwork {
    directed: bool,
    labels: Vec<String>,
    edges: Vec<Edge>,
    categories: BTreeMap<String, String>,
    out_adj: Vec<Vec<(usize, u64)>>,
    in_adj: Vec<Vec<(usize, u64)>>,
}

/// Accumulates transfers by label before freezing them into a network.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    directed: bool,
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
    categories: BTreeMap<String, String>,
}

impl NetworkBuilder {
    pub fn new(directed: bool) -> Self {
        NetworkBuilder {
            directed,
            ..Default::default()
        }
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> &mut Self {
        self.nodes.insert(label.into());
        self
    }

    /// Adds `weight` transfers from `from` to `to`, summing with any already
    /// recorded. Undirected builders canonicalise the pair.
    pub fn add_transfer(&mut self, from: &str, to: &str, weight: u64) -> &mut Self {
        self.nodes.insert(from.to_string());
        self.nodes.insert(to.to_string());
        let key = if !self.directed && to < from {
            (to.to_string(), from.to_string())
        } else {
            (from.to_string(), to.to_string())
        };
        *self.edges.entry(key).or_insert(0) += weight;
        self
    }

    pub fn set_category(&mut self, label: &str, category: impl Into<String>) -> &mut Self {
        self.categories.insert(label.to_string(), category.into());
        self
    }

    pub fn build(self) -> Result<TransferNetwork, NetworkError> {
        if self.nodes.iter().any(|l| l.is_empty()) {
            return Err(NetworkError::EmptyLabel);
        }
        for label in self.categories.keys() {
            if !self.nodes.contains(label) {
                return Err(NetworkError::UnknownNode(label.clone()));
            }
        }
        let labels: Vec<String> = self.nodes.into_iter().collect();
        let position = |l: &str| labels.binary_search_by(|x| x.as_str().cmp(l)).unwrap();
        let mut edges = Vec::with_capacity(self.edges.len());
        for ((from, to), weight) in self.edges {
            if from == to {
                return Err(NetworkError::SelfLoop(from));
            }
            if weight == 0 {
                return Err(NetworkError::ZeroWeight { from, to });
            }
            edges.push(Edge {
                source: position(&from),
                target: position(&to),
                weight,
            });
        }
        Ok(TransferNetwork::from_sorted_parts(
            self.directed,
            labels,
            edges,
            self.categories,
        ))
    }
}

impl TransferNetwork {
    fn from_sorted_parts(
        directed: bool,
        labels: Vec<String>,
        mut edges: Vec<Edge>,
        categories: BTreeMap<String, String>,
    ) -> Self {
        edges.sort_unstable();
        let n = labels.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for e in &edges {
            out_adj[e.source].push((e.target, e.weight));
            in_adj[e.target].push((e.source, e.weight));
            if !directed {
                out_adj[e.target].push((e.source, e.weight));
                in_adj[e.source].push((e.target, e.weight));
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        TransferNetwork {
            directed,
            labels,
            edges,
            categories,
            out_adj,
            in_adj,
        }
    }

    /// Builds a network directly from index-addressed edges. Labels must be
    /// sorted and unique; used by generators that already work in index space.
    pub(crate) fn from_index_edges(
        directed: bool,
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, w) in edges {
            debug_assert!(u != v && w > 0);
            let key = if !directed && v < u { (v, u) } else { (u, v) };
            *merged.entry(key).or_insert(0) += w;
        }
        let edges = merged
            .into_iter()
            .map(|((source, target), weight)| Edge {
                source,
                target,
                weight,
            })
            .collect();
        Self::from_sorted_parts(directed, labels, edges, BTreeMap::new())
    }

    pub fn empty(directed: bool) -> Self {
        Self::from_sorted_parts(directed, Vec::new(), Vec::new(), BTreeMap::new())
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Mean edge weight, `None` for an edgeless network.
    pub fn mean_edge_weight(&self) -> Option<f64> {
        if self.edges.is_empty() {
            None
        } else {
            Some(self.total_weight() as f64 / self.edges.len() as f64)
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn categories(&self) -> &BTreeMap<String, String> {
        &self.categories
    }

    /// Weight of the edge `from -> to` (either orientation when undirected).
    pub fn weight(&self, from: usize, to: usize) -> Option<u64> {
        self.out_adj[from]
            .binary_search_by(|&(t, _)| t.cmp(&to))
            .ok()
            .map(|i| self.out_adj[from][i].1)
    }

    pub fn weight_by_label(&self, from: &str, to: &str) -> Option<u64> {
        self.weight(self.index_of(from)?, self.index_of(to)?)
    }

    /// Outgoing `(target, weight)` pairs sorted by target. For undirected
    /// networks this is the full neighbourhood.
    pub fn out_neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.out_adj[node]
    }

    pub fn in_neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.in_adj[node]
    }

    /// Returns a copy carrying the given node annotations.
    pub fn with_categories(
        mut self,
        categories: BTreeMap<String, String>,
    ) -> Result<Self, NetworkError> {
        if let Some(unknown) = categories.keys().find(|l| self.index_of(l).is_none()) {
            return Err(NetworkError::UnknownNode(unknown.clone()));
        }
        self.categories = categories;
        Ok(self)
    }

    /// Undirected view whose edge `{u,v}` weight is `w(u->v) + w(v->u)`.
    /// An undirected network is returned unchanged.
    pub fn undirected_projection(&self) -> TransferNetwork {
        if !self.directed {
            return self.clone();
        }
        let edges = self.edges.iter().map(|e| (e.source, e.target, e.weight));
        let mut projected = Self::from_index_edges(false, self.labels.clone(), edges);
        projected.categories = self.categories.clone();
        projected
    }

    /// Directed copy with both orientations of each undirected edge, each
    /// carrying the undirected weight. Directed networks are returned as is.
    pub fn to_symmetric_directed(&self) -> TransferNetwork {
        if self.directed {
            return self.clone();
        }
        let edges = self
            .edges
            .iter()
            .flat_map(|e| [(e.source, e.target, e.weight), (e.target, e.source, e.weight)]);
        let mut directed = Self::from_index_edges(true, self.labels.clone(), edges);
        directed.categories = self.categories.clone();
        directed
    }

    /// Copy with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> TransferNetwork {
        assert!(factor > 0, "weight scale factor must be positive");
        let mut scaled = self.clone();
        for e in &mut scaled.edges {
            e.weight *= factor;
        }
        for (_, w) in scaled.out_adj.iter_mut().chain(scaled.in_adj.iter_mut()).flatten() {
            *w *= factor;
        }
        scaled
    }

    /// Unweighted neighbour lists of the undirected projection (sorted,
    /// deduplicated).
    pub(crate) fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.node_count())
            .map(|i| {
                let mut nb: Vec<usize> = self.out_adj[i]
                    .iter()
                    .chain(self.in_adj[i].iter())
                    .map(|&(j, _)| j)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    /// Unweighted outgoing neighbour lists.
    pub(crate) fn out_adjacency(&self) -> Vec<Vec<usize>> {
        self.out_adj
            .iter()
            .map(|l| l.iter().map(|&(j, _)| j).collect())
            .collect()
    }
}

/// Builds the directed transfer network: one node per stop label, edge
/// weight = number of consecutive `(u, v)` pairs over all journeys.
/// Repeated consecutive stops are not transfers and are skipped.
pub fn build_network(journeys: &[AdmissionJourney]) -> TransferNetwork {
    let mut builder = NetworkBuilder::new(true);
    for journey in journeys {
        for stop in &journey.stops {
            builder.add_node(stop.as_str());
        }
        for pair in journey.stops.windows(2) {
            if pair[0] != pair[1] {
                builder.add_transfer(&pair[0], &pair[1], 1);
            }
        }
    }
    builder
        .build()
        .expect("journey stops are non-empty and self-pairs are skipped")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn journey(stops: &[&str]) -> AdmissionJourney {
        AdmissionJourney::from_stops("x", stops)
    }

    #[test]
    fn back_and_forth_journey() {
        let net = build_network(&[journey(&["A", "B", "A"])]);
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.weight_by_label("A", "B"), Some(1));
        assert_eq!(net.weight_by_label("B", "A"), Some(1));
    }

    #[test]
    fn empty_journeys_give_empty_network() {
        let net = build_network(&[]);
        assert_eq!(net.node_count(), 0);
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn hand_counted_pairs() {
        let net = build_network(&[
            journey(&["A", "B", "C"]),
            journey(&["A", "B"]),
            journey(&["B", "C"]),
        ]);
        assert_eq!(net.weight_by_label("A", "B"), Some(2));
        assert_eq!(net.weight_by_label("B", "C"), Some(2));
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.total_weight(), 4);
    }

    #[test]
    fn single_stop_journey_keeps_isolated_node() {
        let net = build_network(&[journey(&["A", "B"]), journey(&["Z"])]);
        assert_eq!(net.node_count(), 3);
        assert!(net.out_neighbors(net.index_of("Z").unwrap()).is_empty());
    }

    #[test]
    fn projection_sums_antiparallel_weights() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 3).add_transfer("B", "A", 2);
        let proj = b.build().unwrap().undirected_projection();
        assert!(!proj.is_directed());
        assert_eq!(proj.edge_count(), 1);
        assert_eq!(proj.weight_by_label("A", "B"), Some(5));
        assert_eq!(proj.weight_by_label("B", "A"), Some(5));
    }

    #[test]
    fn projection_of_edgeless_network() {
        let mut b = NetworkBuilder::new(true);
        b.add_node("A").add_node("B");
        let proj = b.build().unwrap().undirected_projection();
        assert_eq!(proj.node_count(), 2);
        assert_eq!(proj.edge_count(), 0);
    }

    #[test]
    fn projection_of_directed_triangle() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 1)
            .add_transfer("B", "C", 1)
            .add_transfer("C", "A", 1);
        let proj = b.build().unwrap().undirected_projection();
        assert_eq!(proj.edge_count(), 3);
        for (u, v) in [("A", "B"), ("B", "C"), ("A", "C")] {
            assert_eq!(proj.weight_by_label(u, v), Some(1));
        }
    }

    #[test]
    fn builder_rejects_self_loops_and_zero_weights() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "A", 1);
        assert!(matches!(b.build(), Err(NetworkError::SelfLoop(l)) if l == "A"));
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 0);
        assert!(matches!(b.build(), Err(NetworkError::ZeroWeight { .. })));
    }

    #[test]
    fn categories_must_name_existing_nodes() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 1).set_category("C", "x");
        assert!(matches!(b.build(), Err(NetworkError::UnknownNode(l)) if l == "C"));
    }

    #[test]
    fn symmetric_directed_doubles_edges() {
        let mut b = NetworkBuilder::new(false);
        b.add_transfer("B", "A", 4);
        let d = b.build().unwrap().to_symmetric_directed();
        assert_eq!(d.edge_count(), 2);
        assert_eq!(d.weight_by_label("A", "B"), Some(4));
        assert_eq!(d.weight_by_label("B", "A"), Some(4));
    }
}
