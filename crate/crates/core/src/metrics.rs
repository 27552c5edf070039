//! Node- and network-level measures of a transfer network.
//!
//! Degree conventions: on a directed network `k = in + out`, so an
//! antiparallel pair contributes 2 to each endpoint. Clustering and `k_nn`
//! are computed on the undirected projection; betweenness and path lengths
//! count hops unless weights are requested.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::network::TransferNetwork;
use crate::regression::{self, Coefficient, FitKind, RegressionFit};
use crate::traversal;

/// Why a measure has no value on a given network.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("network has no edges")]
    NoEdges,
    #[error("measure is defined for directed networks only")]
    NotDirected,
    #[error("need at least 2 edges, found {0}")]
    TooFewEdges(usize),
    #[error("zero degree variance at {0} edge endpoints")]
    ZeroVariance(&'static str),
    #[error("no reachable node pairs")]
    NoReachablePairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeRecord {
    pub degree: usize,
    pub in_degree: usize,
    pub out_degree: usize,
    /// `in_degree - out_degree`; positive for receivers.
    pub net_connectivity: i64,
}

pub fn degrees(net: &TransferNetwork) -> Vec<DegreeRecord> {
    (0..net.node_count())
        .map(|i| {
            let out_degree = net.out_neighbors(i).len();
            let in_degree = net.in_neighbors(i).len();
            if net.is_directed() {
                DegreeRecord {
                    degree: in_degree + out_degree,
                    in_degree,
                    out_degree,
                    net_connectivity: in_degree as i64 - out_degree as i64,
                }
            } else {
                DegreeRecord {
                    degree: out_degree,
                    in_degree: out_degree,
                    out_degree,
                    net_connectivity: 0,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrengthRecord {
    pub strength: u64,
    pub in_strength: u64,
    pub out_strength: u64,
}

pub fn strengths(net: &TransferNetwork) -> Vec<StrengthRecord> {
    (0..net.node_count())
        .map(|i| {
            let out_strength: u64 = net.out_neighbors(i).iter().map(|&(_, w)| w).sum();
            let in_strength: u64 = net.in_neighbors(i).iter().map(|&(_, w)| w).sum();
            let strength = if net.is_directed() {
                in_strength + out_strength
            } else {
                out_strength
            };
            StrengthRecord {
                strength,
                in_strength,
                out_strength,
            }
        })
        .collect()
}

/// Fraction of directed edges whose reverse edge also exists.
pub fn reciprocity(net: &TransferNetwork) -> Result<f64, MetricError> {
    if !net.is_directed() {
        return Err(MetricError::NotDirected);
    }
    if net.edge_count() == 0 {
        return Err(MetricError::NoEdges);
    }
    let mutual = net
        .edges()
        .iter()
        .filter(|e| net.weight(e.target, e.source).is_some())
        .count();
    Ok(mutual as f64 / net.edge_count() as f64)
}

/// Fraction of edges not on any directed cycle. An edge lies on a cycle
/// exactly when both endpoints share a strongly connected component.
pub fn flow_hierarchy(net: &TransferNetwork) -> Result<f64, MetricError> {
    if !net.is_directed() {
        return Err(MetricError::NotDirected);
    }
    if net.edge_count() == 0 {
        return Err(MetricError::NoEdges);
    }
    let comp = traversal::strongly_connected(&net.out_adjacency(), None);
    let acyclic = net
        .edges()
        .iter()
        .filter(|e| comp[e.source] != comp[e.target])
        .count();
    Ok(acyclic as f64 / net.edge_count() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub local: Vec<f64>,
    /// Mean of the local coefficients over all nodes (0 for nodes with k < 2).
    pub average: f64,
    /// `3 × triangles / connected triples`.
    pub transitivity: f64,
}

pub fn clustering(net: &TransferNetwork) -> Clustering {
    clustering_of(&net.undirected_adjacency())
}

/// Clustering of a symmetric, sorted, loop-free adjacency.
pub(crate) fn clustering_of(adj: &[Vec<usize>]) -> Clustering {
    let n = adj.len();
    let mut local = vec![0.0; n];
    let mut closed = 0u64;
    let mut triples = 0u64;
    for v in 0..n {
        let k = adj[v].len() as u64;
        if k < 2 {
            continue;
        }
        let mut tri = 0u64;
        for (a, &u) in adj[v].iter().enumerate() {
            for &w in &adj[v][a + 1..] {
                if adj[u].binary_search(&w).is_ok() {
                    tri += 1;
                }
            }
        }
        let pairs = k * (k - 1) / 2;
        local[v] = tri as f64 / pairs as f64;
        closed += tri;
        triples += pairs;
    }
    let average = if n == 0 {
        0.0
    } else {
        local.iter().sum::<f64>() / n as f64
    };
    let transitivity = if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    };
    Clustering {
        local,
        average,
        transitivity,
    }
}

// sources are accumulated in fixed-size blocks so the floating-point sum
// order does not depend on the thread count
const SOURCE_BLOCK: usize = 32;

/// Normalized betweenness: ordered-pair dependency sums divided by
/// `(n-1)(n-2)`. With `use_weights`, edge length is `1 / weight`.
pub fn betweenness(net: &TransferNetwork, use_weights: bool) -> Vec<f64> {
    let n = net.node_count();
    if n <= 2 {
        return vec![0.0; n];
    }
    let adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            net.out_neighbors(i)
                .iter()
                .map(|&(j, w)| (j, if use_weights { 1.0 / w as f64 } else { 1.0 }))
                .collect()
        })
        .collect();
    let blocks: Vec<Vec<f64>> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(SOURCE_BLOCK)
        .map(|sources| {
            let mut acc = vec![0.0; n];
            let mut state = BrandesState::new(n);
            for &s in sources {
                if use_weights {
                    state.dijkstra(&adj, s);
                } else {
                    state.bfs(&adj, s);
                }
                state.accumulate(s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for block in blocks {
        for (t, b) in total.iter_mut().zip(block) {
            *t += b;
        }
    }
    let norm = 1.0 / ((n - 1) * (n - 2)) as f64;
    total.iter().map(|b| b * norm).collect()
}

/// Unweighted betweenness over a plain adjacency list.
pub(crate) fn betweenness_of(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    if n <= 2 {
        return vec![0.0; n];
    }
    let weighted: Vec<Vec<(usize, f64)>> = adj
        .iter()
        .map(|l| l.iter().map(|&j| (j, 1.0)).collect())
        .collect();
    let mut acc = vec![0.0; n];
    let mut state = BrandesState::new(n);
    for s in 0..n {
        state.bfs(&weighted, s);
        state.accumulate(s, &mut acc);
    }
    let norm = 1.0 / ((n - 1) * (n - 2)) as f64;
    acc.iter().map(|b| b * norm).collect()
}

struct BrandesState {
    order: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
    dist: Vec<f64>,
    delta: Vec<f64>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl BrandesState {
    fn new(n: usize) -> Self {
        BrandesState {
            order: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            sigma: vec![0.0; n],
            dist: vec![f64::INFINITY; n],
            delta: vec![0.0; n],
        }
    }

    fn reset(&mut self, s: usize) {
        self.order.clear();
        for p in &mut self.preds {
            p.clear();
        }
        self.sigma.iter_mut().for_each(|x| *x = 0.0);
        self.dist.iter_mut().for_each(|x| *x = f64::INFINITY);
        self.sigma[s] = 1.0;
        self.dist[s] = 0.0;
    }

    fn bfs(&mut self, adj: &[Vec<(usize, f64)>], s: usize) {
        self.reset(s);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            self.order.push(v);
            for &(w, _) in &adj[v] {
                if self.dist[w].is_infinite() {
                    self.dist[w] = self.dist[v] + 1.0;
                    queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1.0 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
    }

    fn dijkstra(&mut self, adj: &[Vec<(usize, f64)>], s: usize) {
        self.reset(s);
        let mut settled = vec![false; adj.len()];
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, s));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if settled[v] || d > self.dist[v] {
                continue;
            }
            settled[v] = true;
            self.order.push(v);
            for &(w, len) in &adj[v] {
                if settled[w] {
                    continue;
                }
                let candidate = d + len;
                if nearly_equal(candidate, self.dist[w]) {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                } else if candidate < self.dist[w] {
                    self.dist[w] = candidate;
                    self.sigma[w] = self.sigma[v];
                    self.preds[w].clear();
                    self.preds[w].push(v);
                    heap.push(HeapItem(candidate, w));
                }
            }
        }
    }

    fn accumulate(&mut self, s: usize, acc: &mut [f64]) {
        self.delta.iter_mut().for_each(|x| *x = 0.0);
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

fn pearson(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let tiny = |s: f64, m: f64| s <= 1e-12 * n * (1.0 + m * m);
    match (tiny(sxx, mx), tiny(syy, my)) {
        (true, true) => Err(MetricError::ZeroVariance("both")),
        (true, false) => Err(MetricError::ZeroVariance("source")),
        (false, true) => Err(MetricError::ZeroVariance("target")),
        _ => Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)),
    }
}

/// Degree assortativity: Pearson correlation over directed edges of
/// (out-degree of source, in-degree of target). On an undirected network
/// each edge is counted in both orientations with total degrees.
pub fn assortativity(net: &TransferNetwork) -> Result<f64, MetricError> {
    if net.edge_count() < 2 {
        return Err(MetricError::TooFewEdges(net.edge_count()));
    }
    let deg = degrees(net);
    let pairs: Vec<(f64, f64)> = if net.is_directed() {
        net.edges()
            .iter()
            .map(|e| (deg[e.source].out_degree as f64, deg[e.target].in_degree as f64))
            .collect()
    } else {
        net.edges()
            .iter()
            .flat_map(|e| {
                let (a, b) = (deg[e.source].degree as f64, deg[e.target].degree as f64);
                [(a, b), (b, a)]
            })
            .collect()
    };
    pearson(&pairs)
}

/// Assortativity of the undirected projection.
pub fn assortativity_undirected(net: &TransferNetwork) -> Result<f64, MetricError> {
    assortativity(&net.undirected_projection())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnPoint {
    pub degree: usize,
    pub mean_knn: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Knn {
    /// Weighted average nearest-neighbour degree; `None` for isolated nodes.
    pub per_node: Vec<Option<f64>>,
    pub curve: Vec<KnnPoint>,
    pub fit: RegressionFit,
}

/// Weighted `k_nn,i = (1/s_i) Σ_j w_ij k_j` on the undirected projection,
/// its mean per degree class, and a least-squares line through the curve.
/// A curve with a single degree class gets slope 0 through its mean.
pub fn knn(net: &TransferNetwork) -> Result<Knn, MetricError> {
    if net.edge_count() == 0 {
        return Err(MetricError::NoEdges);
    }
    let proj = net.undirected_projection();
    let n = proj.node_count();
    let k: Vec<usize> = (0..n).map(|i| proj.out_neighbors(i).len()).collect();
    let per_node: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let nb = proj.out_neighbors(i);
            if nb.is_empty() {
                return None;
            }
            let s: u64 = nb.iter().map(|&(_, w)| w).sum();
            let num: f64 = nb.iter().map(|&(j, w)| w as f64 * k[j] as f64).sum();
            Some(num / s as f64)
        })
        .collect();

    let mut classes: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (i, v) in per_node.iter().enumerate() {
        if let Some(v) = v {
            let e = classes.entry(k[i]).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let curve: Vec<KnnPoint> = classes
        .into_iter()
        .map(|(degree, (sum, nodes))| KnnPoint {
            degree,
            mean_knn: sum / nodes as f64,
            nodes,
        })
        .collect();

    let xs: Vec<f64> = curve.iter().map(|p| p.degree as f64).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.mean_knn).collect();
    let (slope, intercept, residual_sd) = if curve.len() < 2 {
        (0.0, ys[0], 0.0)
    } else {
        let ls = regression::fit_line(&xs, &ys).expect("distinct degree classes");
        (ls.coefficients[0], ls.coefficients[1], ls.residual_sd)
    };
    let fit = RegressionFit {
        kind: FitKind::KnnDegreeLinear,
        coefficients: vec![
            Coefficient {
                name: "slope",
                value: slope,
            },
            Coefficient {
                name: "intercept",
                value: intercept,
            },
        ],
        baseline: None,
        residual_sd,
        n_points: curve.len(),
        outlier_threshold: f64::INFINITY,
        outliers: Vec::new(),
    };
    Ok(Knn {
        per_node,
        curve,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathScope {
    Directed,
    UndirectedProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLength {
    pub scope: PathScope,
    /// Mean hop distance over ordered pairs inside the largest component.
    pub mean: f64,
    pub component_size: usize,
    /// Component size over node count.
    pub coverage: f64,
}

/// Average shortest path (hops) within the largest strongly connected
/// component (directed scope) or connected component of the projection.
pub fn avg_shortest_path(net: &TransferNetwork, scope: PathScope) -> Result<PathLength, MetricError> {
    let adj = match scope {
        PathScope::Directed if net.is_directed() => net.out_adjacency(),
        _ => net.undirected_adjacency(),
    };
    let symmetric = !(scope == PathScope::Directed && net.is_directed());
    avg_path_of(&adj, symmetric).map(|(mean, size)| PathLength {
        scope,
        mean,
        component_size: size,
        coverage: size as f64 / net.node_count() as f64,
    })
}

/// Mean hop distance inside the giant component of `adj`, with its size.
pub(crate) fn avg_path_of(adj: &[Vec<usize>], symmetric: bool) -> Result<(f64, usize), MetricError> {
    if adj.is_empty() {
        return Err(MetricError::EmptyNetwork);
    }
    let comp = if symmetric {
        traversal::connected_components(adj, None)
    } else {
        traversal::strongly_connected(adj, None)
    };
    let members = traversal::largest_component(&comp);
    let m = members.len();
    if m < 2 {
        return Err(MetricError::NoReachablePairs);
    }
    let cid = comp[members[0]];
    let total: u64 = members
        .par_iter()
        .map(|&s| {
            let d = traversal::bfs_distances(adj, s, None);
            members
                .iter()
                .filter(|&&t| t != s && comp[t] == cid)
                .map(|&t| d[t] as u64)
                .sum::<u64>()
        })
        .sum();
    Ok((total as f64 / (m * (m - 1)) as f64, m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub label: String,
    pub degree: usize,
    pub in_degree: usize,
    pub out_degree: usize,
    pub net_connectivity: i64,
    pub strength: u64,
    pub in_strength: u64,
    pub out_strength: u64,
    pub clustering: f64,
    pub betweenness: f64,
    pub knn_weighted: Option<f64>,
}

/// Per-node measures in label order.
pub fn node_metrics(net: &TransferNetwork, weighted_betweenness: bool) -> Vec<NodeMetrics> {
    let deg = degrees(net);
    let st = strengths(net);
    let cl = clustering(net);
    let bc = betweenness(net, weighted_betweenness);
    let knn_values = knn(net)
        .map(|k| k.per_node)
        .unwrap_or_else(|_| vec![None; net.node_count()]);
    (0..net.node_count())
        .map(|i| NodeMetrics {
            label: net.label(i).to_string(),
            degree: deg[i].degree,
            in_degree: deg[i].in_degree,
            out_degree: deg[i].out_degree,
            net_connectivity: deg[i].net_connectivity,
            strength: st[i].strength,
            in_strength: st[i].in_strength,
            out_strength: st[i].out_strength,
            clustering: cl.local[i],
            betweenness: bc[i],
            knn_weighted: knn_values[i],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMetrics {
    pub node_count: usize,
    pub edge_count: usize,
    pub total_weight: u64,
    pub reciprocity: Result<f64, MetricError>,
    pub flow_hierarchy: Result<f64, MetricError>,
    pub global_clustering: f64,
    pub transitivity: f64,
    pub avg_shortest_path: Result<PathLength, MetricError>,
    pub avg_shortest_path_undirected: Result<PathLength, MetricError>,
    pub assortativity: Result<f64, MetricError>,
    pub assortativity_undirected: Result<f64, MetricError>,
    pub mean_edge_weight: Result<f64, MetricError>,
    /// Total degree -> fraction of nodes.
    pub degree_distribution: BTreeMap<usize, f64>,
}

pub fn network_metrics(net: &TransferNetwork) -> NetworkMetrics {
    let cl = clustering(net);
    NetworkMetrics {
        node_count: net.node_count(),
        edge_count: net.edge_count(),
        total_weight: net.total_weight(),
        reciprocity: reciprocity(net),
        flow_hierarchy: flow_hierarchy(net),
        global_clustering: cl.average,
        transitivity: cl.transitivity,
        avg_shortest_path: avg_shortest_path(net, PathScope::Directed),
        avg_shortest_path_undirected: avg_shortest_path(net, PathScope::UndirectedProjection),
        assortativity: assortativity(net),
        assortativity_undirected: assortativity_undirected(net),
        mean_edge_weight: net.mean_edge_weight().ok_or(MetricError::NoEdges),
        degree_distribution: degree_distribution(net),
    }
}

pub fn degree_distribution(net: &TransferNetwork) -> BTreeMap<usize, f64> {
    let n = net.node_count();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for d in degrees(net) {
        *counts.entry(d.degree).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;

    fn directed(edges: &[(&str, &str, u64)]) -> TransferNetwork {
        let mut b = NetworkBuilder::new(true);
        for &(u, v, w) in edges {
            b.add_transfer(u, v, w);
        }
        b.build().unwrap()
    }

    fn undirected(edges: &[(&str, &str)]) -> TransferNetwork {
        let mut b = NetworkBuilder::new(false);
        for &(u, v) in edges {
            b.add_transfer(u, v, 1);
        }
        b.build().unwrap()
    }

    fn by_label<'a, T>(net: &TransferNetwork, values: &'a [T], label: &str) -> &'a T {
        &values[net.index_of(label).unwrap()]
    }

    fn complete(n: usize) -> TransferNetwork {
        let mut b = NetworkBuilder::new(false);
        for i in 0..n {
            for j in i + 1..n {
                b.add_transfer(&format!("n{i}"), &format!("n{j}"), 1);
            }
        }
        b.build().unwrap()
    }

    fn star(leaves: usize) -> TransferNetwork {
        let mut b = NetworkBuilder::new(true);
        for i in 0..leaves {
            b.add_transfer("hub", &format!("leaf{i:02}"), 1);
        }
        b.build().unwrap()
    }

    #[test]
    fn single_edge_degrees() {
        let net = directed(&[("A", "B", 1)]);
        let d = degrees(&net);
        assert_eq!(
            *by_label(&net, &d, "A"),
            DegreeRecord { degree: 1, in_degree: 0, out_degree: 1, net_connectivity: -1 }
        );
        assert_eq!(by_label(&net, &d, "B").net_connectivity, 1);
    }

    #[test]
    fn antiparallel_pair_counts_twice() {
        let net = directed(&[("A", "B", 1), ("B", "A", 1)]);
        for d in degrees(&net) {
            assert_eq!(d.degree, 2);
            assert_eq!(d.net_connectivity, 0);
        }
    }

    #[test]
    fn four_node_degrees() {
        let net = directed(&[("A", "B", 1), ("A", "C", 1), ("B", "C", 1), ("C", "D", 1)]);
        let c = *by_label(&net, &degrees(&net), "C");
        assert_eq!((c.in_degree, c.out_degree, c.net_connectivity), (2, 1, 1));
    }

    #[test]
    fn strength_examples() {
        let net = directed(&[("A", "B", 5)]);
        let s = strengths(&net);
        assert_eq!(by_label(&net, &s, "A").strength, 5);
        assert_eq!(by_label(&net, &s, "B").strength, 5);
        let net = directed(&[("A", "B", 3), ("C", "B", 4)]);
        assert_eq!(by_label(&net, &strengths(&net), "B").strength, 7);
        let net = directed(&[("A", "B", 1), ("B", "C", 1), ("C", "A", 1), ("A", "C", 1)]);
        for (d, s) in degrees(&net).iter().zip(strengths(&net)) {
            assert_eq!(d.degree as u64, s.strength);
        }
    }

    #[test]
    fn reciprocity_examples() {
        let cycle = directed(&[("A", "B", 1), ("B", "C", 1), ("C", "A", 1)]);
        assert_eq!(reciprocity(&cycle), Ok(0.0));
        assert_eq!(reciprocity(&directed(&[("A", "B", 1), ("B", "A", 1)])), Ok(1.0));
        let r = reciprocity(&directed(&[("A", "B", 1), ("B", "A", 1), ("B", "C", 1)])).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        let mut b = NetworkBuilder::new(true);
        b.add_node("A");
        assert_eq!(reciprocity(&b.build().unwrap()), Err(MetricError::NoEdges));
    }

    #[test]
    fn flow_hierarchy_examples() {
        let dag = directed(&[("A", "B", 1), ("A", "C", 1), ("B", "C", 1), ("C", "D", 1)]);
        assert_eq!(flow_hierarchy(&dag), Ok(1.0));
        let cycle = directed(&[("A", "B", 1), ("B", "C", 1), ("C", "A", 1)]);
        assert_eq!(flow_hierarchy(&cycle), Ok(0.0));
        let h = flow_hierarchy(&directed(&[("A", "B", 1), ("B", "A", 1), ("B", "C", 1)])).unwrap();
        assert!((h - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn clustering_examples() {
        let k4 = clustering(&complete(4));
        assert!(k4.local.iter().all(|&c| c == 1.0));
        assert_eq!(k4.average, 1.0);
        let st = clustering(&star(5));
        assert!(st.local.iter().all(|&c| c == 0.0));
        let tri = clustering(&undirected(&[("A", "B"), ("B", "C"), ("A", "C"), ("C", "D")]));
        assert!((tri.transitivity - 3.0 / 5.0).abs() < 1e-15);
        assert!((tri.average - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn betweenness_examples() {
        let path = undirected(&[("A", "B"), ("B", "C")]);
        let b = betweenness(&path, false);
        assert_eq!(b, vec![0.0, 1.0, 0.0]);
        assert!(betweenness(&complete(5), false).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weighted_betweenness_prefers_heavy_routes() {
        // A->C direct with weight 1 (length 1) vs A->B->C with weight 4 each (length 0.5)
        let net = directed(&[("A", "C", 1), ("A", "B", 4), ("B", "C", 4)]);
        assert_eq!(*by_label(&net, &betweenness(&net, false), "B"), 0.0);
        assert_eq!(*by_label(&net, &betweenness(&net, true), "B"), 0.5);
    }

    #[test]
    fn star_assortativity_is_undefined() {
        assert!(matches!(assortativity(&star(4)), Err(MetricError::ZeroVariance(_))));
    }

    #[test]
    fn assortativity_hand_pairs() {
        // edges A->B, A->C, B->C, C->D, D->A
        let net = directed(&[("A", "B", 1), ("A", "C", 1), ("B", "C", 1), ("C", "D", 1), ("D", "A", 1)]);
        // (out(src), in(tgt)): A->B (2,1) A->C (2,2) B->C (1,2) C->D (1,1) D->A (1,1)
        let pairs = [(2.0, 1.0), (2.0, 2.0), (1.0, 2.0), (1.0, 1.0), (1.0, 1.0)];
        let n = 5.0;
        let mx: f64 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my: f64 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let vx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let vy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
        let expected = cov / (vx * vy).sqrt();
        let a = assortativity(&net).unwrap();
        assert!((a - expected).abs() < 1e-9);
        assert_eq!(assortativity(&net.scaled(2)), Ok(a));
    }

    #[test]
    fn knn_ring_and_star() {
        let ring = undirected(&[("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("E", "A")]);
        let k = knn(&ring).unwrap();
        assert!(k.per_node.iter().all(|v| *v == Some(2.0)));
        assert_eq!(k.fit.coefficient("slope"), Some(0.0));
        let st = star(4);
        let k = knn(&st).unwrap();
        assert_eq!(*by_label(&st, &k.per_node, "hub"), Some(1.0));
        assert_eq!(*by_label(&st, &k.per_node, "leaf00"), Some(4.0));
    }

    #[test]
    fn knn_weighted_hand_value() {
        // projection: A-B 3 (2+1), A-C 1, B-C 2, C-D 5
        let net = directed(&[("A", "B", 2), ("B", "A", 1), ("A", "C", 1), ("B", "C", 2), ("C", "D", 5)]);
        let k = knn(&net).unwrap();
        // degrees in projection: A2 B2 C3 D1
        let c = by_label(&net, &k.per_node, "C").unwrap();
        assert!((c - (1.0 * 2.0 + 2.0 * 2.0 + 5.0 * 1.0) / 8.0).abs() < 1e-12);
        let a = by_label(&net, &k.per_node, "A").unwrap();
        assert!((a - (3.0 * 2.0 + 1.0 * 3.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn path_length_examples() {
        let path = undirected(&[("A", "B"), ("B", "C")]);
        let l = avg_shortest_path(&path, PathScope::UndirectedProjection).unwrap();
        assert!((l.mean - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.coverage, 1.0);
        let l = avg_shortest_path(&complete(6), PathScope::UndirectedProjection).unwrap();
        assert_eq!(l.mean, 1.0);
        let dag = directed(&[("A", "B", 1), ("B", "C", 1)]);
        assert_eq!(
            avg_shortest_path(&dag, PathScope::Directed),
            Err(MetricError::NoReachablePairs)
        );
    }

    #[test]
    fn directed_path_uses_largest_scc() {
        let net = directed(&[("A", "B", 1), ("B", "C", 1), ("C", "A", 1), ("C", "D", 1)]);
        let l = avg_shortest_path(&net, PathScope::Directed).unwrap();
        assert_eq!(l.component_size, 3);
        assert!((l.mean - 1.5).abs() < 1e-15);
        assert!((l.coverage - 0.75).abs() < 1e-15);
    }

    #[test]
    fn degree_distribution_sums_to_one() {
        let dist = degree_distribution(&star(7));
        assert!((dist.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(dist.get(&7), Some(&0.125));
    }
}
