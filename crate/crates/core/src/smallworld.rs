//! Degree-preserving reference networks and the small-world coefficients
//! σ = (C/C_rand)/(L/L_rand) and ω = L_rand/L − C/C_lat.
//!
//! Everything here works on the unweighted undirected projection.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics;
use crate::network::TransferNetwork;
use crate::seed::{derive_seed, stream_rng};
use crate::traversal;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmallWorldError {
    #[error("at least one reference sample is required")]
    NoSamples,
    #[error("giant component has {0} nodes; need at least 3")]
    ComponentTooSmall(usize),
}

/// Unweighted simple undirected graph in index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct SimpleGraph {
    pub(crate) n: usize,
    pub(crate) edges: Vec<(usize, usize)>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl SimpleGraph {
    pub(crate) fn from_network(net: &TransferNetwork) -> Self {
        let adj = net.undirected_adjacency();
        Self::from_adjacency(&adj)
    }

    pub(crate) fn from_adjacency(adj: &[Vec<usize>]) -> Self {
        let mut edges = Vec::new();
        for (u, list) in adj.iter().enumerate() {
            for &v in list {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        SimpleGraph { n: adj.len(), edges }
    }

    /// Subgraph induced by `nodes` (ascending), reindexed.
    fn induced(adj: &[Vec<usize>], nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; adj.len()];
        for (i, &v) in nodes.iter().enumerate() {
            index[v] = i;
        }
        let sub: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&v| {
                adj[v]
                    .iter()
                    .filter(|&&w| index[w] != usize::MAX)
                    .map(|&w| index[w])
                    .collect()
            })
            .collect();
        Self::from_adjacency(&sub)
    }

    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    pub(crate) fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub(crate) fn to_network(&self, labels: &[String]) -> TransferNetwork {
        TransferNetwork::from_index_edges(
            false,
            labels.to_vec(),
            self.edges.iter().map(|&(u, v)| (u, v, 1)),
        )
    }

    /// Proposes `n_swaps` double-edge swaps; `accept(old, new)` gets the
    /// two removed and two added edges. Returns the number accepted.
    pub(crate) fn swap<R: Rng>(
        &mut self,
        n_swaps: usize,
        rng: &mut R,
        mut accept: impl FnMut([(usize, usize); 2], [(usize, usize); 2]) -> bool,
    ) -> usize {
        let m = self.edges.len();
        if m < 2 {
            return 0;
        }
        let mut present: HashSet<(usize, usize)> = self.edges.iter().copied().collect();
        let mut accepted = 0;
        for _ in 0..n_swaps {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = self.edges[i];
            let (mut c, mut d) = self.edges[j];
            if rng.random::<bool>() {
                std::mem::swap(&mut c, &mut d);
            }
            // (a,b),(c,d) -> (a,d),(c,b)
            if a == d || c == b {
                continue;
            }
            let (e1, e2) = (key(a, d), key(c, b));
            if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            if !accept([(a, b), (c, d)], [e1, e2]) {
                continue;
            }
            present.remove(&self.edges[i]);
            present.remove(&self.edges[j]);
            present.insert(e1);
            present.insert(e2);
            self.edges[i] = e1;
            self.edges[j] = e2;
            accepted += 1;
        }
        accepted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewired {
    pub network: TransferNetwork,
    pub proposed: usize,
    pub accepted: usize,
    /// Set when no proposed swap could be applied (e.g. a star).
    pub no_legal_swap: bool,
}

/// Default number of proposed swaps for randomisation: ten per edge.
pub fn default_swaps(edge_count: usize) -> usize {
    10 * edge_count
}

/// Default for latticization. The greedy acceptance rule converges far more
/// slowly than randomisation; at ten per edge a rewired ring is still well
/// short of its band structure.
pub fn default_lattice_swaps(edge_count: usize) -> usize {
    1000 * edge_count
}

/// Degree-preserving randomisation by double-edge swaps. The output is the
/// unweighted undirected projection with rewired edges.
pub fn rewire_random(net: &TransferNetwork, n_swaps: usize, seed: u64) -> Rewired {
    let mut g = SimpleGraph::from_network(net);
    let accepted = randomise(&mut g, n_swaps, seed);
    Rewired {
        network: g.to_network(net.labels()),
        proposed: n_swaps,
        accepted,
        no_legal_swap: accepted == 0,
    }
}

fn randomise(g: &mut SimpleGraph, n_swaps: usize, seed: u64) -> usize {
    let mut rng = stream_rng(seed, 0);
    g.swap(n_swaps, &mut rng, |_, _| true)
}

/// Latticization: the same swap move, accepted only when it does not
/// increase the total index distance `Σ |pos(u) − pos(v)|` over edges,
/// with nodes placed in order of decreasing degree (ties by index).
pub fn latticize(net: &TransferNetwork, n_swaps: usize, seed: u64) -> Rewired {
    let mut g = SimpleGraph::from_network(net);
    let accepted = latticize_graph(&mut g, n_swaps, seed);
    Rewired {
        network: g.to_network(net.labels()),
        proposed: n_swaps,
        accepted,
        no_legal_swap: accepted == 0,
    }
}

fn lattice_positions(g: &SimpleGraph) -> Vec<i64> {
    let deg = g.degrees();
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
    let mut pos = vec![0i64; g.n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p as i64;
    }
    pos
}

fn latticize_graph(g: &mut SimpleGraph, n_swaps: usize, seed: u64) -> usize {
    let pos = lattice_positions(g);
    let dist = |(u, v): (usize, usize)| (pos[u] - pos[v]).abs();
    let mut rng = stream_rng(seed, 1);
    g.swap(n_swaps, &mut rng, |old, new| {
        dist(new[0]) + dist(new[1]) <= dist(old[0]) + dist(old[1])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallWorldConfig {
    pub n_samples: usize,
    /// Proposed swaps per random reference, as a multiple of edge count.
    pub swaps_per_edge: usize,
    /// Proposed swaps per lattice reference, as a multiple of edge count.
    pub lattice_swaps_per_edge: usize,
    pub seed: u64,
}

impl Default for SmallWorldConfig {
    fn default() -> Self {
        SmallWorldConfig {
            n_samples: 20,
            swaps_per_edge: 10,
            lattice_swaps_per_edge: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallWorldReport {
    pub c_av: f64,
    pub l_av: f64,
    pub c_rand: f64,
    pub l_rand: Option<f64>,
    pub c_lat: f64,
    pub c_rand_sd: f64,
    pub l_rand_sd: Option<f64>,
    pub c_lat_sd: f64,
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_reason: Option<String>,
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_reason: Option<String>,
    /// Standard errors of σ and ω over paired ensemble members.
    pub sigma_se: Option<f64>,
    pub omega_se: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub swap_count: usize,
    pub lattice_swap_count: usize,
    pub component_nodes: usize,
    pub coverage: f64,
    pub stuck_references: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

struct Member {
    c_rand: f64,
    l_rand: Option<f64>,
    c_lat: f64,
    stuck: usize,
}

/// σ and ω of the giant component of the unweighted undirected projection
/// against `n_samples` random and `n_samples` latticized references.
pub fn small_world_report(
    net: &TransferNetwork,
    config: SmallWorldConfig,
) -> Result<SmallWorldReport, SmallWorldError> {
    if config.n_samples == 0 {
        return Err(SmallWorldError::NoSamples);
    }
    let adj = net.undirected_adjacency();
    let comp = traversal::connected_components(&adj, None);
    let giant = traversal::largest_component(&comp);
    if giant.len() < 3 {
        return Err(SmallWorldError::ComponentTooSmall(giant.len()));
    }
    let g = SimpleGraph::induced(&adj, &giant);
    let g_adj = g.adjacency();
    let c_av = metrics::clustering_of(&g_adj).average;
    let (l_av, _) = metrics::avg_path_of(&g_adj, true)
        .map_err(|_| SmallWorldError::ComponentTooSmall(giant.len()))?;
    let swaps = config.swaps_per_edge * g.edges.len();
    let lattice_swaps = config.lattice_swaps_per_edge * g.edges.len();
    let random_seed = derive_seed(config.seed, "small_world/random");
    let lattice_seed = derive_seed(config.seed, "small_world/lattice");

    let members: Vec<Member> = (0..config.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = g.clone();
            let acc_r = r.swap(swaps, &mut stream_rng(random_seed, i), |_, _| true);
            let r_adj = r.adjacency();
            let mut lat = g.clone();
            let acc_l = latticize_graph(&mut lat, lattice_swaps, derive_seed(lattice_seed, &i.to_string()));
            Member {
                c_rand: metrics::clustering_of(&r_adj).average,
                l_rand: metrics::avg_path_of(&r_adj, true).ok().map(|(l, _)| l),
                c_lat: metrics::clustering_of(&lat.adjacency()).average,
                stuck: usize::from(acc_r == 0) + usize::from(acc_l == 0),
            }
        })
        .collect();

    let c_rands: Vec<f64> = members.iter().map(|m| m.c_rand).collect();
    let c_lats: Vec<f64> = members.iter().map(|m| m.c_lat).collect();
    let l_rands: Vec<f64> = members.iter().filter_map(|m| m.l_rand).collect();
    let (c_rand, c_rand_sd) = mean_sd(&c_rands);
    let (c_lat, c_lat_sd) = mean_sd(&c_lats);
    let (l_rand, l_rand_sd) = if l_rands.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&l_rands);
        (Some(m), Some(s))
    };

    let (sigma, sigma_reason) = match l_rand {
        _ if c_rand == 0.0 => (None, Some("random-reference clustering is zero".to_string())),
        None => (None, Some("random references have no reachable pairs".to_string())),
        Some(l_rand) => (Some((c_av / c_rand) / (l_av / l_rand)), None),
    };
    let (omega, omega_reason) = match l_rand {
        _ if c_lat == 0.0 => (None, Some("lattice-reference clustering is zero".to_string())),
        None => (None, Some("random references have no reachable pairs".to_string())),
        Some(l_rand) => (Some(l_rand / l_av - c_av / c_lat), None),
    };

    let se = |values: Vec<f64>| {
        (values.len() >= 2).then(|| mean_sd(&values).1 / (values.len() as f64).sqrt())
    };
    let sigma_se = se(members
        .iter()
        .filter(|m| m.c_rand > 0.0)
        .filter_map(|m| m.l_rand.map(|l| (c_av / m.c_rand) / (l_av / l)))
        .collect());
    let omega_se = se(members
        .iter()
        .filter(|m| m.c_lat > 0.0)
        .filter_map(|m| m.l_rand.map(|l| l / l_av - c_av / m.c_lat))
        .collect());

    Ok(SmallWorldReport {
        c_av,
        l_av,
        c_rand,
        l_rand,
        c_lat,
        c_rand_sd,
        l_rand_sd,
        c_lat_sd,
        sigma,
        sigma_reason,
        omega,
        omega_reason,
        sigma_se,
        omega_se,
        n_samples: config.n_samples,
        seed: config.seed,
        swap_count: swaps,
        lattice_swap_count: lattice_swaps,
        component_nodes: giant.len(),
        coverage: giant.len() as f64 / net.node_count() as f64,
        stuck_references: members.iter().map(|m| m.stuck).sum(),
    })
}
