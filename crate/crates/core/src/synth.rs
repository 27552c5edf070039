//! Reference network generators and random-walk event logs.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Geometric;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eventlog::AdmissionJourney;
use crate::network::TransferNetwork;
use crate::seed::stream_rng;
use crate::smallworld::SimpleGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("network has no edges to walk on")]
    NoEdges,
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidParameter(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelFamily {
    PreferentialAttachment { m: usize },
    RingRewire { k: usize, p: f64 },
    UniformRandom { p: f64 },
    Configuration { degrees: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.n;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let check_p = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(invalid(format!("p must lie in [0, 1], got {p}")))
            }
        };
        match &self.family {
            ModelFamily::PreferentialAttachment { m } => {
                if *m < 1 || *m >= n {
                    return Err(invalid(format!("m must satisfy 1 <= m < n, got m = {m}, n = {n}")));
                }
            }
            ModelFamily::RingRewire { k, p } => {
                if k % 2 != 0 || *k >= n {
                    return Err(invalid(format!("k must be even and < n, got k = {k}, n = {n}")));
                }
                check_p(*p)?;
            }
            ModelFamily::UniformRandom { p } => check_p(*p)?,
            ModelFamily::Configuration { degrees } => {
                if degrees.len() != n {
                    return Err(invalid(format!(
                        "degree sequence length {} does not match n = {n}",
                        degrees.len()
                    )));
                }
                if havel_hakimi(degrees).is_none() {
                    return Err(invalid("degree sequence is not graphical"));
                }
            }
        }
        Ok(())
    }
}

/// `v0`, `v1`, ... zero-padded so lexical order matches numeric order.
pub fn node_labels(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("v{i:0width$}")).collect()
}

/// Undirected, unit-weight network drawn from `spec`.
pub fn generate_network(spec: &ModelSpec) -> Result<TransferNetwork, SynthError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = stream_rng(spec.seed, 0);
    let edges = match &spec.family {
        ModelFamily::PreferentialAttachment { m } => preferential_attachment(n, *m, &mut rng),
        ModelFamily::RingRewire { k, p } => ring_rewire(n, *k, *p, &mut rng),
        ModelFamily::UniformRandom { p } => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random::<f64>() < *p {
                        edges.push((u, v));
                    }
                }
            }
            edges
        }
        ModelFamily::Configuration { degrees } => {
            let mut g = SimpleGraph {
                n,
                edges: havel_hakimi(degrees).expect("validated"),
            };
            let swaps = 10 * g.edges.len();
            g.swap(swaps, &mut rng, |_, _| true);
            g.edges
        }
    };
    Ok(SimpleGraph { n, edges }.to_network(&node_labels(n)))
}

// Star on m + 1 nodes, then each new node attaches to m distinct targets
// drawn from the degree-weighted repeated-node list.
fn preferential_attachment<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    let mut repeated: Vec<usize> = Vec::new();
    for &(u, v) in &edges {
        repeated.push(u);
        repeated.push(v);
    }
    for source in m + 1..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(repeated[rng.random_range(0..repeated.len())]);
        }
        for &t in &targets {
            edges.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    edges
}

// Ring lattice with k/2 neighbours per side; each clockwise edge (u, u+j)
// is rewired with probability p to a uniformly chosen non-neighbour of u.
fn ring_rewire<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p || adj[u].len() >= n - 1 || !adj[u].contains(&v) {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges = Vec::new();
    for (u, set) in adj.iter().enumerate() {
        edges.extend(set.iter().filter(|&&v| u < v).map(|&v| (u, v)));
    }
    edges
}

/// Simple graph realising `degrees`, or `None` if the sequence is not graphical.
fn havel_hakimi(degrees: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut remaining: Vec<(usize, usize)> = degrees.iter().copied().zip(0..).collect();
    let mut edges = Vec::new();
    loop {
        remaining.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let (d, u) = remaining[0];
        if d == 0 {
            return Some(edges);
        }
        if d >= remaining.len() {
            return None;
        }
        remaining[0].0 = 0;
        for slot in remaining.iter_mut().skip(1).take(d) {
            if slot.0 == 0 {
                return None;
            }
            slot.0 -= 1;
            edges.push((u.min(slot.1), u.max(slot.1)));
        }
    }
}

/// Number of stops per synthetic journey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LengthDistribution {
    /// `min` plus a geometric count, with overall mean `mean`.
    Geometric { mean: f64, min: usize },
    Fixed { stops: usize },
}

impl Default for LengthDistribution {
    fn default() -> Self {
        LengthDistribution::Geometric { mean: 14.0, min: 2 }
    }
}

impl LengthDistribution {
    fn sampler(&self) -> Result<LengthSampler, SynthError> {
        match *self {
            LengthDistribution::Fixed { stops } if stops >= 2 => Ok(LengthSampler::Fixed(stops)),
            LengthDistribution::Fixed { stops } => {
                Err(invalid(format!("journeys need at least 2 stops, got {stops}")))
            }
            LengthDistribution::Geometric { min, .. } if min < 2 => {
                Err(invalid(format!("journeys need at least 2 stops, got minimum {min}")))
            }
            LengthDistribution::Geometric { mean, min } => {
                if mean.is_nan() || mean < min as f64 {
                    return Err(invalid(format!("mean length {mean} is below the minimum {min}")));
                }
                let q = 1.0 / (mean - min as f64 + 1.0);
                let geo = Geometric::new(q).map_err(|e| invalid(e.to_string()))?;
                Ok(LengthSampler::Geometric(geo, min))
            }
        }
    }
}

enum LengthSampler {
    Fixed(usize),
    Geometric(Geometric, usize),
}

impl LengthSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            LengthSampler::Fixed(n) => *n,
            LengthSampler::Geometric(g, min) => min + g.sample(rng) as usize,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WalkStats {
    pub journeys: usize,
    pub transfers: usize,
    /// Journeys that stopped early at a node without out-edges.
    pub truncated: usize,
}

/// Weighted random walks on `net`. Starts are drawn in proportion to
/// out-strength and each step picks an out-edge in proportion to weight.
pub fn generate_event_log(
    net: &TransferNetwork,
    n_journeys: usize,
    lengths: LengthDistribution,
    seed: u64,
) -> Result<(Vec<AdmissionJourney>, WalkStats), SynthError> {
    let lengths = lengths.sampler()?;
    if net.edge_count() == 0 {
        return Err(SynthError::NoEdges);
    }
    let n = net.node_count();
    let steps: Vec<Option<WeightedIndex<u64>>> = (0..n)
        .map(|u| WeightedIndex::new(net.out_neighbors(u).iter().map(|&(_, w)| w)).ok())
        .collect();
    let out_strength: Vec<u64> = (0..n)
        .map(|u| net.out_neighbors(u).iter().map(|&(_, w)| w).sum())
        .collect();
    let start = WeightedIndex::new(&out_strength).map_err(|_| SynthError::NoEdges)?;
    let id_width = n_journeys.saturating_sub(1).to_string().len();

    let walks: Vec<(AdmissionJourney, bool)> = (0..n_journeys)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j as u64);
            let len = lengths.draw(&mut rng);
            let mut node = start.sample(&mut rng);
            let mut stops = vec![net.label(node)];
            let mut truncated = false;
            while stops.len() < len {
                let Some(step) = &steps[node] else {
                    truncated = true;
                    break;
                };
                node = net.out_neighbors(node)[step.sample(&mut rng)].0;
                stops.push(net.label(node));
            }
            let id = format!("a{j:0id_width$}");
            (AdmissionJourney::from_stops(&id, &stops), truncated)
        })
        .collect();

    let mut stats = WalkStats {
        journeys: walks.len(),
        ..Default::default()
    };
    let journeys = walks
        .into_iter()
        .map(|(journey, truncated)| {
            stats.transfers += journey.transfers();
            stats.truncated += usize::from(truncated);
            journey
        })
        .collect();
    Ok((journeys, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::network::NetworkBuilder;

    fn spec(family: ModelFamily, n: usize) -> ModelSpec {
        ModelSpec { family, n, seed: 11 }
    }

    #[test]
    fn ring_lattice_clustering() {
        let net = generate_network(&spec(ModelFamily::RingRewire { k: 6, p: 0.0 }, 100)).unwrap();
        assert_eq!(net.edge_count(), 300);
        let c = metrics::clustering(&net).average;
        assert!((c - 0.6).abs() < 1e-12, "{c}");
    }

    #[test]
    fn complete_graph_at_p_one() {
        let net = generate_network(&spec(ModelFamily::UniformRandom { p: 1.0 }, 12)).unwrap();
        assert_eq!(net.edge_count(), 66);
    }

    #[test]
    fn preferential_attachment_edge_count() {
        let net = generate_network(&spec(ModelFamily::PreferentialAttachment { m: 2 }, 50)).unwrap();
        assert_eq!(net.edge_count(), 2 + 2 * 47);
        assert_eq!(net.node_count(), 50);
    }

    #[test]
    fn configuration_realises_sequence() {
        let degrees = vec![3, 3, 2, 2, 2, 1, 1];
        let net = generate_network(&spec(ModelFamily::Configuration { degrees: degrees.clone() }, 7))
            .unwrap();
        let got: Vec<usize> = metrics::degrees(&net).iter().map(|d| d.degree).collect();
        assert_eq!(got, degrees);
    }

    #[test]
    fn invalid_parameters_named() {
        let err = generate_network(&spec(ModelFamily::RingRewire { k: 5, p: 0.1 }, 10)).unwrap_err();
        assert!(err.to_string().contains("k must be even"));
        let err = generate_network(&spec(ModelFamily::UniformRandom { p: 1.5 }, 10)).unwrap_err();
        assert!(err.to_string().contains("p must lie"));
        let err = generate_network(&spec(ModelFamily::Configuration { degrees: vec![3, 1, 1] }, 3))
            .unwrap_err();
        assert!(err.to_string().contains("not graphical"));
        let err = generate_network(&spec(ModelFamily::PreferentialAttachment { m: 0 }, 5)).unwrap_err();
        assert!(err.to_string().contains("1 <= m"));
    }

    #[test]
    fn two_node_walk_alternates() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 1).add_transfer("B", "A", 1);
        let net = b.build().unwrap();
        let (journeys, stats) =
            generate_event_log(&net, 20, LengthDistribution::Fixed { stops: 3 }, 4).unwrap();
        assert_eq!(stats.transfers, 40);
        for j in journeys {
            assert!(j.stops == ["A", "B", "A"] || j.stops == ["B", "A", "B"]);
        }
    }

    #[test]
    fn zero_journeys() {
        let net = generate_network(&spec(ModelFamily::RingRewire { k: 2, p: 0.0 }, 5)).unwrap();
        let (journeys, stats) = generate_event_log(&net, 0, Default::default(), 1).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(stats, WalkStats::default());
    }

    #[test]
    fn dead_end_truncates() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 1);
        let net = b.build().unwrap();
        let (journeys, stats) =
            generate_event_log(&net, 5, LengthDistribution::Fixed { stops: 4 }, 2).unwrap();
        assert_eq!(stats.truncated, 5);
        assert!(journeys.iter().all(|j| j.stops == ["A", "B"]));
    }

    #[test]
    fn labels_sort_numerically() {
        let labels = node_labels(120);
        assert_eq!(labels[7], "v007");
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
    }
}
