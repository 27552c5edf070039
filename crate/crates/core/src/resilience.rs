//! Node-removal attacks and the connectivity curves they produce.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics;
use crate::network::TransferNetwork;
use crate::seed::stream_rng;
use crate::traversal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResilienceError {
    #[error("step fraction must lie in (0, 1], got {0}")]
    InvalidStep(f64),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("unknown node in removal list: {0}")]
    UnknownNode(String),
    #[error("node listed twice in removal list: {0}")]
    DuplicateNode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackStrategy {
    Random { seed: u64 },
    Degree,
    Betweenness,
    Explicit { order: Vec<String> },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::Random { .. } => "random",
            AttackStrategy::Degree => "degree",
            AttackStrategy::Betweenness => "betweenness",
            AttackStrategy::Explicit { .. } => "explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecomputePolicy {
    Static,
    #[default]
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackStep {
    pub removed: usize,
    pub fraction_removed: f64,
    pub giant_wcc: f64,
    pub giant_scc: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub strategy: AttackStrategy,
    pub policy: RecomputePolicy,
    pub step_fraction: f64,
    pub step_size: usize,
    pub steps: Vec<AttackStep>,
}

impl AttackResult {
    /// Trapezoid area under the giant-WCC curve against fraction removed.
    pub fn wcc_area(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| (w[1].fraction_removed - w[0].fraction_removed) * (w[0].giant_wcc + w[1].giant_wcc) / 2.0)
            .sum()
    }

    /// Plot-ready `fraction,wcc,scc,efficiency` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fraction", "wcc", "scc", "efficiency"])?;
        for s in &self.steps {
            w.write_record([
                s.fraction_removed.to_string(),
                s.giant_wcc.to_string(),
                s.giant_scc.to_string(),
                s.efficiency.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Graph {
    n: usize,
    directed: bool,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    undirected: Vec<Vec<usize>>,
}

impl Graph {
    fn new(net: &TransferNetwork) -> Self {
        let out = net.out_adjacency();
        let mut inn = vec![Vec::new(); out.len()];
        for (u, list) in out.iter().enumerate() {
            for &v in list {
                inn[v].push(u);
            }
        }
        Graph {
            n: out.len(),
            directed: net.is_directed(),
            undirected: net.undirected_adjacency(),
            out,
            inn,
        }
    }

    fn measure(&self, alive: &[bool], removed: usize) -> AttackStep {
        let n = self.n;
        let wcc = traversal::largest_component(&traversal::connected_components(&self.undirected, Some(alive)));
        let scc = traversal::largest_component(&traversal::strongly_connected(&self.out, Some(alive)));
        let per_source: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                if !alive[s] {
                    return 0.0;
                }
                traversal::bfs_distances(&self.out, s, Some(alive))
                    .iter()
                    .filter(|&&d| d != 0 && d != usize::MAX)
                    .map(|&d| 1.0 / d as f64)
                    .sum()
            })
            .collect();
        let pairs = (n * (n - 1)) as f64;
        AttackStep {
            removed,
            fraction_removed: removed as f64 / n as f64,
            giant_wcc: wcc.len() as f64 / n as f64,
            giant_scc: scc.len() as f64 / n as f64,
            efficiency: per_source.iter().sum::<f64>() / pairs,
        }
    }

    fn degree_scores(&self, alive: &[bool]) -> Vec<f64> {
        let count = |l: &[usize]| l.iter().filter(|&&w| alive[w]).count();
        (0..self.n)
            .map(|v| {
                if self.directed {
                    (count(&self.out[v]) + count(&self.inn[v])) as f64
                } else {
                    count(&self.out[v]) as f64
                }
            })
            .collect()
    }

    fn betweenness_scores(&self, alive: &[bool]) -> Vec<f64> {
        let masked: Vec<Vec<usize>> = (0..self.n)
            .map(|v| {
                if alive[v] {
                    self.out[v].iter().copied().filter(|&w| alive[w]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        metrics::betweenness_of(&masked)
    }
}

/// Alive nodes by descending score, ties by index.
fn ranked(scores: &[f64], alive: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&v| alive[v]).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Removes nodes in `step_size` batches, where `step_size = max(1,
/// ceil(step_fraction * n))`, recording giant WCC/SCC fractions and global
/// efficiency (normalised by the intact node count) after every batch.
pub fn attack(
    net: &TransferNetwork,
    strategy: &AttackStrategy,
    step_fraction: f64,
    policy: RecomputePolicy,
) -> Result<AttackResult, ResilienceError> {
    if !(step_fraction > 0.0 && step_fraction <= 1.0) {
        return Err(ResilienceError::InvalidStep(step_fraction));
    }
    let n = net.node_count();
    if n < 2 {
        return Err(ResilienceError::TooFewNodes(n));
    }
    let step_size = ((step_fraction * n as f64 - 1e-9).ceil() as usize).max(1);
    let graph = Graph::new(net);

    let fixed_order: Option<Vec<usize>> = match strategy {
        AttackStrategy::Random { seed } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream_rng(*seed, 0));
            Some(order)
        }
        AttackStrategy::Explicit { order } => {
            let mut seen = vec![false; n];
            let mut idx = Vec::with_capacity(order.len());
            for label in order {
                let v = net
                    .index_of(label)
                    .ok_or_else(|| ResilienceError::UnknownNode(label.clone()))?;
                if std::mem::replace(&mut seen[v], true) {
                    return Err(ResilienceError::DuplicateNode(label.clone()));
                }
                idx.push(v);
            }
            Some(idx)
        }
        AttackStrategy::Degree | AttackStrategy::Betweenness if policy == RecomputePolicy::Static => {
            let all = vec![true; n];
            Some(ranked(&score(&graph, strategy, &all), &all))
        }
        _ => None,
    };

    let mut alive = vec![true; n];
    let mut removed = 0;
    let mut steps = vec![graph.measure(&alive, 0)];
    let total = fixed_order.as_ref().map_or(n, Vec::len);
    while removed < total {
        let batch: Vec<usize> = match &fixed_order {
            Some(order) => order[removed..(removed + step_size).min(total)].to_vec(),
            None => ranked(&score(&graph, strategy, &alive), &alive)
                .into_iter()
                .take(step_size)
                .collect(),
        };
        for v in &batch {
            alive[*v] = false;
        }
        removed += batch.len();
        steps.push(graph.measure(&alive, removed));
    }
    Ok(AttackResult {
        strategy: strategy.clone(),
        policy,
        step_fraction,
        step_size,
        steps,
    })
}

fn score(graph: &Graph, strategy: &AttackStrategy, alive: &[bool]) -> Vec<f64> {
    match strategy {
        AttackStrategy::Betweenness => graph.betweenness_scores(alive),
        _ => graph.degree_scores(alive),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;

    fn net(directed: bool, edges: &[(&str, &str)]) -> TransferNetwork {
        let mut b = NetworkBuilder::new(directed);
        for &(u, v) in edges {
            b.add_transfer(u, v, 1);
        }
        b.build().unwrap()
    }

    fn cycle(n: usize) -> TransferNetwork {
        let labels: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        let edges: Vec<(&str, &str)> = (0..n).map(|i| (labels[i].as_str(), labels[(i + 1) % n].as_str())).collect();
        net(true, &edges)
    }

    #[test]
    fn star_hub_removal_isolates_leaves() {
        let star = net(false, &[("h", "a"), ("h", "b"), ("h", "c"), ("h", "d"), ("h", "e")]);
        for policy in [RecomputePolicy::Static, RecomputePolicy::Adaptive] {
            let r = attack(&star, &AttackStrategy::Degree, 0.05, policy).unwrap();
            assert_eq!(r.step_size, 1);
            assert_eq!(r.steps[0].giant_wcc, 1.0);
            assert!((r.steps[1].giant_wcc - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cycle_single_removal() {
        let c = cycle(10);
        for v in 0..10 {
            let order = vec![format!("n{v:02}")];
            let r = attack(&c, &AttackStrategy::Explicit { order }, 0.1, RecomputePolicy::Static).unwrap();
            assert_eq!(r.steps.len(), 2);
            assert!((r.steps[1].giant_wcc - 0.9).abs() < 1e-15);
            // directed cycle loses its only cycle
            assert!((r.steps[1].giant_scc - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn full_permutation_ends_empty() {
        let c = cycle(7);
        let order: Vec<String> = (0..7).rev().map(|i| format!("n{i:02}")).collect();
        let r = attack(&c, &AttackStrategy::Explicit { order }, 0.3, RecomputePolicy::Static).unwrap();
        let last = r.steps.last().unwrap();
        assert_eq!((last.giant_wcc, last.giant_scc, last.efficiency), (0.0, 0.0, 0.0));
        assert_eq!(last.fraction_removed, 1.0);
        assert_eq!(r.step_size, 3);
        assert_eq!(r.steps.iter().map(|s| s.removed).collect::<Vec<_>>(), [0, 3, 6, 7]);
    }

    #[test]
    fn intact_efficiency_of_directed_cycle() {
        // distances 1..n-1 from each source
        let n = 5;
        let r = attack(&cycle(n), &AttackStrategy::Degree, 1.0, RecomputePolicy::Static).unwrap();
        let h: f64 = (1..n).map(|d| 1.0 / d as f64).sum();
        assert!((r.steps[0].efficiency - h / (n - 1) as f64).abs() < 1e-15);
    }

    #[test]
    fn bad_step_and_labels() {
        let c = cycle(4);
        assert_eq!(
            attack(&c, &AttackStrategy::Degree, 0.0, RecomputePolicy::Adaptive),
            Err(ResilienceError::InvalidStep(0.0))
        );
        assert!(attack(&c, &AttackStrategy::Degree, 1.5, RecomputePolicy::Adaptive).is_err());
        let bad = AttackStrategy::Explicit { order: vec!["zz".into()] };
        assert!(matches!(
            attack(&c, &bad, 0.5, RecomputePolicy::Static),
            Err(ResilienceError::UnknownNode(_))
        ));
    }

    #[test]
    fn random_is_seeded() {
        let c = cycle(12);
        let run = |seed| attack(&c, &AttackStrategy::Random { seed }, 0.1, RecomputePolicy::Static).unwrap();
        assert_eq!(run(3), run(3));
        assert_ne!(run(3).steps, run(4).steps);
    }

    #[test]
    fn csv_rows() {
        let r = attack(&cycle(3), &AttackStrategy::Degree, 1.0, RecomputePolicy::Static).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("fraction,wcc,scc,efficiency\n0,1,1,"));
    }
}
