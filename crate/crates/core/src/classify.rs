//! Hub/bottleneck quadrants and distributor/receiver roles.

use serde::Serialize;
use thiserror::Error;

use crate::metrics::NodeMetrics;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("quantile must lie in (0, 1], got {0}")]
    InvalidQuantile(f64),
    #[error("need at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrant {
    HubBottleneck,
    HubNonBottleneck,
    NonHubBottleneck,
    Neither,
}

impl Quadrant {
    pub fn new(hub: bool, bottleneck: bool) -> Self {
        match (hub, bottleneck) {
            (true, true) => Quadrant::HubBottleneck,
            (true, false) => Quadrant::HubNonBottleneck,
            (false, true) => Quadrant::NonHubBottleneck,
            (false, false) => Quadrant::Neither,
        }
    }

    pub fn is_hub(self) -> bool {
        matches!(self, Quadrant::HubBottleneck | Quadrant::HubNonBottleneck)
    }

    pub fn is_bottleneck(self) -> bool {
        matches!(self, Quadrant::HubBottleneck | Quadrant::NonHubBottleneck)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeQuadrant {
    pub label: String,
    pub degree: usize,
    pub betweenness: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HubBottleneckTable {
    pub quantile: f64,
    pub degree_threshold: f64,
    pub betweenness_threshold: f64,
    pub nodes: Vec<NodeQuadrant>,
}

/// Nearest-rank upper quantile: the value at descending rank `ceil(qN)`.
pub fn upper_threshold(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let count = ((q * values.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[count.min(sorted.len()) - 1]
}

/// `value >= threshold`, with ties absorbing float noise from betweenness sums.
fn at_or_above(value: f64, threshold: f64) -> bool {
    value >= threshold - 1e-12 * threshold.abs()
}

pub fn classify_hubs_bottlenecks(
    nodes: &[NodeMetrics],
    quantile: f64,
) -> Result<HubBottleneckTable, ClassifyError> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(ClassifyError::InvalidQuantile(quantile));
    }
    if nodes.is_empty() {
        return Err(ClassifyError::TooFewNodes { needed: 1, got: 0 });
    }
    let degree: Vec<f64> = nodes.iter().map(|m| m.degree as f64).collect();
    let between: Vec<f64> = nodes.iter().map(|m| m.betweenness).collect();
    let degree_threshold = upper_threshold(&degree, quantile);
    let betweenness_threshold = upper_threshold(&between, quantile);
    let nodes = nodes
        .iter()
        .map(|m| NodeQuadrant {
            label: m.label.clone(),
            degree: m.degree,
            betweenness: m.betweenness,
            quadrant: Quadrant::new(
                m.degree as f64 >= degree_threshold,
                at_or_above(m.betweenness, betweenness_threshold),
            ),
        })
        .collect();
    Ok(HubBottleneckTable {
        quantile,
        degree_threshold,
        betweenness_threshold,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Distributor,
    Receiver,
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRole {
    pub label: String,
    pub net_connectivity: i64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoleTable {
    pub threshold_sd: f64,
    /// Sample standard deviation of net connectivity.
    pub sd: f64,
    /// Cut in net-connectivity units.
    pub threshold: f64,
    pub nodes: Vec<NodeRole>,
}

/// Distributors send far more than they receive (net connectivity at or
/// below `-threshold_sd` standard deviations), receivers the reverse.
pub fn label_distributors_receivers(
    nodes: &[NodeMetrics],
    threshold_sd: f64,
) -> Result<RoleTable, ClassifyError> {
    if nodes.len() < 2 {
        return Err(ClassifyError::TooFewNodes {
            needed: 2,
            got: nodes.len(),
        });
    }
    let n = nodes.len() as f64;
    let net: Vec<f64> = nodes.iter().map(|m| m.net_connectivity as f64).collect();
    let mean = net.iter().sum::<f64>() / n;
    let sd = (net.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let threshold = threshold_sd * sd;
    let nodes = nodes
        .iter()
        .map(|m| {
            let v = m.net_connectivity as f64;
            let role = if sd == 0.0 {
                Role::Balanced
            } else if v <= -threshold {
                Role::Distributor
            } else if v >= threshold {
                Role::Receiver
            } else {
                Role::Balanced
            };
            NodeRole {
                label: m.label.clone(),
                net_connectivity: m.net_connectivity,
                role,
            }
        })
        .collect();
    Ok(RoleTable {
        threshold_sd,
        sd,
        threshold,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(label: &str, degree: usize, betweenness: f64, net: i64) -> NodeMetrics {
        NodeMetrics {
            label: label.to_string(),
            degree,
            in_degree: 0,
            out_degree: 0,
            net_connectivity: net,
            strength: 0,
            in_strength: 0,
            out_strength: 0,
            clustering: 0.0,
            betweenness,
            knn_weighted: None,
        }
    }

    fn quadrants(t: &HubBottleneckTable) -> Vec<Quadrant> {
        t.nodes.iter().map(|n| n.quadrant).collect()
    }

    #[test]
    fn five_distinct_nodes() {
        let nodes = [
            node("a", 1, 0.5, 0),
            node("b", 5, 0.1, 0),
            node("c", 3, 0.2, 0),
            node("d", 2, 0.3, 0),
            node("e", 4, 0.0, 0),
        ];
        let t = classify_hubs_bottlenecks(&nodes, 0.2).unwrap();
        assert_eq!(t.degree_threshold, 5.0);
        assert_eq!(t.betweenness_threshold, 0.5);
        use Quadrant::*;
        assert_eq!(
            quadrants(&t),
            [NonHubBottleneck, HubNonBottleneck, Neither, Neither, Neither]
        );
    }

    #[test]
    fn identical_nodes_all_qualify() {
        let nodes: Vec<_> = (0..6).map(|i| node(&format!("n{i}"), 3, 0.25, 0)).collect();
        let t = classify_hubs_bottlenecks(&nodes, 0.2).unwrap();
        assert!(quadrants(&t).iter().all(|&q| q == Quadrant::HubBottleneck));
    }

    #[test]
    fn quantile_bounds() {
        let nodes = [node("a", 1, 0.0, 0)];
        assert!(classify_hubs_bottlenecks(&nodes, 0.0).is_err());
        assert!(classify_hubs_bottlenecks(&nodes, 1.5).is_err());
        assert!(classify_hubs_bottlenecks(&nodes, 1.0).is_ok());
    }

    #[test]
    fn lone_distributor() {
        let mut nodes = vec![node("hub", 10, 0.0, -10)];
        nodes.extend((0..10).map(|i| node(&format!("n{i}"), 2, 0.0, 0)));
        let t = label_distributors_receivers(&nodes, 2.0).unwrap();
        // sample sd of {-10, 0 x10} = sqrt(100/11)
        assert!((t.sd - (100.0f64 / 11.0).sqrt()).abs() < 1e-12);
        assert_eq!(t.nodes[0].role, Role::Distributor);
        assert!(t.nodes[1..].iter().all(|n| n.role == Role::Balanced));
    }

    #[test]
    fn balanced_network() {
        let nodes: Vec<_> = (0..4).map(|i| node(&format!("n{i}"), 2, 0.0, 0)).collect();
        let t = label_distributors_receivers(&nodes, 2.0).unwrap();
        assert_eq!(t.sd, 0.0);
        assert!(t.nodes.iter().all(|n| n.role == Role::Balanced));
        assert!(label_distributors_receivers(&nodes[..1], 2.0).is_err());
    }
}
