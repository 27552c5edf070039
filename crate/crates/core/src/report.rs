//! Full analysis run assembled into one JSON document plus CSV sidecars.
//!
//! Sections appear in a fixed order. A skipped section is left out; a
//! section or value that could not be computed is `null` with a sibling
//! `<name>_reason` string.

use std::collections::BTreeSet;
use std::fmt::{self, Display};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::classify;
use crate::eventlog::IngestStats;
use crate::metrics::{self, NodeMetrics};
use crate::network::TransferNetwork;
use crate::powerlaw::{self, XminPolicy, OUTLIER_THRESHOLD};
use crate::resilience::{self, AttackResult, AttackStrategy, RecomputePolicy};
use crate::seed::derive_seed;
use crate::smallworld::{self, SmallWorldConfig};

pub const TOOL: &str = "wardflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    NodeMetrics,
    NetworkMetrics,
    Fits,
    SmallWorld,
    Classification,
    Resilience,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::NodeMetrics,
        Section::NetworkMetrics,
        Section::Fits,
        Section::SmallWorld,
        Section::Classification,
        Section::Resilience,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Section::NodeMetrics => "node_metrics",
            Section::NetworkMetrics => "network_metrics",
            Section::Fits => "fits",
            Section::SmallWorld => "small_world",
            Section::Classification => "classification",
            Section::Resilience => "resilience",
        }
    }
}

impl Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Section {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('-', "_");
        Section::ALL
            .into_iter()
            .find(|sec| sec.key() == norm)
            .ok_or_else(|| format!("unknown section '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Random,
    Degree,
    Betweenness,
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(AttackKind::Random),
            "degree" => Ok(AttackKind::Degree),
            "betweenness" => Ok(AttackKind::Betweenness),
            other => Err(format!("unknown attack strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub quantile: f64,
    pub n_boot: usize,
    pub ci_level: f64,
    pub xmin_policy: XminPolicy,
    pub sw_samples: usize,
    pub swaps_per_edge: usize,
    pub lattice_swaps_per_edge: usize,
    pub attacks: Vec<AttackKind>,
    pub random_runs: usize,
    pub step_fraction: f64,
    pub recompute_policy: RecomputePolicy,
    pub weighted_betweenness: bool,
    pub role_threshold_sd: f64,
    pub outlier_threshold: f64,
    pub skip: BTreeSet<Section>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let sw = SmallWorldConfig::default();
        AnalysisConfig {
            seed: 0,
            quantile: 0.2,
            n_boot: 200,
            ci_level: 0.95,
            xmin_policy: XminPolicy::Scan,
            sw_samples: sw.n_samples,
            swaps_per_edge: sw.swaps_per_edge,
            lattice_swaps_per_edge: sw.lattice_swaps_per_edge,
            attacks: vec![AttackKind::Random, AttackKind::Degree, AttackKind::Betweenness],
            random_runs: 20,
            step_fraction: 0.05,
            recompute_policy: RecomputePolicy::Adaptive,
            weighted_betweenness: false,
            role_threshold_sd: 2.0,
            outlier_threshold: OUTLIER_THRESHOLD,
            skip: BTreeSet::new(),
        }
    }
}

/// Per-component seeds, all expanded from the master seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedSeeds {
    pub degree_tail: u64,
    pub small_world: u64,
    pub resilience_random: Vec<u64>,
}

impl AnalysisConfig {
    pub fn derived_seeds(&self) -> DerivedSeeds {
        let base = derive_seed(self.seed, "resilience/random");
        DerivedSeeds {
            degree_tail: derive_seed(self.seed, "fits/degree_tail"),
            small_world: derive_seed(self.seed, "small_world"),
            resilience_random: (0..self.random_runs)
                .map(|r| derive_seed(base, &r.to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, bytes: &[u8]) -> Self {
        InputDigest {
            role: role.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// What the analysed network was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    EventLog { stats: IngestStats, categorised: bool },
    NetworkFile { format: String },
}

#[derive(Debug, Clone)]
pub struct Sidecar {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub document: Value,
    pub sidecars: Vec<Sidecar>,
    /// Every requested section came back null.
    pub all_failed: bool,
}

impl AnalysisReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document).expect("report serialises");
        s.push('\n');
        s
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialise")
}

/// Inserts `key: value`, or `key: null` plus `key_reason` on failure.
fn put<T: Serialize, E: Display>(map: &mut Map<String, Value>, key: &str, value: Result<T, E>) -> bool {
    match value {
        Ok(v) => {
            map.insert(key.to_string(), to_value(&v));
            true
        }
        Err(e) => {
            map.insert(key.to_string(), Value::Null);
            map.insert(format!("{key}_reason"), Value::String(e.to_string()));
            false
        }
    }
}

pub fn analyze(
    net: &TransferNetwork,
    provenance: &Provenance,
    inputs: &[InputDigest],
    config: &AnalysisConfig,
) -> AnalysisReport {
    let seeds = config.derived_seeds();
    let wants = |s: Section| !config.skip.contains(&s);
    let mut doc = Map::new();
    let mut sidecars = Vec::new();

    doc.insert("tool".into(), json!(TOOL));
    doc.insert("version".into(), json!(VERSION));
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("inputs".into(), to_value(&inputs));
    let mut cfg = match to_value(config) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    cfg.insert("seeds".into(), to_value(&seeds));
    doc.insert("config".into(), Value::Object(cfg));

    match provenance {
        Provenance::EventLog { stats, .. } => {
            doc.insert("ingest".into(), to_value(stats));
        }
        Provenance::NetworkFile { format } => {
            doc.insert("ingest".into(), Value::Null);
            doc.insert(
                "ingest_reason".into(),
                json!(format!("input is a {format} network file, not an event log")),
            );
        }
    }
    doc.insert(
        "network".into(),
        json!({
            "directed": net.is_directed(),
            "nodes": net.node_count(),
            "edges": net.edge_count(),
            "total_weight": net.total_weight(),
            "categorised": matches!(provenance, Provenance::EventLog { categorised: true, .. })
                || !net.categories().is_empty(),
        }),
    );

    let needs_nodes = wants(Section::NodeMetrics) || wants(Section::Fits) || wants(Section::Classification);
    let nodes: Vec<NodeMetrics> = if needs_nodes {
        metrics::node_metrics(net, config.weighted_betweenness)
    } else {
        Vec::new()
    };
    let mut requested = 0;
    let mut succeeded = 0;
    let mut tally = |ok: bool| {
        requested += 1;
        succeeded += usize::from(ok);
    };

    if wants(Section::NodeMetrics) {
        doc.insert("node_metrics".into(), to_value(&nodes));
        tally(true);
    }

    if wants(Section::NetworkMetrics) {
        let (m, dist) = network_metrics_section(net);
        sidecars.push(Sidecar {
            name: "degree_distribution.csv".into(),
            contents: dist,
        });
        doc.insert("network_metrics".into(), Value::Object(m));
        tally(true);
    }

    if wants(Section::Fits) {
        let (fits, any, knn_csv) = fits_section(net, &nodes, config, seeds.degree_tail);
        if let Some(csv) = knn_csv {
            sidecars.push(Sidecar {
                name: "knn_curve.csv".into(),
                contents: csv,
            });
        }
        doc.insert("fits".into(), Value::Object(fits));
        tally(any);
    }

    if wants(Section::SmallWorld) {
        let sw = smallworld::small_world_report(
            net,
            SmallWorldConfig {
                n_samples: config.sw_samples,
                swaps_per_edge: config.swaps_per_edge,
                lattice_swaps_per_edge: config.lattice_swaps_per_edge,
                seed: seeds.small_world,
            },
        );
        tally(put(&mut doc, "small_world", sw));
    }

    if wants(Section::Classification) {
        let mut c = Map::new();
        let a = put(
            &mut c,
            "hubs_bottlenecks",
            classify::classify_hubs_bottlenecks(&nodes, config.quantile),
        );
        let b = put(
            &mut c,
            "roles",
            classify::label_distributors_receivers(&nodes, config.role_threshold_sd),
        );
        doc.insert("classification".into(), Value::Object(c));
        tally(a || b);
    }

    if wants(Section::Resilience) {
        match resilience_section(net, config, &seeds) {
            Ok((value, curves)) => {
                doc.insert("resilience".into(), value);
                sidecars.extend(curves);
                tally(true);
            }
            Err(e) => tally(put::<(), _>(&mut doc, "resilience", Err(e))),
        }
    }

    AnalysisReport {
        document: Value::Object(doc),
        sidecars,
        all_failed: requested > 0 && succeeded == 0,
    }
}

fn network_metrics_section(net: &TransferNetwork) -> (Map<String, Value>, String) {
    let m = metrics::network_metrics(net);
    let mut out = Map::new();
    out.insert("node_count".into(), json!(m.node_count));
    out.insert("edge_count".into(), json!(m.edge_count));
    out.insert("total_weight".into(), json!(m.total_weight));
    put(&mut out, "mean_edge_weight", m.mean_edge_weight);
    put(&mut out, "reciprocity", m.reciprocity);
    put(&mut out, "flow_hierarchy", m.flow_hierarchy);
    out.insert("clustering_average".into(), json!(m.global_clustering));
    out.insert("transitivity".into(), json!(m.transitivity));
    for (key, path) in [
        ("avg_shortest_path_directed", m.avg_shortest_path),
        ("avg_shortest_path_undirected", m.avg_shortest_path_undirected),
    ] {
        let coverage = path.as_ref().map(|p| p.coverage).map_err(Clone::clone);
        put(&mut out, key, path.map(|p| p.mean));
        put(&mut out, &format!("{key}_coverage"), coverage);
    }
    put(&mut out, "assortativity", m.assortativity);
    put(&mut out, "assortativity_undirected", m.assortativity_undirected);

    let mut csv = String::from("degree,fraction\n");
    for (k, p) in &m.degree_distribution {
        csv.push_str(&format!("{k},{p}\n"));
    }
    out.insert(
        "degree_distribution".into(),
        Value::Array(
            m.degree_distribution
                .iter()
                .map(|(k, p)| json!({"degree": k, "fraction": p}))
                .collect(),
        ),
    );
    (out, csv)
}

fn fits_section(
    net: &TransferNetwork,
    nodes: &[NodeMetrics],
    config: &AnalysisConfig,
    tail_seed: u64,
) -> (Map<String, Value>, bool, Option<String>) {
    let mut out = Map::new();
    let degrees: Vec<u64> = nodes
        .iter()
        .map(|m| m.degree as u64)
        .filter(|&k| k > 0)
        .collect();
    let tail = powerlaw::fit_with_bootstrap(
        &degrees,
        config.xmin_policy,
        config.n_boot,
        tail_seed,
        config.ci_level,
    );
    let mut any = put(&mut out, "degree_tail", tail);
    any |= put(
        &mut out,
        "strength_degree",
        powerlaw::fit_strength_degree(net, config.outlier_threshold),
    );
    any |= put(
        &mut out,
        "betweenness_degree",
        powerlaw::fit_betweenness_degree(nodes, config.outlier_threshold),
    );
    let knn = metrics::knn(net);
    let csv = knn.as_ref().ok().map(|k| {
        let mut s = String::from("degree,mean_knn,nodes\n");
        for p in &k.curve {
            s.push_str(&format!("{},{},{}\n", p.degree, p.mean_knn, p.nodes));
        }
        s
    });
    any |= put(
        &mut out,
        "knn_degree",
        knn.map(|k| json!({"fit": k.fit, "curve": k.curve})),
    );
    (out, any, csv)
}

fn resilience_section(
    net: &TransferNetwork,
    config: &AnalysisConfig,
    seeds: &DerivedSeeds,
) -> Result<(Value, Vec<Sidecar>), resilience::ResilienceError> {
    let mut attacks = Vec::new();
    let mut sidecars = Vec::new();
    let mut ensemble = Value::Null;
    let curve = |r: &AttackResult, name: &str| {
        let mut buf = Vec::new();
        r.write_csv(&mut buf).expect("in-memory csv");
        Sidecar {
            name: format!("attack_{name}.csv"),
            contents: String::from_utf8(buf).expect("utf-8 csv"),
        }
    };
    let entry = |r: &AttackResult| {
        let mut v = to_value(r);
        v["wcc_area"] = json!(r.wcc_area());
        v
    };
    for kind in &config.attacks {
        match kind {
            AttackKind::Random => {
                let runs = seeds
                    .resilience_random
                    .iter()
                    .map(|&seed| {
                        resilience::attack(
                            net,
                            &AttackStrategy::Random { seed },
                            config.step_fraction,
                            RecomputePolicy::Static,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(first) = runs.first() {
                    attacks.push(entry(first));
                    sidecars.push(curve(first, "random"));
                }
                let areas: Vec<f64> = runs.iter().map(AttackResult::wcc_area).collect();
                let mean = (!areas.is_empty()).then(|| areas.iter().sum::<f64>() / areas.len() as f64);
                ensemble = json!({
                    "runs": runs.len(),
                    "wcc_areas": areas,
                    "mean_wcc_area": mean,
                });
            }
            AttackKind::Degree | AttackKind::Betweenness => {
                let (strategy, name) = if *kind == AttackKind::Degree {
                    (AttackStrategy::Degree, "degree")
                } else {
                    (AttackStrategy::Betweenness, "betweenness")
                };
                let r = resilience::attack(net, &strategy, config.step_fraction, config.recompute_policy)?;
                attacks.push(entry(&r));
                sidecars.push(curve(&r, name));
            }
        }
    }
    Ok((
        json!({
            "step_fraction": config.step_fraction,
            "attacks": attacks,
            "random_ensemble": ensemble,
        }),
        sidecars,
    ))
}
