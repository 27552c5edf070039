use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use wardflow::classify::classify_hubs_bottlenecks;
use wardflow::metrics::node_metrics;
use wardflow::powerlaw::{fit_with_bootstrap, XminPolicy};
use wardflow::resilience::{attack, AttackStrategy, RecomputePolicy};
use wardflow::smallworld::{small_world_report, SmallWorldConfig};
use wardflow::synth::{generate_event_log, generate_network, LengthDistribution, ModelFamily, ModelSpec};
use wardflow::{build_network, NetworkBuilder, TransferNetwork};

fn arb_network() -> impl Strategy<Value = TransferNetwork> {
    (3usize..14)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n, 1u64..6), 1..(n * 3)),
            )
        })
        .prop_map(|(n, edges)| {
            let mut b = NetworkBuilder::new(true);
            for i in 0..n {
                b.add_node(format!("w{i:02}"));
            }
            for (u, v, w) in edges {
                if u != v {
                    b.add_transfer(&format!("w{u:02}"), &format!("w{v:02}"), w);
                }
            }
            b.build().unwrap()
        })
}

fn hubs(net: &TransferNetwork, q: f64, weighted: bool) -> (BTreeSet<String>, BTreeSet<String>) {
    let t = classify_hubs_bottlenecks(&node_metrics(net, weighted), q).unwrap();
    let hub = t.nodes.iter().filter(|n| n.quadrant.is_hub()).map(|n| n.label.clone()).collect();
    let bot = t.nodes.iter().filter(|n| n.quadrant.is_bottleneck()).map(|n| n.label.clone()).collect();
    (hub, bot)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_ignores_weight_scale(net in arb_network(), factor in 2u64..9, weighted: bool) {
        let scaled = net.scaled(factor);
        let a = classify_hubs_bottlenecks(&node_metrics(&net, weighted), 0.2).unwrap();
        let b = classify_hubs_bottlenecks(&node_metrics(&scaled, weighted), 0.2).unwrap();
        let qa: Vec<_> = a.nodes.iter().map(|n| n.quadrant).collect();
        let qb: Vec<_> = b.nodes.iter().map(|n| n.quadrant).collect();
        prop_assert_eq!(qa, qb);
    }

    #[test]
    fn larger_quantile_never_drops_a_hub(net in arb_network(), q1 in 0.05f64..0.5, dq in 0.0f64..0.5) {
        let (h1, b1) = hubs(&net, q1, false);
        let (h2, b2) = hubs(&net, (q1 + dq).min(1.0), false);
        prop_assert!(h1.is_subset(&h2));
        prop_assert!(b1.is_subset(&b2));
    }

    #[test]
    fn attack_curves_are_monotone_and_bounded(net in arb_network(), seed: u64, adaptive: bool) {
        let policy = if adaptive { RecomputePolicy::Adaptive } else { RecomputePolicy::Static };
        for strategy in [AttackStrategy::Random { seed }, AttackStrategy::Degree, AttackStrategy::Betweenness] {
            let r = attack(&net, &strategy, 0.1, policy).unwrap();
            let steps = &r.steps;
            prop_assert_eq!(steps[0].removed, 0);
            prop_assert_eq!(steps.last().unwrap().removed, net.node_count());
            for s in steps {
                prop_assert!(s.giant_scc <= s.giant_wcc + 1e-12);
                for v in [s.giant_wcc, s.giant_scc, s.efficiency, s.fraction_removed] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(s.giant_wcc <= 1.0 - s.fraction_removed + 1e-12);
            }
            for w in steps.windows(2) {
                prop_assert!(w[1].removed > w[0].removed);
                prop_assert!(w[1].giant_wcc <= w[0].giant_wcc + 1e-12);
                prop_assert!(w[1].giant_scc <= w[0].giant_scc + 1e-12);
                prop_assert!(w[1].efficiency <= w[0].efficiency + 1e-12);
            }
            let area = r.wcc_area();
            prop_assert!((0.0..=1.0).contains(&area));
        }
    }
}

#[test]
fn walk_transition_frequencies_follow_edge_weights() {
    let mut b = NetworkBuilder::new(true);
    for (u, v, w) in [
        ("a", "b", 1),
        ("a", "c", 3),
        ("b", "c", 2),
        ("b", "a", 2),
        ("c", "a", 5),
        ("c", "b", 1),
        ("c", "d", 4),
        ("d", "a", 1),
    ] {
        b.add_transfer(u, v, w);
    }
    let net = b.build().unwrap();
    let (journeys, stats) = generate_event_log(&net, 20_000, LengthDistribution::Fixed { stops: 6 }, 11).unwrap();
    assert_eq!(stats.truncated, 0);
    let observed = build_network(&journeys);
    for u in 0..net.node_count() {
        let label = net.label(u);
        let out: u64 = net.out_neighbors(u).iter().map(|&(_, w)| w).sum();
        let seen: u64 = observed.out_neighbors(observed.index_of(label).unwrap()).iter().map(|&(_, w)| w).sum();
        for &(v, w) in net.out_neighbors(u) {
            let expected = w as f64 / out as f64;
            let got = observed.weight_by_label(label, net.label(v)).unwrap_or(0) as f64 / seen as f64;
            assert!(
                (got - expected).abs() <= 0.05 * expected,
                "{label}->{}: {got:.4} vs {expected:.4}",
                net.label(v)
            );
        }
    }
}

#[test]
fn synthetic_logs_only_use_model_edges() {
    let families = [
        ModelFamily::RingRewire { k: 4, p: 0.2 },
        ModelFamily::PreferentialAttachment { m: 2 },
        ModelFamily::UniformRandom { p: 0.08 },
        ModelFamily::Configuration { degrees: vec![3; 40] },
    ];
    for family in families {
        let spec = ModelSpec { family: family.clone(), n: 40, seed: 5 };
        let model = generate_network(&spec).unwrap();
        let (journeys, _) = generate_event_log(&model, 5_000, LengthDistribution::default(), 5).unwrap();
        let observed = build_network(&journeys);
        let mut covered = 0;
        for e in observed.edges() {
            let (u, v) = (observed.label(e.source), observed.label(e.target));
            assert!(model.weight_by_label(u, v).is_some(), "{family:?}: {u}-{v} not in model");
        }
        for e in model.edges() {
            let (u, v) = (model.label(e.source), model.label(e.target));
            covered += usize::from(observed.weight_by_label(u, v).is_some());
        }
        // every undirected model edge is walked in at least one direction
        assert_eq!(covered, model.edge_count(), "{family:?}");
    }
}

#[test]
fn preferential_attachment_tail_is_heavy() {
    let net = generate_network(&ModelSpec {
        family: ModelFamily::PreferentialAttachment { m: 3 },
        n: 20_000,
        seed: 9,
    })
    .unwrap();
    let mut degree: BTreeMap<usize, u64> = BTreeMap::new();
    for e in net.edges() {
        *degree.entry(e.source).or_default() += 1;
        *degree.entry(e.target).or_default() += 1;
    }
    let samples: Vec<u64> = degree.into_values().collect();
    let fit = fit_with_bootstrap(&samples, XminPolicy::Scan, 0, 1, 0.95).unwrap();
    // asymptotic exponent 3
    assert!((2.5..=3.5).contains(&fit.gamma), "gamma {}", fit.gamma);
}

#[test]
fn small_world_estimate_stabilises_with_samples() {
    let net = generate_network(&ModelSpec {
        family: ModelFamily::RingRewire { k: 6, p: 0.1 },
        n: 100,
        seed: 2,
    })
    .unwrap();
    let omega = |n_samples| {
        small_world_report(&net, SmallWorldConfig { n_samples, seed: 17, ..Default::default() })
            .unwrap()
            .omega
            .unwrap()
    };
    let (w10, w50) = (omega(10), omega(50));
    assert!((w10 - w50).abs() < 0.1, "omega 10 samples {w10}, 50 samples {w50}");
}
