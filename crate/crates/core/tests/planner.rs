use std::sync::Arc;

use nliconquer::nli::SciStore;
use nliconquer::phys::{Channel, ChannelConfig, FiberParams, LinkConfig, Modulation};
use nliconquer::planner::{
    generate_traffic, plan, required_snr, rmsa_place, Network, Topology, TopologyLink, TrafficMatrix,
    PLANNING_MARGIN_DB,
};
use nliconquer::qot::Estimator;
use proptest::prelude::*;

fn gn() -> Estimator {
    Estimator::closed_form(FiberParams::default())
}

fn oracle() -> Estimator {
    Estimator::oracle(Arc::new(SciStore::in_memory(FiberParams::default())))
}

fn two_nodes(length_km: f64) -> Topology {
    let json = format!(
        r#"{{"name": "pair", "nodes": ["A", "B"], "links": [{{"a": "A", "b": "B", "length_km": {length_km}, "span_km": 80.0}}]}}"#
    );
    Topology::from_json(&json).unwrap()
}

#[test]
fn short_path_gets_one_400g_lightpath() {
    let mut net = Network::new(two_nodes(80.0));
    let out = rmsa_place(&mut net, ("A", "B"), 400, 1, &gn()).unwrap();
    assert!(out.blocked.is_none());
    assert_eq!(out.lightpaths.len(), 1);
    assert_eq!(out.lightpaths[0].config.data_rate_gbps, 400);
    assert_eq!(out.lightpaths[0].start_slot, 0);
}

#[test]
fn zero_deficit_places_nothing() {
    let mut net = Network::new(two_nodes(80.0));
    let out = rmsa_place(&mut net, ("A", "B"), 0, 1, &gn()).unwrap();
    assert!(out.lightpaths.is_empty() && out.blocked.is_none());
}

/// SNR of channel 0 on a single-link path, optionally with a neighbour.
fn snr_with(length_km: f64, victim: &Channel, other: Option<&Channel>) -> f64 {
    let t = two_nodes(length_km);
    let l = &t.links[0];
    let mut channels = vec![victim.clone()];
    channels.extend(other.cloned());
    let link = LinkConfig::new(l.span_length_km(), l.span_count(), channels).unwrap();
    gn().snr_db(&link, 0).unwrap()
}

#[test]
fn fragile_neighbour_rejects_adjacent_slot() {
    let qam = ChannelConfig::new(Modulation::Qam16, 400).unwrap();
    let qpsk = ChannelConfig::new(Modulation::Qpsk, 100).unwrap();
    let victim = Channel::new(qam, 0);
    let need = required_snr(Modulation::Qam16) + PLANNING_MARGIN_DB;
    let adjacent = Channel::new(qpsk, victim.end_slot());
    // A length where the 400G channel meets its threshold alone but not
    // with a QPSK channel right next to it.
    let length = (16..1000)
        .map(|i| i as f64 * 5.0)
        .find(|&l| snr_with(l, &victim, None) >= need && snr_with(l, &victim, Some(&adjacent)) < need)
        .expect("a near-threshold length exists");

    let mut net = Network::new(two_nodes(length));
    let first = rmsa_place(&mut net, ("A", "B"), 400, 1, &gn()).unwrap();
    assert_eq!(first.lightpaths.len(), 1);
    assert_eq!(first.lightpaths[0].config, qam);
    assert_eq!(first.lightpaths[0].start_slot, 0);

    let second = rmsa_place(&mut net, ("A", "B"), 100, 1, &gn()).unwrap();
    assert!(second.blocked.is_none());
    let lp = &second.lightpaths[0];
    assert_eq!(lp.config, qpsk);
    assert!(lp.start_slot > adjacent.start_slot, "placed at {}", lp.start_slot);
    assert!(snr_with(length, &victim, Some(&lp.channel())) >= need);
    let own_need = required_snr(Modulation::Qpsk) + PLANNING_MARGIN_DB;
    assert!(snr_with(length, &adjacent, Some(&victim)) >= own_need);
}

#[test]
fn zero_traffic_zero_lightpaths() {
    let t = Topology::nordunet();
    let r = plan(&t, &TrafficMatrix::zero(&t.pairs, 3), &gn(), &oracle()).unwrap();
    assert_eq!(r.total_lightpaths(), 0);
    assert!(r.satisfaction.iter().all(|s| s.satisfied));
    assert!(r.per_year.iter().all(|y| y.total_lightpaths == 0));
}

#[test]
fn verification_needs_the_oracle() {
    let t = Topology::nordunet();
    assert!(plan(&t, &generate_traffic(&t.pairs, 1, 1), &gn(), &gn()).is_err());
}

#[test]
fn bad_topologies_are_rejected() {
    assert!(Topology::from_json(r#"{"name": "x", "nodes": ["A", "B", "C"], "links": [{"a": "A", "b": "B", "length_km": 80.0}]}"#).is_err());
    assert!(Topology::from_json(r#"{"name": "x", "nodes": ["A"], "links": [{"a": "A", "b": "Z", "length_km": 80.0}]}"#).is_err());
}

#[test]
fn topology_json_round_trip() {
    let t = Topology::nordunet();
    let back = Topology::from_json(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(back, t);
    let l = TopologyLink {
        a: "A".into(),
        b: "B".into(),
        length_km: 250.0,
        span_km: 80.0,
        slots: 400,
    };
    assert_eq!(l.span_count(), 4);
    assert!((l.span_length_km() - 62.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn plans_keep_accounting_identities(seed in 0u64..1000, years in 1usize..4) {
        let t = Topology::nordunet();
        let traffic = generate_traffic(&t.pairs, years, seed);
        let o = oracle();
        let r = plan(&t, &traffic, &gn(), &o).unwrap();
        prop_assert_eq!(&r, &plan(&t, &traffic, &gn(), &o).unwrap());

        // Continuity is implicit (one slot range per lightpath); check
        // non-overlap on every link.
        for link in 0..t.links.len() {
            let mut on: Vec<Channel> = r.lightpaths.iter().filter(|lp| lp.path.contains(&link)).map(|lp| lp.channel()).collect();
            on.sort_by_key(|c| c.start_slot);
            prop_assert!(on.windows(2).all(|w| w[0].end_slot() <= w[1].start_slot));
        }
        for s in &r.satisfaction {
            let provisioned: u32 = r
                .lightpaths
                .iter()
                .filter(|lp| lp.pair == s.pair && lp.year <= s.year)
                .map(|lp| lp.config.data_rate_gbps)
                .sum();
            prop_assert_eq!(provisioned, s.provisioned_gbps);
            prop_assert_eq!(s.satisfied, provisioned >= s.requested_gbps);
        }
        prop_assert!(r.per_year.windows(2).all(|w| w[0].total_lightpaths <= w[1].total_lightpaths));
        prop_assert_eq!(r.per_year.last().map_or(0, |y| y.total_lightpaths), r.total_lightpaths());
        prop_assert_eq!(r.per_config.values().sum::<usize>(), r.total_lightpaths());
        prop_assert_eq!(r.oracle_checks.len(), r.total_lightpaths());
        for lp in &r.lightpaths {
            prop_assert!(lp.estimated_snr_db >= lp.threshold_db + PLANNING_MARGIN_DB);
        }
    }

    #[test]
    fn traffic_rows_never_shrink(seed in any::<u64>(), years in 1usize..8) {
        let t = Topology::nordunet();
        let m = generate_traffic(&t.pairs, years, seed);
        prop_assert_eq!(&m, &generate_traffic(&t.pairs, years, seed));
        for row in &m.gbps {
            prop_assert_eq!(row.len(), years);
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(row.iter().all(|v| v % 50 == 0));
        }
    }
}
