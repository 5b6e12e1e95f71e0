use std::sync::Arc;

use nliconquer::nli::SciStore;
use nliconquer::phys::{Channel, ChannelConfig, FiberParams, Modulation};
use nliconquer::qot::Estimator;
use nliconquer::specopt::{first_fit_place, run_scenario, Placer, ScenarioConfig, Spectrum};
use proptest::prelude::*;

fn qpsk() -> ChannelConfig {
    ChannelConfig::new(Modulation::Qpsk, 100).unwrap()
}

fn oracle() -> Estimator {
    Estimator::oracle(Arc::new(SciStore::in_memory(FiberParams::default())))
}

fn gn() -> Estimator {
    Estimator::closed_form(FiberParams::default())
}

fn configs(layout: &[Channel]) -> Vec<ChannelConfig> {
    let mut v: Vec<ChannelConfig> = layout.iter().map(Channel::config).collect();
    v.sort();
    v
}

#[test]
fn empty_band_takes_the_first_slot() {
    for est in [gn(), oracle()] {
        let p = Placer::new(&est, 80.0, 12);
        assert_eq!(p.optimize_place(&Spectrum::new(400), qpsk()).unwrap(), 0);
    }
}

#[test]
fn lone_centre_channel_pushes_newcomer_to_an_edge() {
    let mut s = Spectrum::new(400);
    s.place(Channel::new(qpsk(), 198)).unwrap();
    let last = 400 - qpsk().slot_count();
    assert_eq!(first_fit_place(&s, qpsk()).unwrap(), 0);
    for est in [gn(), oracle()] {
        let p = Placer::new(&est, 80.0, 12);
        let slot = p.optimize_place(&s, qpsk()).unwrap();
        assert!(slot == 0 || slot == last, "{:?} chose {slot}", est.kind());
        let sweep = p.sweep(&s, qpsk()).unwrap();
        let adjacent = sweep.iter().find(|&&(x, _)| x == 202).unwrap().1;
        let chosen = sweep.iter().find(|&&(x, _)| x == slot).unwrap().1;
        assert!(chosen < adjacent);
    }
}

#[test]
fn full_band_has_no_slot() {
    let mut s = Spectrum::new(8);
    s.place(Channel::new(qpsk(), 0)).unwrap();
    s.place(Channel::new(qpsk(), 4)).unwrap();
    assert!(first_fit_place(&s, qpsk()).is_err());
    assert!(Placer::new(&gn(), 80.0, 1).optimize_place(&s, qpsk()).is_err());
}

#[test]
fn oracle_scenario_bookkeeping_and_gain() {
    let cfg = ScenarioConfig {
        seed: 3,
        span_count: 6,
        fill: 0.12,
        ..ScenarioConfig::default()
    };
    let o = oracle();
    let r = run_scenario(&cfg, &o, &o).unwrap();
    assert!(!r.demands.is_empty());
    assert_eq!(configs(&r.first_fit_layout), configs(&r.optimized_layout));
    let mut demands = r.demands.clone();
    demands.sort();
    assert_eq!(configs(&r.optimized_layout), demands);
    for st in &r.steps {
        assert!(st.chosen_objective <= st.first_fit_objective);
        assert!(st.chosen_slot >= st.first_fit_slot);
    }
    let expected: u64 = r.steps.iter().enumerate().map(|(i, st)| (st.feasible_slots * (i + 1)) as u64).sum();
    assert_eq!(r.nli_computations, expected);
    assert!(r.average_gain_db >= 0.0, "gain {}", r.average_gain_db);
}

#[test]
fn scenario_is_deterministic() {
    let cfg = ScenarioConfig {
        seed: 11,
        fill: 0.3,
        ..ScenarioConfig::default()
    };
    let o = oracle();
    let a = run_scenario(&cfg, &gn(), &o).unwrap();
    let b = run_scenario(&cfg, &gn(), &o).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn scoring_needs_the_oracle() {
    assert!(run_scenario(&ScenarioConfig::default(), &gn(), &gn()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sweep_minimum_never_loses_to_first_fit(starts in prop::collection::vec(0usize..396, 0..12), pick in any::<prop::sample::Index>()) {
        let mut s = Spectrum::new(400);
        for st in starts {
            let _ = s.place(Channel::new(qpsk(), st));
        }
        let all = ChannelConfig::all_valid();
        let demand = all[pick.index(all.len())];
        prop_assume!(!s.feasible_starts(demand.slot_count()).is_empty());
        let est = gn();
        let p = Placer::new(&est, 80.0, 10);
        let sweep = p.sweep(&s, demand).unwrap();
        let slot = p.optimize_place(&s, demand).unwrap();
        prop_assert!(s.is_free(slot, demand.slot_count()));
        let chosen = sweep.iter().find(|&&(x, _)| x == slot).unwrap().1;
        prop_assert!(sweep.iter().all(|&(_, v)| chosen <= v));
        prop_assert_eq!(sweep[0].0, first_fit_place(&s, demand).unwrap());
    }
}
