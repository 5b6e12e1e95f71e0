use std::sync::Arc;

use nliconquer::dataset::label;
use nliconquer::gbm::{GbmModel, GbmParams};
use nliconquer::nli::{link_keys, SciStore};
use nliconquer::phys::{Channel, ChannelConfig, FiberParams, LinkConfig, Modulation};
use nliconquer::qot::{evaluate, snr_db, ErrorReport, Estimator, EstimatorKind};
use proptest::prelude::*;

fn ch(m: Modulation, rate: u32, slot: usize) -> Channel {
    Channel::new(ChannelConfig::new(m, rate).unwrap(), slot)
}

fn store() -> Arc<SciStore> {
    Arc::new(SciStore::in_memory(FiberParams::default()))
}

fn mixed_link() -> LinkConfig {
    LinkConfig::new(
        100.0,
        6,
        vec![
            ch(Modulation::Qpsk, 100, 20),
            ch(Modulation::Qam16, 400, 40),
            ch(Modulation::Qam64, 300, 60),
            ch(Modulation::Qpsk, 200, 200),
        ],
    )
    .unwrap()
}

#[test]
fn pure_ase_snr() {
    // 12 x 80 km, 0.2 dB/km, NF 5 dB, 193.41 THz, 35 GBd, 0 dBm.
    let h = 6.626_070_15e-34;
    let ase = 12.0 * (10f64.powf(1.6) - 1.0) * 10f64.powf(0.5) * h * 193.41e12 * 35e9;
    let want = 10.0 * (1e-3 / ase).log10();
    assert!((want - 21.8).abs() < 0.05);

    let link = LinkConfig::new(80.0, 12, vec![ch(Modulation::Qpsk, 100, 0)]).unwrap();
    let c = &link.channels[0];
    assert!((c.symbol_rate_gbd - 35.0).abs() < 1e-12 && c.launch_power_dbm.abs() < 1e-12);
    let got = snr_db(c.power_w(), link.ase_noise_w(&FiberParams::default(), 0).unwrap(), 0.0);
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn oracle_against_itself_is_exact() {
    let oracle = Estimator::oracle(store());
    let r = evaluate(&[mixed_link()], &oracle, &oracle).unwrap();
    assert_eq!(r.count, 4);
    assert!(r.errors_db.iter().all(|&e| e == 0.0));
    assert_eq!((r.mean, r.p99, r.max), (0.0, 0.0, 0.0));
    let cdf = r.cdf();
    assert!(cdf.iter().all(|p| p.error_db == 0.0));
    assert_eq!(cdf.last().unwrap().cumulative_fraction, 1.0);
}

#[test]
fn empty_input_is_an_error() {
    let oracle = Estimator::oracle(store());
    assert!(evaluate(&[], &oracle, &oracle).is_err());
}

#[test]
fn ml_without_model_is_an_error() {
    assert!(Estimator::build(EstimatorKind::Ml, None, store()).is_err());
}

#[test]
fn exact_model_reproduces_oracle_snr() {
    let s = store();
    let link = LinkConfig::new(80.0, 12, vec![ch(Modulation::Qpsk, 100, 100)]).unwrap();
    let truth = label(&link, 0, &s).unwrap();
    let model = Arc::new(GbmModel::constant(truth, GbmParams::default()));
    let ml = Estimator::ml(model, s.clone());
    let oracle = Estimator::oracle(s);
    let d = ml.snr_db(&link, 0).unwrap() - oracle.snr_db(&link, 0).unwrap();
    assert!(d.abs() < 1e-9, "{d}");
}

#[test]
fn warm_store_serves_ml_without_quadrature() {
    let s = store();
    let link = mixed_link();
    s.ensure(link_keys(&link)).unwrap();
    s.reset_counters();
    let ml = Estimator::ml(Arc::new(GbmModel::constant(-30.0, GbmParams::default())), s.clone());
    for cut in 0..link.channels.len() {
        ml.snr_db(&link, cut).unwrap();
    }
    let oracle = Estimator::oracle(s.clone());
    for cut in 0..link.channels.len() {
        oracle.snr_db(&link, cut).unwrap();
    }
    assert_eq!(s.misses(), 0);
    assert!(s.hits() > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn louder_interferer_lowers_snr(slot in 40usize..380, bump in 0.5f64..6.0, spans in 1usize..20) {
        let s = store();
        let base = LinkConfig::new(80.0, spans, vec![ch(Modulation::Qpsk, 100, 0), ch(Modulation::Qam16, 200, slot)]).unwrap();
        let mut louder = base.clone();
        louder.channels[1].launch_power_dbm += bump;
        for est in [Estimator::oracle(s.clone()), Estimator::closed_form(FiberParams::default())] {
            let (a, b) = (est.snr_db(&base, 0).unwrap(), est.snr_db(&louder, 0).unwrap());
            prop_assert!(b < a, "{:?}: {} !< {}", est.kind(), b, a);
        }
    }

    #[test]
    fn cdf_is_monotone_and_normalized(errors in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let r = ErrorReport::from_errors("x", errors.clone()).unwrap();
        let cdf = r.cdf();
        prop_assert_eq!(cdf.len(), errors.len());
        prop_assert!(cdf.windows(2).all(|w| w[0].error_db <= w[1].error_db && w[0].cumulative_fraction < w[1].cumulative_fraction));
        prop_assert_eq!(cdf.last().unwrap().cumulative_fraction, 1.0);
        prop_assert!(r.p50 <= r.p99 && r.p99 <= r.max);
        prop_assert!(r.mean <= r.max);
    }
}
