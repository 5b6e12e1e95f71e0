use std::hint::black_box;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nliconquer::dataset::extract_features;
use nliconquer::nli::{closed_form_eta, link_keys, oracle_eta, SciStore};
use nliconquer::phys::{Channel, ChannelConfig, LinkConfig, DEFAULT_BAND_SLOTS};
use nliconquer::qot::Estimator;
use serde::Serialize;

use crate::commands::{load_config, load_model};
use crate::{BenchArgs, GlobalArgs};

pub const MIN_ORACLE_SPEEDUP: f64 = 100.0;
const BATCHES: usize = 7;
const SPAN_KM: f64 = 80.0;
const SPAN_COUNT: usize = 12;

/// `n` channels packed from the low band edge, cycling through every valid
/// configuration that is at most `max_slots` wide.
pub fn bench_link(n: usize) -> Result<LinkConfig> {
    let max_slots = DEFAULT_BAND_SLOTS / n.max(1);
    let configs: Vec<ChannelConfig> = ChannelConfig::all_valid()
        .into_iter()
        .filter(|c| c.slot_count() <= max_slots)
        .collect();
    if n == 0 || configs.is_empty() {
        bail!("{n} channels do not fit in a {DEFAULT_BAND_SLOTS}-slot band");
    }
    let mut slot = 0;
    let channels = (0..n)
        .map(|i| {
            let c = Channel::new(configs[i % configs.len()], slot);
            slot += c.slot_count;
            c
        })
        .collect();
    Ok(LinkConfig::new(SPAN_KM, SPAN_COUNT, channels)?)
}

/// Median per-call seconds over `BATCHES` batches.
fn per_call<F: FnMut()>(iterations: usize, mut f: F) -> f64 {
    let per_batch = (iterations / BATCHES).max(1);
    for _ in 0..per_batch.min(1000) {
        f();
    }
    let mut t: Vec<f64> = (0..BATCHES)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..per_batch {
                f();
            }
            start.elapsed().as_secs_f64() / per_batch as f64
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[BATCHES / 2]
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub channels: usize,
    pub trees: usize,
    pub ml_predict_s: f64,
    pub ml_estimate_s: f64,
    pub closed_form_s: f64,
    pub oracle_warm_s: f64,
    pub oracle_cold_s: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub operation: &'static str,
    pub seconds: f64,
}

pub fn run(g: &GlobalArgs, a: BenchArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(m) = a.model {
        cfg.paths.model = m;
    }
    if let Some(c) = a.channels {
        cfg.bench.channels = c;
    }
    if let Some(i) = a.iterations {
        cfg.bench.iterations = i;
    }
    if let Some(i) = a.oracle_iterations {
        cfg.bench.oracle_iterations = i;
    }
    let cfg = cfg.resolve()?;
    let b = &cfg.bench;
    if b.iterations == 0 || b.oracle_iterations == 0 {
        bail!("iteration counts must be positive");
    }
    let model = load_model(&cfg.paths.model)?;
    let link = bench_link(b.channels)?;
    let cut = link.channels.len() / 2;
    let fiber = cfg.fiber;

    let warm = Arc::new(SciStore::in_memory(fiber));
    warm.ensure(link_keys(&link))?;
    let features = extract_features(&link, cut, &warm)?;
    let ml = Estimator::ml(model.clone(), warm.clone());

    let t_predict = per_call(b.iterations, || {
        black_box(model.predict(black_box(&features)));
    });
    let t_ml = per_call(b.iterations, || {
        black_box(ml.eta(black_box(&link), cut).expect("ml eta"));
    });
    let t_gn = per_call(b.iterations, || {
        black_box(closed_form_eta(black_box(&link), cut, &fiber).expect("closed form"));
    });
    let t_warm = per_call(b.iterations, || {
        black_box(oracle_eta(black_box(&link), cut, &warm).expect("oracle"));
    });
    let mut cold: Vec<f64> = (0..b.oracle_iterations)
        .map(|_| {
            let store = SciStore::in_memory(fiber);
            let start = Instant::now();
            black_box(oracle_eta(&link, cut, &store)?);
            Ok(start.elapsed().as_secs_f64())
        })
        .collect::<Result<_>>()?;
    cold.sort_by(f64::total_cmp);
    let t_cold = cold[cold.len() / 2];

    let rows = [
        BenchRow {
            operation: "ml predict (features given)",
            seconds: t_predict,
        },
        BenchRow {
            operation: "ml estimate (features + predict)",
            seconds: t_ml,
        },
        BenchRow {
            operation: "closed-form gn",
            seconds: t_gn,
        },
        BenchRow {
            operation: "oracle, warm store",
            seconds: t_warm,
        },
        BenchRow {
            operation: "oracle, cold store",
            seconds: t_cold,
        },
    ];
    println!(
        "{} channels, CUT {} of {}, {} x {} km, model with {} trees",
        link.channels.len(),
        cut,
        link.channels.len(),
        SPAN_COUNT,
        SPAN_KM,
        model.trees.len()
    );
    println!("{:<34} {:>14} {:>14}", "operation", "per call", "vs cold oracle");
    for r in &rows {
        println!(
            "{:<34} {:>14} {:>13.0}x",
            r.operation,
            human(r.seconds),
            t_cold / r.seconds
        );
    }

    let mut failures = Vec::new();
    if t_predict >= t_gn {
        failures.push(format!("ml predict ({}) is not faster than closed-form ({})", human(t_predict), human(t_gn)));
    }
    if t_gn >= t_cold {
        failures.push(format!("closed-form ({}) is not faster than the oracle ({})", human(t_gn), human(t_cold)));
    }
    if t_cold / t_predict < MIN_ORACLE_SPEEDUP {
        failures.push(format!(
            "ml predict is only {:.0}x faster than the oracle (need {MIN_ORACLE_SPEEDUP:.0}x)",
            t_cold / t_predict
        ));
    }
    if let Some(path) = &a.out {
        let report = BenchReport {
            channels: link.channels.len(),
            trees: model.trees.len(),
            ml_predict_s: t_predict,
            ml_estimate_s: t_ml,
            closed_form_s: t_gn,
            oracle_warm_s: t_warm,
            oracle_cold_s: t_cold,
            failures: failures.clone(),
        };
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if failures.is_empty() {
        println!("ordering ml < closed-form < oracle holds");
        Ok(())
    } else {
        bail!("latency ordering violated: {}", failures.join("; "))
    }
}

fn human(s: f64) -> String {
    if s < 1e-6 {
        format!("{:.0} ns", s * 1e9)
    } else if s < 1e-3 {
        format!("{:.2} us", s * 1e6)
    } else if s < 1.0 {
        format!("{:.2} ms", s * 1e3)
    } else {
        format!("{s:.2} s")
    }
}
