use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nliconquer::dataset::{self, Dataset, GenerationConfig, Split};
use nliconquer::gbm::{self, GbmModel};
use nliconquer::nli::SciStore;
use nliconquer::planner::{self, Topology};
use nliconquer::qot::{self, Estimator, EstimatorKind, ErrorReport};
use nliconquer::specopt;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{EvalArgs, GenDatasetArgs, GlobalArgs, OptimizeArgs, PlanArgs, TrainArgs};

pub fn load_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(store) = &g.store {
        cfg.paths.store = store.clone();
    }
    Ok(cfg)
}

pub fn open_store(cfg: &RunConfig) -> Result<Arc<SciStore>> {
    let path = &cfg.paths.store;
    let store = SciStore::open(path, cfg.fiber).with_context(|| format!("opening coefficient store {}", path.display()))?;
    Ok(Arc::new(store))
}

pub fn load_model(path: &Path) -> Result<Arc<GbmModel>> {
    if !path.exists() {
        bail!(
            "no trained model at {}; run `nliconquer train` first or pass --model <path>",
            path.display()
        );
    }
    let model = GbmModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
    Ok(Arc::new(model))
}

fn estimator(kind: EstimatorKind, model_path: &Path, store: &Arc<SciStore>) -> Result<Estimator> {
    let model = match kind {
        EstimatorKind::Ml => Some(load_model(model_path)?),
        _ => None,
    };
    Ok(Estimator::build(kind, model, store.clone())?)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn gen_dataset(g: &GlobalArgs, a: GenDatasetArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(path) = &a.generation {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.generation = GenerationConfig::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if g.seed.is_none() {
            cfg.seed = cfg.generation.seed;
        }
    }
    if let Some(scale) = a.scale {
        cfg.generation.scale = scale.into();
        cfg.generation.link_count = None;
    }
    if let Some(n) = a.links {
        cfg.generation.link_count = Some(n);
    }
    if let Some(out) = a.out {
        cfg.paths.dataset = out;
    }
    let cfg = cfg.resolve()?;
    let store = open_store(&cfg)?;

    let started = Instant::now();
    let ds = dataset::generate(&cfg.generation, &store)?;
    store.flush()?;
    ds.write(&cfg.paths.dataset)?;
    cfg.echo(&cfg.paths.dataset)?;

    let m = &ds.manifest;
    println!(
        "dataset: {} links ({} train / {} val / {} test), {} rows ({} / {} / {})",
        m.link_config_count,
        m.links.train,
        m.links.val,
        m.links.test,
        m.rows.total(),
        m.rows.train,
        m.rows.val,
        m.rows.test
    );
    println!(
        "store: {} coefficients ({} computed this run)",
        store.len(),
        store.misses()
    );
    println!("wrote {} in {:.1} s", cfg.paths.dataset.display(), started.elapsed().as_secs_f64());
    Ok(())
}

pub fn train(g: &GlobalArgs, a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(d) = a.dataset {
        cfg.paths.dataset = d;
    }
    if let Some(m) = a.out {
        cfg.paths.model = m;
    }
    if a.tune {
        cfg.tune.enabled = true;
    }
    let cfg = cfg.resolve()?;
    let ds = Dataset::load(&cfg.paths.dataset).with_context(|| format!("loading dataset {}", cfg.paths.dataset.display()))?;
    let dir = parent_dir(&cfg.paths.model);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let started = Instant::now();
    let model = if cfg.tune.enabled {
        let outcome = gbm::tune(ds.rows(Split::Train), ds.rows(Split::Val), &cfg.tune.grid, &cfg.gbm)?;
        write_json(&dir.join("tune.json"), &outcome.candidates)?;
        for c in &outcome.candidates {
            println!(
                "  depth {} lr {} subsample {}: val RMSE {:.5} dB, {} trees",
                c.params.max_depth, c.params.learning_rate, c.params.row_subsample, c.val_rmse, c.trees
            );
        }
        outcome.model
    } else {
        gbm::train(ds.rows(Split::Train), ds.rows(Split::Val), &cfg.gbm)?
    };
    let elapsed = started.elapsed().as_secs_f64();

    model.save(&cfg.paths.model)?;
    model.write_training_log(&dir.join("training_log.csv"))?;
    write_importance(&dir.join("feature_importance.csv"), &model)?;
    cfg.echo(&dir)?;

    let val = model.val_rmse_history.get(model.trees.len().saturating_sub(1)).copied();
    println!(
        "model: {} trees, depth {}, lr {}; val RMSE {}",
        model.trees.len(),
        model.params.max_depth,
        model.params.learning_rate,
        val.map_or("n/a".to_string(), |v| format!("{v:.5} dB"))
    );
    println!("wrote {} in {elapsed:.1} s", cfg.paths.model.display());
    Ok(())
}

fn write_importance(path: &Path, model: &GbmModel) -> Result<()> {
    let imp = gbm::feature_importance(model);
    let total: f64 = imp.iter().map(|f| f.gain).sum();
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "rank,index,name,gain,share")?;
    for (rank, f) in imp.iter().enumerate() {
        let share = if total > 0.0 { f.gain / total } else { 0.0 };
        writeln!(w, "{},{},{},{},{}", rank + 1, f.index, f.name, f.gain, share)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorSummary {
    count: usize,
    mean_abs_db: f64,
    p50_abs_db: f64,
    p99_abs_db: f64,
    max_abs_db: f64,
    mean_signed_db: f64,
}

impl From<&ErrorReport> for ErrorSummary {
    fn from(r: &ErrorReport) -> Self {
        Self {
            count: r.count,
            mean_abs_db: r.mean,
            p50_abs_db: r.p50,
            p99_abs_db: r.p99,
            max_abs_db: r.max,
            mean_signed_db: r.mean_signed,
        }
    }
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    test_links: usize,
    ml: ErrorSummary,
    gn: ErrorSummary,
    /// Quadrature calls during a repeated pass over the test split.
    second_pass_quadrature_calls: u64,
    second_pass_store_hits: u64,
}

pub fn eval(g: &GlobalArgs, a: EvalArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(d) = a.dataset {
        cfg.paths.dataset = d;
    }
    if let Some(m) = a.model {
        cfg.paths.model = m;
    }
    let out = a.out.unwrap_or_else(|| cfg.paths.reports.join("eval"));
    let cfg = cfg.resolve()?;
    let model = load_model(&cfg.paths.model)?;
    let ds = Dataset::load(&cfg.paths.dataset).with_context(|| format!("loading dataset {}", cfg.paths.dataset.display()))?;
    let store = open_store(&cfg)?;
    let links: Vec<_> = ds.links_in(Split::Test).map(|r| r.link.clone()).collect();
    if links.is_empty() {
        bail!("the test split of {} is empty", cfg.paths.dataset.display());
    }

    let oracle = Estimator::oracle(store.clone());
    let ml = Estimator::ml(model, store.clone());
    let gn = Estimator::closed_form(cfg.fiber);
    let ml_report = qot::evaluate(&links, &ml, &oracle)?;
    let gn_report = qot::evaluate(&links, &gn, &oracle)?;

    store.reset_counters();
    qot::evaluate(&links, &ml, &oracle)?;
    let second_pass_quadrature_calls = store.misses();
    let second_pass_store_hits = store.hits();
    store.flush()?;

    ml_report.write(&out.join("ml"))?;
    gn_report.write(&out.join("gn"))?;
    let summary = EvalSummary {
        test_links: links.len(),
        ml: (&ml_report).into(),
        gn: (&gn_report).into(),
        second_pass_quadrature_calls,
        second_pass_store_hits,
    };
    write_json(&out.join("summary.json"), &summary)?;
    cfg.echo(&out)?;

    println!("test split: {} links, {} channels", links.len(), ml_report.count);
    println!("{:<12} {:>10} {:>10} {:>10} {:>10}", "estimator", "mean|e|", "p50", "p99", "max");
    for r in [&ml_report, &gn_report] {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.backend, r.mean, r.p50, r.p99, r.max
        );
    }
    println!("second pass: {second_pass_quadrature_calls} quadrature calls, {second_pass_store_hits} store hits");
    println!("wrote {}", out.display());
    Ok(())
}

pub fn optimize_spectrum(g: &GlobalArgs, a: OptimizeArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    let s = &mut cfg.spectrum;
    if let Some(v) = a.spans {
        s.scenario.span_count = v;
    }
    if let Some(v) = a.span_km {
        s.scenario.span_length_km = v;
    }
    if let Some(v) = a.fill {
        s.scenario.fill = v;
    }
    if let Some(v) = a.estimator {
        s.estimator = v;
    }
    if let Some(m) = a.model {
        cfg.paths.model = m;
    }
    let out = a
        .out
        .unwrap_or_else(|| cfg.paths.reports.join("spectrum").join("report.json"));
    let cfg = cfg.resolve()?;
    let store = open_store(&cfg)?;
    let est = estimator(cfg.spectrum.estimator, &cfg.paths.model, &store)?;
    let oracle = Estimator::oracle(store.clone());

    let report = specopt::run_scenario(&cfg.spectrum.scenario, &est, &oracle)?;
    store.flush()?;

    let dir = parent_dir(&out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&out, &report)?;
    write_json(&dir.join("first_fit_layout.json"), &report.first_fit_layout)?;
    write_json(&dir.join("optimized_layout.json"), &report.optimized_layout)?;
    cfg.echo(&dir)?;

    let worst = report
        .optimized_snr_db
        .iter()
        .zip(&report.first_fit_snr_db)
        .map(|(o, f)| o - f)
        .fold(f64::INFINITY, f64::min);
    let sc = &cfg.spectrum.scenario;
    println!(
        "{} demands on {} x {} km at {:.0}% fill, optimized with {}",
        report.demands.len(),
        sc.span_count,
        sc.span_length_km,
        sc.fill * 100.0,
        report.estimator
    );
    println!("oracle SNR gain over first-fit: average {:.3} dB, worst channel {:.3} dB", report.average_gain_db, worst);
    println!(
        "{} NLI estimates in {:.1} s",
        report.nli_computations, report.wall_time_s
    );
    println!("wrote {}", out.display());
    Ok(())
}

pub fn plan(g: &GlobalArgs, a: PlanArgs) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(t) = a.topology {
        cfg.plan.topology = Some(t);
    }
    if let Some(y) = a.years {
        cfg.plan.years = y;
    }
    if let Some(e) = a.estimator {
        cfg.plan.estimator = e;
    }
    if let Some(m) = a.model {
        cfg.paths.model = m;
    }
    let out = a.out.unwrap_or_else(|| cfg.paths.reports.join("plan"));
    let cfg = cfg.resolve()?;
    if cfg.plan.years == 0 {
        bail!("--years must be at least 1");
    }
    let topology = match &cfg.plan.topology {
        Some(p) => Topology::load(p).with_context(|| format!("loading topology {}", p.display()))?,
        None => Topology::nordunet(),
    };
    let store = open_store(&cfg)?;
    let est = estimator(cfg.plan.estimator, &cfg.paths.model, &store)?;
    let oracle = Estimator::oracle(store.clone());

    let started = Instant::now();
    let traffic = planner::generate_traffic(&topology.pairs, cfg.plan.years, cfg.seed);
    let report = planner::plan(&topology, &traffic, &est, &oracle)?;
    store.flush()?;

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    report.write(&out.join("plan.json"))?;
    traffic.write_csv(&out.join("traffic.csv"))?;
    cfg.echo(&out)?;

    let unsatisfied = report.satisfaction.iter().filter(|s| !s.satisfied).count();
    println!(
        "{} over {} years with {}: {} lightpaths, {} unsatisfied requests, {} oracle violations, {} margin erosions",
        report.topology,
        cfg.plan.years,
        report.estimator,
        report.total_lightpaths(),
        unsatisfied,
        report.oracle_violations,
        report.oracle_margin_erosions
    );
    for (label, n) in &report.per_config {
        println!("  {label:<14} {n}");
    }
    println!("wrote {} in {:.1} s", out.display(), started.elapsed().as_secs_f64());
    Ok(())
}
