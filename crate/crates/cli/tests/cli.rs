use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn nliconquer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nliconquer"))
        .current_dir(dir)
        .env_remove("NLICONQUER_CONFIG")
        .args(args)
        .output()
        .expect("spawn nliconquer")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = nliconquer(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn same_files(a: &Path, b: &Path, skip: &[&str]) {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| !skip.iter().any(|s| n == s))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let (x, y) = (std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
        assert!(x == y, "{} differs", n.to_string_lossy());
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nliconquer(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(nliconquer(dir.path(), &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(nliconquer(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(
        nliconquer(dir.path(), &["optimize-spectrum", "--estimator", "magic"]).status.code(),
        Some(2)
    );
}

#[test]
fn eval_without_model_explains_what_to_do() {
    let dir = tempfile::tempdir().unwrap();
    let out = nliconquer(dir.path(), &["eval", "--model", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.json") && err.contains("nliconquer train"), "{err}");
}

#[test]
fn config_errors_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[gbm]\nlearning_rat = 0.1\n").unwrap();
    let out = nliconquer(dir.path(), &["--config", "bad.toml", "plan", "--estimator", "gn"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.path().join("neg.toml"), "[gbm]\nlearning_rate = -1.0\n").unwrap();
    let out = nliconquer(dir.path(), &["--config", "neg.toml", "plan", "--estimator", "gn"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_env_var_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "seed = 9\n[plan]\nyears = 2\nestimator = \"gn\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nliconquer"))
        .current_dir(dir.path())
        .env("NLICONQUER_CONFIG", "run.toml")
        .args(["plan", "--out", "p"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = std::fs::read_to_string(dir.path().join("p/resolved-config.toml")).unwrap();
    assert!(echo.contains("seed = 9") && echo.contains("years = 2"), "{echo}");
    assert!(!echo.contains("threads"));
}

#[test]
fn tiny_pipeline_smoke() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--seed", "5", "gen-dataset", "--links", "10", "--out", "ds"]);
    for f in ["train.csv", "val.csv", "test.csv", "links.jsonl", "manifest.json", "resolved-config.toml"] {
        assert!(d.join("ds").join(f).exists(), "{f}");
    }
    // The echoed config regenerates the dataset bit for bit.
    ok(d, &["--config", "ds/resolved-config.toml", "--threads", "2", "gen-dataset", "--out", "ds_again"]);
    same_files(&d.join("ds"), &d.join("ds_again"), &["resolved-config.toml"]);

    ok(d, &["train", "--dataset", "ds", "--out", "model/model.json"]);
    for f in ["model.json", "training_log.csv", "feature_importance.csv", "resolved-config.toml"] {
        assert!(d.join("model").join(f).exists(), "{f}");
    }
    let report = ok(d, &["eval", "--dataset", "ds", "--model", "model/model.json", "--out", "eval"]);
    assert!(report.contains("second pass: 0 quadrature calls"), "{report}");
    for f in ["ml/cdf.csv", "ml/report.json", "gn/report.json", "summary.json"] {
        assert!(d.join("eval").join(f).exists(), "{f}");
    }

    ok(
        d,
        &[
            "optimize-spectrum",
            "--spans",
            "3",
            "--fill",
            "0.15",
            "--estimator",
            "ml",
            "--model",
            "model/model.json",
            "--out",
            "spec/report.json",
        ],
    );
    for f in ["report.json", "first_fit_layout.json", "optimized_layout.json", "resolved-config.toml"] {
        assert!(d.join("spec").join(f).exists(), "{f}");
    }
    ok(d, &["plan", "--years", "2", "--estimator", "gn", "--out", "plan"]);
    for f in ["plan.json", "traffic.csv", "resolved-config.toml"] {
        assert!(d.join("plan").join(f).exists(), "{f}");
    }

    let out = nliconquer(
        d,
        &["bench", "--model", "model/model.json", "--iterations", "700", "--oracle-iterations", "1"],
    );
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("closed-form gn") && table.contains("oracle, cold store"), "{table}");
    assert!(matches!(out.status.code(), Some(0 | 1)));
    assert!(started.elapsed() < Duration::from_secs(300));
}

#[test]
fn shipped_topology_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/nordunet.json");
    let t = nliconquer::planner::Topology::load(&path).unwrap();
    assert_eq!(t, nliconquer::planner::Topology::nordunet());
}
