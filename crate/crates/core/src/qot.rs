//! Per-channel SNR estimation with interchangeable NLI backends, and
//! estimator accuracy reports against the oracle.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{extract_features, write_json};
use crate::error::{Error, Result};
use crate::gbm::GbmModel;
use crate::nli::{closed_form_eta, oracle_eta, SciStore};
use crate::num::{db_to_lin, lin_to_db};
use crate::phys::{FiberParams, LinkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ml,
    Gn,
    Oracle,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ml => "ml",
            EstimatorKind::Gn => "gn",
            EstimatorKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(Self::Ml),
            "gn" | "closed-form" => Ok(Self::Gn),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::invalid(format!("unknown estimator `{other}` (expected ml, gn or oracle)"))),
        }
    }
}

#[derive(Clone)]
pub enum Backend {
    Ml { model: Arc<GbmModel>, store: Arc<SciStore> },
    ClosedForm,
    Oracle { store: Arc<SciStore> },
}

/// NLI + ASE noise model for a single link. Read-only once built.
#[derive(Clone)]
pub struct Estimator {
    backend: Backend,
    fiber: FiberParams<f64>,
}

impl fmt::Debug for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Estimator")
            .field("kind", &self.kind())
            .field("fiber", &self.fiber)
            .finish()
    }
}

impl Estimator {
    pub fn ml(model: Arc<GbmModel>, store: Arc<SciStore>) -> Self {
        let fiber = *store.fiber();
        Self {
            backend: Backend::Ml { model, store },
            fiber,
        }
    }

    pub fn closed_form(fiber: FiberParams<f64>) -> Self {
        Self {
            backend: Backend::ClosedForm,
            fiber,
        }
    }

    pub fn oracle(store: Arc<SciStore>) -> Self {
        let fiber = *store.fiber();
        Self {
            backend: Backend::Oracle { store },
            fiber,
        }
    }

    /// Builds an estimator of `kind`; the ML backend needs `model`.
    pub fn build(kind: EstimatorKind, model: Option<Arc<GbmModel>>, store: Arc<SciStore>) -> Result<Self> {
        match kind {
            EstimatorKind::Ml => {
                let model = model.ok_or_else(|| Error::Model("ML estimator needs a trained model".into()))?;
                Ok(Self::ml(model, store))
            }
            EstimatorKind::Gn => Ok(Self::closed_form(*store.fiber())),
            EstimatorKind::Oracle => Ok(Self::oracle(store)),
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self.backend {
            Backend::Ml { .. } => EstimatorKind::Ml,
            Backend::ClosedForm => EstimatorKind::Gn,
            Backend::Oracle { .. } => EstimatorKind::Oracle,
        }
    }

    pub fn fiber(&self) -> &FiberParams<f64> {
        &self.fiber
    }

    /// Full-link NLI coefficient `sigma^2_NLI / Pc^3` (1/W^2).
    pub fn eta(&self, link: &LinkConfig, cut: usize) -> Result<f64> {
        match &self.backend {
            Backend::Ml { model, store } => {
                let x = extract_features(link, cut, store)?;
                Ok(db_to_lin(model.predict(&x)))
            }
            Backend::ClosedForm => closed_form_eta(link, cut, &self.fiber),
            Backend::Oracle { store } => oracle_eta(link, cut, store),
        }
    }

    /// NLI power (W) in the CUT bandwidth.
    pub fn nli_w(&self, link: &LinkConfig, cut: usize) -> Result<f64> {
        let p = link.channel(cut)?.power_w();
        Ok(self.eta(link, cut)? * p * p * p)
    }

    /// ASE and NLI powers (W) seen by channel `cut`.
    pub fn noise_w(&self, link: &LinkConfig, cut: usize) -> Result<(f64, f64)> {
        Ok((link.ase_noise_w(&self.fiber, cut)?, self.nli_w(link, cut)?))
    }

    pub fn snr_db(&self, link: &LinkConfig, cut: usize) -> Result<f64> {
        estimate_snr(link, cut, self)
    }
}

/// `10 log10(P / (ASE + NLI))` with noise measured in the CUT symbol-rate bandwidth.
pub fn snr_db(power_w: f64, ase_w: f64, nli_w: f64) -> f64 {
    lin_to_db(power_w / (ase_w + nli_w))
}

pub fn estimate_snr(link: &LinkConfig, cut: usize, estimator: &Estimator) -> Result<f64> {
    let p = link.channel(cut)?.power_w();
    let (ase, nli) = estimator.noise_w(link, cut)?;
    Ok(snr_db(p, ase, nli))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub error_db: f64,
    pub cumulative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub backend: String,
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p99: f64,
    pub max: f64,
    pub mean_signed: f64,
    /// Estimator minus reference, one per channel, in evaluation order.
    pub errors_db: Vec<f64>,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

impl ErrorReport {
    pub fn from_errors(backend: impl Into<String>, errors_db: Vec<f64>) -> Result<Self> {
        if errors_db.is_empty() {
            return Err(Error::invalid("no channels to evaluate"));
        }
        if errors_db.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("non-finite SNR error"));
        }
        let n = errors_db.len() as f64;
        let mut abs: Vec<f64> = errors_db.iter().map(|e| e.abs()).collect();
        abs.sort_by(f64::total_cmp);
        Ok(Self {
            backend: backend.into(),
            count: errors_db.len(),
            mean: abs.iter().sum::<f64>() / n,
            p50: percentile(&abs, 0.50),
            p99: percentile(&abs, 0.99),
            max: *abs.last().expect("non-empty"),
            mean_signed: errors_db.iter().sum::<f64>() / n,
            errors_db,
        })
    }

    /// Empirical CDF of |error|: one point per sample.
    pub fn cdf(&self) -> Vec<CdfPoint> {
        let mut abs: Vec<f64> = self.errors_db.iter().map(|e| e.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let n = abs.len() as f64;
        abs.into_iter()
            .enumerate()
            .map(|(i, error_db)| CdfPoint {
                error_db,
                cumulative_fraction: (i + 1) as f64 / n,
            })
            .collect()
    }

    /// Writes `cdf.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("cdf.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(&path, e);
        writeln!(w, "error_db,cumulative_fraction").map_err(io)?;
        for p in self.cdf() {
            writeln!(w, "{},{}", p.error_db, p.cumulative_fraction).map_err(io)?;
        }
        w.flush().map_err(io)?;
        write_json(&dir.join("report.json"), self)
    }
}

/// SNR error (estimator minus reference) on every channel of every link.
pub fn evaluate(links: &[LinkConfig], estimator: &Estimator, reference: &Estimator) -> Result<ErrorReport> {
    let pairs: Vec<(usize, usize)> = links
        .iter()
        .enumerate()
        .flat_map(|(l, link)| (0..link.channels.len()).map(move |c| (l, c)))
        .collect();
    let errors = pairs
        .par_iter()
        .map(|&(l, c)| Ok(estimate_snr(&links[l], c, estimator)? - estimate_snr(&links[l], c, reference)?))
        .collect::<Result<Vec<f64>>>()?;
    ErrorReport::from_errors(estimator.kind().name(), errors)
}
