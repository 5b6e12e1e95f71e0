//! Persistent cache of per-span SCI and pairwise XCI coefficients.
//!
//! Keys are quantized (0.01 GBd, 0.01 GHz, 0.01 km) and every coefficient is
//! computed from the quantized key, so a warm lookup returns exactly what a
//! cold computation would. The backing file is JSON lines, append-only,
//! last write wins on duplicate keys.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phys::{FiberParams, LinkConfig, Span};
use crate::quad::QuadConfig;

use super::integral::{sci_coefficient, xci_coefficient};
use super::kernel::SpanKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffKind {
    Sci,
    Xci,
}

#[inline]
fn quantize(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Cache key in hundredths of GBd / GHz / km. SCI keys carry zero
/// interferer fields; XCI keys store `|delta f|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoeffKey {
    pub cut_rate: i64,
    pub interferer_rate: i64,
    pub delta_f: i64,
    pub span_length: i64,
}

impl CoeffKey {
    pub fn sci(rate_gbd: f64, span_length_km: f64) -> Self {
        Self {
            cut_rate: quantize(rate_gbd),
            interferer_rate: 0,
            delta_f: 0,
            span_length: quantize(span_length_km),
        }
    }

    pub fn xci(cut_rate_gbd: f64, interferer_rate_gbd: f64, delta_f_ghz: f64, span_length_km: f64) -> Self {
        Self {
            cut_rate: quantize(cut_rate_gbd),
            interferer_rate: quantize(interferer_rate_gbd),
            delta_f: quantize(delta_f_ghz).abs(),
            span_length: quantize(span_length_km),
        }
    }

    pub fn kind(&self) -> CoeffKind {
        if self.interferer_rate == 0 {
            CoeffKind::Sci
        } else {
            CoeffKind::Xci
        }
    }

    pub fn cut_rate_gbd(&self) -> f64 {
        self.cut_rate as f64 / 100.0
    }

    pub fn interferer_rate_gbd(&self) -> f64 {
        self.interferer_rate as f64 / 100.0
    }

    pub fn delta_f_ghz(&self) -> f64 {
        self.delta_f as f64 / 100.0
    }

    pub fn span_length_km(&self) -> f64 {
        self.span_length as f64 / 100.0
    }
}

/// One line of the JSON-lines store.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreRecord {
    pub rc: f64,
    pub rk: f64,
    pub df: f64,
    pub lspan: f64,
    pub kind: CoeffKind,
    pub eta: f64,
}

impl StoreRecord {
    fn new(key: &CoeffKey, eta: f64) -> Self {
        Self {
            rc: key.cut_rate_gbd(),
            rk: key.interferer_rate_gbd(),
            df: key.delta_f_ghz(),
            lspan: key.span_length_km(),
            kind: key.kind(),
            eta,
        }
    }

    fn key(&self) -> CoeffKey {
        match self.kind {
            CoeffKind::Sci => CoeffKey::sci(self.rc, self.lspan),
            CoeffKind::Xci => CoeffKey::xci(self.rc, self.rk, self.df, self.lspan),
        }
    }
}

/// Per-span NLI coefficients.
///
/// Readers run concurrently; computed entries are queued and appended to the
/// backing file by [`SciStore::flush`] in key order.
pub struct SciStore {
    fiber: FiberParams<f64>,
    quad: QuadConfig<f64>,
    path: Option<PathBuf>,
    map: RwLock<HashMap<CoeffKey, f64>>,
    pending: Mutex<BTreeMap<CoeffKey, f64>>,
    kernels: Mutex<HashMap<i64, Arc<SpanKernel<f64>>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl std::fmt::Debug for SciStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SciStore")
            .field("path", &self.path)
            .field("len", &self.len())
            .field("hits", &self.hits())
            .field("misses", &self.misses())
            .finish()
    }
}

impl SciStore {
    pub fn in_memory(fiber: FiberParams<f64>) -> Self {
        Self {
            fiber,
            quad: QuadConfig::default(),
            path: None,
            map: RwLock::new(HashMap::new()),
            pending: Mutex::new(BTreeMap::new()),
            kernels: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Sidecar recording the fiber parameters a store file was built with.
    pub fn fiber_sidecar(path: &Path) -> PathBuf {
        path.with_extension("fiber.json")
    }

    /// Opens (or starts) a store backed by `path`. Fails if the file was
    /// built for different fiber parameters.
    pub fn open(path: impl AsRef<Path>, fiber: FiberParams<f64>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let sidecar = Self::fiber_sidecar(&path);
        if sidecar.exists() {
            let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let stored: FiberParams<f64> = serde_json::from_str(&text)?;
            if stored != fiber {
                return Err(Error::invalid(format!(
                    "coefficient store {} was built for different fiber parameters; use another store path",
                    path.display()
                )));
            }
        } else if path.exists() {
            return Err(Error::invalid(format!(
                "coefficient store {} has no fiber sidecar {}",
                path.display(),
                sidecar.display()
            )));
        }
        let mut store = Self::in_memory(fiber);
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let map = store.map.get_mut().expect("fresh lock");
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: StoreRecord = serde_json::from_str(&line)?;
                map.insert(rec.key(), rec.eta);
            }
        }
        store.path = Some(path);
        Ok(store)
    }

    pub fn with_quad_config(mut self, quad: QuadConfig<f64>) -> Self {
        self.quad = quad;
        self
    }

    pub fn fiber(&self) -> &FiberParams<f64> {
        &self.fiber
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Number of coefficients computed by quadrature since opening.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.hits.store(0, Ordering::Relaxed);
        self.misses.store(0, Ordering::Relaxed);
    }

    pub fn get(&self, key: &CoeffKey) -> Option<f64> {
        self.map.read().expect("store lock").get(key).copied()
    }

    pub fn put(&self, key: CoeffKey, eta: f64) {
        self.map.write().expect("store lock").insert(key, eta);
        self.pending.lock().expect("pending lock").insert(key, eta);
    }

    fn kernel(&self, span_length: i64) -> Arc<SpanKernel<f64>> {
        let mut kernels = self.kernels.lock().expect("kernel lock");
        kernels
            .entry(span_length)
            .or_insert_with(|| Arc::new(SpanKernel::new(&Span::new(span_length as f64 / 100.0, self.fiber))))
            .clone()
    }

    /// Evaluates the coefficient for `key` by quadrature, bypassing the cache.
    pub fn compute(&self, key: &CoeffKey) -> Result<f64> {
        let kernel = self.kernel(key.span_length);
        match key.kind() {
            CoeffKind::Sci => sci_coefficient(&kernel, key.cut_rate_gbd(), &self.quad),
            CoeffKind::Xci => xci_coefficient(
                &kernel,
                key.cut_rate_gbd(),
                key.interferer_rate_gbd(),
                key.delta_f_ghz(),
                &self.quad,
            ),
        }
    }

    pub fn get_or_compute(&self, key: &CoeffKey) -> Result<f64> {
        if let Some(v) = self.get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let eta = self.compute(key)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.put(*key, eta);
        Ok(eta)
    }

    pub fn sci(&self, rate_gbd: f64, span_length_km: f64) -> Result<f64> {
        self.get_or_compute(&CoeffKey::sci(rate_gbd, span_length_km))
    }

    pub fn xci(&self, cut_rate_gbd: f64, interferer_rate_gbd: f64, delta_f_ghz: f64, span_length_km: f64) -> Result<f64> {
        self.get_or_compute(&CoeffKey::xci(cut_rate_gbd, interferer_rate_gbd, delta_f_ghz, span_length_km))
    }

    /// Computes every missing key in parallel; returns how many were computed.
    pub fn ensure<I>(&self, keys: I) -> Result<usize>
    where
        I: IntoIterator<Item = CoeffKey>,
    {
        let mut missing: Vec<CoeffKey> = {
            let map = self.map.read().expect("store lock");
            keys.into_iter().filter(|k| !map.contains_key(k)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        if missing.is_empty() {
            return Ok(0);
        }
        let computed: Vec<(CoeffKey, f64)> = missing
            .par_iter()
            .map(|k| self.compute(k).map(|eta| (*k, eta)))
            .collect::<Result<_>>()?;
        self.misses.fetch_add(computed.len() as u64, Ordering::Relaxed);
        let n = computed.len();
        let mut map = self.map.write().expect("store lock");
        let mut pending = self.pending.lock().expect("pending lock");
        for (k, eta) in computed {
            map.insert(k, eta);
            pending.insert(k, eta);
        }
        Ok(n)
    }

    /// Appends entries computed since the last flush to the backing file.
    pub fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut pending = self.pending.lock().expect("pending lock");
        if pending.is_empty() {
            return Ok(());
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let sidecar = Self::fiber_sidecar(path);
        if !sidecar.exists() {
            let text = serde_json::to_string_pretty(&self.fiber)?;
            std::fs::write(&sidecar, text + "\n").map_err(|e| Error::io(&sidecar, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (k, eta) in pending.iter() {
            serde_json::to_writer(&mut w, &StoreRecord::new(k, *eta))?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        pending.clear();
        Ok(())
    }
}

/// Every key needed to evaluate the oracle on all channels of `link`.
pub fn link_keys(link: &LinkConfig) -> Vec<CoeffKey> {
    let mut keys = Vec::with_capacity(link.channels.len() * link.channels.len());
    for c in &link.channels {
        keys.push(CoeffKey::sci(c.symbol_rate_gbd, link.span_length_km));
        for k in &link.channels {
            if std::ptr::eq(c, k) {
                continue;
            }
            keys.push(CoeffKey::xci(
                c.symbol_rate_gbd,
                k.symbol_rate_gbd,
                k.center_freq_ghz - c.center_freq_ghz,
                link.span_length_km,
            ));
        }
    }
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_quantization() {
        let a = CoeffKey::xci(11.666_666, 35.0, -50.004, 80.0);
        let b = CoeffKey::xci(11.67, 35.0, 50.0, 80.0);
        assert_eq!(a, b);
        assert_eq!(a.kind(), CoeffKind::Xci);
        let s = CoeffKey::sci(35.0, 80.0);
        assert_eq!(s.kind(), CoeffKind::Sci);
        assert_eq!((s.interferer_rate, s.delta_f), (0, 0));
    }

    #[test]
    fn put_then_get_is_bit_exact_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let fiber = FiberParams::default();
        let store = SciStore::open(&path, fiber).unwrap();
        let key = CoeffKey::xci(35.0, 52.5, 100.0, 80.0);
        let eta = 0.1 + 0.2;
        store.put(key, eta);
        assert_eq!(store.get(&key), Some(eta));
        store.flush().unwrap();
        store.flush().unwrap();

        let reopened = SciStore::open(&path, fiber).unwrap();
        assert_eq!(reopened.get(&key).map(f64::to_bits), Some(eta.to_bits()));
        assert_eq!(reopened.len(), 1);
    }

    #[test]
    fn last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let line = |eta: f64| format!("{{\"rc\":35.0,\"rk\":0.0,\"df\":0.0,\"lspan\":80.0,\"kind\":\"sci\",\"eta\":{eta}}}\n");
        std::fs::write(&path, line(1.0) + &line(2.0)).unwrap();
        assert!(SciStore::open(&path, FiberParams::default()).is_err());
        let fiber = serde_json::to_string(&FiberParams::<f64>::default()).unwrap();
        std::fs::write(SciStore::fiber_sidecar(&path), fiber).unwrap();
        let store = SciStore::open(&path, FiberParams::default()).unwrap();
        assert_eq!(store.get(&CoeffKey::sci(35.0, 80.0)), Some(2.0));
    }

    #[test]
    fn fiber_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let store = SciStore::open(&path, FiberParams::default()).unwrap();
        store.sci(35.0, 80.0).unwrap();
        store.flush().unwrap();
        let other = FiberParams {
            gamma_per_w_km: 1.4,
            ..Default::default()
        };
        assert!(SciStore::open(&path, other).is_err());
        assert!(SciStore::open(&path, FiberParams::default()).is_ok());
    }

    #[test]
    fn counters_track_computation() {
        let store = SciStore::in_memory(FiberParams::default());
        let a = store.sci(35.0, 80.0).unwrap();
        assert_eq!((store.hits(), store.misses()), (0, 1));
        let b = store.sci(35.0, 80.0).unwrap();
        assert_eq!((store.hits(), store.misses()), (1, 1));
        assert_eq!(a.to_bits(), b.to_bits());
        let n = store
            .ensure([CoeffKey::sci(35.0, 80.0), CoeffKey::sci(52.5, 80.0), CoeffKey::sci(52.5, 80.0)])
            .unwrap();
        assert_eq!(n, 1);
        assert_eq!(store.misses(), 2);
    }
}
