//! Gradient-boosted regression trees on binned features, squared-error loss.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{feature_names, FeatureRow, Features, N_FEATURES};
use crate::error::{Error, Result};

mod forest;

use forest::Forest;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const MIN_TRAIN_ROWS: usize = 100;
const MAX_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbmParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub row_subsample: f64,
    pub histogram_bins: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_trees: 400,
            max_depth: 6,
            learning_rate: 0.1,
            min_samples_leaf: 20,
            row_subsample: 0.8,
            histogram_bins: 256,
            early_stop_patience: 30,
            seed: 42,
        }
    }
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning_rate must lie in (0, 1]"));
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return Err(Error::invalid("row_subsample must lie in (0, 1]"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if !(2..=MAX_BINS).contains(&self.histogram_bins) {
            return Err(Error::invalid(format!("histogram_bins must lie in 2..={MAX_BINS}")));
        }
        if self.early_stop_patience == 0 {
            return Err(Error::invalid("early_stop_patience must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub format_version: u32,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub feature_names: Vec<String>,
    pub params: GbmParams,
    /// Round index (0-based) with the lowest validation RMSE, if validated.
    pub best_round: Option<usize>,
    pub train_rmse_history: Vec<f64>,
    pub val_rmse_history: Vec<f64>,
    /// Histogram bin edges per feature; every split threshold is one of them.
    pub bin_edges: Vec<Vec<f64>>,
    #[serde(skip)]
    compiled: CompiledCache,
}

/// Lazily built inference layout; ignored by equality and serialization.
#[derive(Debug, Default)]
struct CompiledCache(OnceLock<Option<Forest>>);

impl Clone for CompiledCache {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl PartialEq for CompiledCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl GbmModel {
    /// Model with no trees; predicts `base_score` everywhere.
    pub fn constant(base_score: f64, params: GbmParams) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            base_score,
            trees: Vec::new(),
            feature_names: feature_names(),
            params,
            best_round: None,
            train_rmse_history: Vec::new(),
            val_rmse_history: Vec::new(),
            bin_edges: Vec::new(),
            compiled: CompiledCache::default(),
        }
    }

    /// `base_score` plus every tree's leaf; see [`forest::finish`] for the summation order.
    pub fn predict(&self, x: &Features) -> f64 {
        match self.compiled.0.get_or_init(|| Forest::compile(&self.trees, &self.bin_edges)) {
            Some(forest) => forest.predict(self.base_score, x),
            None => forest::ordered_sum(self.base_score, self.trees.iter().map(|t| t.predict(x))),
        }
    }

    pub fn predict_batch(&self, rows: &[Features]) -> Vec<f64> {
        rows.par_iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(s)?;
        match probe.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            other => {
                return Err(Error::Model(format!(
                    "unsupported model format version {other:?} (expected {MODEL_FORMAT_VERSION})"
                )))
            }
        }
        let model: Self = serde_json::from_value(probe)?;
        if let Some(bad) = model.trees.iter().flat_map(|t| &t.nodes).find_map(|n| match *n {
            Node::Split { feature, .. } if feature >= N_FEATURES => Some(feature),
            _ => None,
        }) {
            return Err(Error::Model(format!("feature index {bad} out of range")));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Writes `round,train_rmse,val_rmse`; the validation column is empty
    /// when training ran without a validation set.
    pub fn write_training_log(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "round,train_rmse,val_rmse").map_err(io)?;
        for (i, tr) in self.train_rmse_history.iter().enumerate() {
            match self.val_rmse_history.get(i) {
                Some(v) => writeln!(w, "{},{tr},{v}", i + 1),
                None => writeln!(w, "{},{tr},", i + 1),
            }
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Per-feature bin edges: bin(x) is the first `i` with `x <= edges[i]`.
struct Binner {
    edges: Vec<Vec<f64>>,
}

impl Binner {
    fn fit(x: &[Features], max_bins: usize) -> Self {
        let edges = (0..N_FEATURES)
            .map(|f| {
                let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
                vals.sort_by(f64::total_cmp);
                let mut distinct = vals.clone();
                distinct.dedup();
                if distinct.len() <= max_bins {
                    distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
                } else {
                    let n = vals.len();
                    let mut e: Vec<f64> = (1..max_bins).map(|i| vals[i * n / max_bins - 1]).collect();
                    e.dedup();
                    if e.last() == distinct.last() {
                        e.pop();
                    }
                    e
                }
            })
            .collect();
        Self { edges }
    }

    fn bin(&self, f: usize, v: f64) -> u8 {
        self.edges[f].partition_point(|&e| e < v) as u8
    }

    /// Column-major binned matrix.
    fn transform(&self, x: &[Features]) -> Vec<Vec<u8>> {
        (0..N_FEATURES)
            .map(|f| x.iter().map(|r| self.bin(f, r[f])).collect())
            .collect()
    }
}

#[derive(Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    bin: usize,
    gain: f64,
}

struct TreeBuilder<'a> {
    bins: &'a [Vec<u8>],
    binner: &'a Binner,
    residual: &'a [f64],
    params: &'a GbmParams,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, rows: &[u32]) -> usize {
        let sum: f64 = rows.iter().map(|&r| self.residual[r as usize]).sum();
        let value = self.params.learning_rate * sum / rows.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &[u32]) -> Option<SplitCandidate> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = rows.iter().map(|&r| self.residual[r as usize]).sum();
        let parent = total * total / n as f64;
        let per_feature: Vec<Option<SplitCandidate>> = (0..N_FEATURES)
            .into_par_iter()
            .map(|f| {
                let n_edges = self.binner.edges[f].len();
                if n_edges == 0 {
                    return None;
                }
                let col = &self.bins[f];
                let mut sum = [0.0f64; MAX_BINS];
                let mut cnt = [0usize; MAX_BINS];
                for &r in rows {
                    let b = col[r as usize] as usize;
                    sum[b] += self.residual[r as usize];
                    cnt[b] += 1;
                }
                let mut best: Option<SplitCandidate> = None;
                let (mut sl, mut nl) = (0.0, 0usize);
                for b in 0..n_edges {
                    sl += sum[b];
                    nl += cnt[b];
                    let nr = n - nl;
                    if nl < min_leaf || cnt[b] == 0 {
                        continue;
                    }
                    if nr < min_leaf {
                        break;
                    }
                    let sr = total - sl;
                    let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
                    if gain > best.map_or(0.0, |c| c.gain) {
                        best = Some(SplitCandidate { feature: f, bin: b, gain });
                    }
                }
                best
            })
            .collect();
        per_feature
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<SplitCandidate>, c| match acc {
                Some(a) if a.gain >= c.gain => Some(a),
                _ => Some(c),
            })
    }

    fn grow(&mut self, rows: Vec<u32>, depth: usize) -> usize {
        let split = if depth < self.params.max_depth {
            self.best_split(&rows)
        } else {
            None
        };
        let Some(s) = split else {
            return self.leaf(&rows);
        };
        let col = &self.bins[s.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            rows.into_iter().partition(|&r| col[r as usize] as usize <= s.bin);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[at] = Node::Split {
            feature: s.feature,
            threshold: self.binner.edges[s.feature][s.bin],
            left,
            right,
            gain: s.gain,
        };
        at
    }
}

fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    (sse / y.len() as f64).sqrt()
}

fn split_rows(rows: &[FeatureRow]) -> (Vec<Features>, Vec<f64>) {
    (
        rows.iter().map(|r| r.features).collect(),
        rows.iter().map(|r| r.label_eta_db).collect(),
    )
}

/// Fits a boosted ensemble. With an empty validation set all `n_trees`
/// rounds are kept; otherwise training stops once validation RMSE has not
/// improved for `early_stop_patience` rounds and the ensemble is truncated
/// to the best round.
pub fn train(train_rows: &[FeatureRow], val_rows: &[FeatureRow], params: &GbmParams) -> Result<GbmModel> {
    let (x, y) = split_rows(train_rows);
    let (xv, yv) = split_rows(val_rows);
    train_matrix(&x, &y, &xv, &yv, params)
}

pub fn train_matrix(x: &[Features], y: &[f64], xv: &[Features], yv: &[f64], params: &GbmParams) -> Result<GbmModel> {
    params.validate()?;
    if x.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if x.len() < MIN_TRAIN_ROWS {
        return Err(Error::invalid(format!(
            "training needs at least {MIN_TRAIN_ROWS} rows, got {}",
            x.len()
        )));
    }
    if x.len() != y.len() || xv.len() != yv.len() {
        return Err(Error::invalid("feature and label counts differ"));
    }
    if y.iter().chain(yv).chain(x.iter().chain(xv).flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }

    let base_score = y.iter().sum::<f64>() / y.len() as f64;
    let mut model = GbmModel::constant(base_score, *params);
    if y.iter().all(|&v| v == y[0]) {
        model.base_score = y[0];
        return Ok(model);
    }

    let binner = Binner::fit(x, params.histogram_bins);
    model.bin_edges = binner.edges.clone();
    let bins = binner.transform(x);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = x.len();
    let n_sample = ((params.row_subsample * n as f64).round() as usize).clamp(1, n);

    let mut pred = vec![base_score; n];
    let mut pred_val = vec![base_score; xv.len()];
    let mut residual = vec![0.0; n];
    let mut best: Option<(usize, f64)> = None;

    for round in 0..params.n_trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let mut rows: Vec<u32> = if n_sample == n {
            (0..n as u32).collect()
        } else {
            index::sample(&mut rng, n, n_sample).into_iter().map(|i| i as u32).collect()
        };
        rows.sort_unstable();

        let mut builder = TreeBuilder {
            bins: &bins,
            binner: &binner,
            residual: &residual,
            params,
            nodes: Vec::new(),
        };
        builder.grow(rows, 0);
        let tree = Tree { nodes: builder.nodes };

        pred.par_iter_mut().zip(x.par_iter()).for_each(|(p, r)| *p += tree.predict(r));
        pred_val.par_iter_mut().zip(xv.par_iter()).for_each(|(p, r)| *p += tree.predict(r));
        model.trees.push(tree);
        model.train_rmse_history.push(rmse(&pred, y));

        if !xv.is_empty() {
            let v = rmse(&pred_val, yv);
            model.val_rmse_history.push(v);
            match best {
                Some((_, b)) if v >= b => {}
                _ => best = Some((round, v)),
            }
            let best_round = best.expect("set above").0;
            if round - best_round >= params.early_stop_patience {
                break;
            }
        }
    }

    if let Some((best_round, _)) = best {
        model.trees.truncate(best_round + 1);
        model.best_round = Some(best_round);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub index: usize,
    pub name: String,
    pub gain: f64,
}

/// Total split gain per feature, sorted descending (index order on ties).
pub fn feature_importance(model: &GbmModel) -> Vec<FeatureImportance> {
    let mut gain = [0.0f64; N_FEATURES];
    for node in model.trees.iter().flat_map(|t| &t.nodes) {
        if let Node::Split { feature, gain: g, .. } = *node {
            gain[feature] += g;
        }
    }
    let mut out: Vec<FeatureImportance> = gain
        .iter()
        .enumerate()
        .map(|(index, &gain)| FeatureImportance {
            index,
            name: model.feature_names.get(index).cloned().unwrap_or_else(|| format!("f{index}")),
            gain,
        })
        .collect();
    out.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.index.cmp(&b.index)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneGrid {
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub row_subsample: Vec<f64>,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            max_depth: vec![4, 6, 8],
            learning_rate: vec![0.05, 0.1],
            row_subsample: vec![0.8, 1.0],
        }
    }
}

impl TuneGrid {
    pub fn candidates(&self, base: &GbmParams) -> Vec<GbmParams> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &learning_rate in &self.learning_rate {
                for &row_subsample in &self.row_subsample {
                    out.push(GbmParams {
                        max_depth,
                        learning_rate,
                        row_subsample,
                        ..*base
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub params: GbmParams,
    pub val_rmse: f64,
    pub trees: usize,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best: GbmParams,
    pub model: GbmModel,
    pub candidates: Vec<TuneCandidate>,
}

/// Exhaustive grid search scored by validation RMSE; ties go to the
/// candidate with fewer trees, then the shallower one.
pub fn tune(train_rows: &[FeatureRow], val_rows: &[FeatureRow], grid: &TuneGrid, base: &GbmParams) -> Result<TuneOutcome> {
    if val_rows.is_empty() {
        return Err(Error::invalid("tuning needs a validation set"));
    }
    let params = grid.candidates(base);
    if params.is_empty() {
        return Err(Error::invalid("tuning grid is empty"));
    }
    let (x, y) = split_rows(train_rows);
    let (xv, yv) = split_rows(val_rows);
    let mut best: Option<(TuneCandidate, GbmModel)> = None;
    let mut candidates = Vec::with_capacity(params.len());
    for p in params {
        let model = train_matrix(&x, &y, &xv, &yv, &p)?;
        let cand = TuneCandidate {
            params: p,
            val_rmse: rmse(&model.predict_batch(&xv), &yv),
            trees: model.trees.len(),
        };
        let better = match &best {
            None => true,
            Some((b, _)) => cand
                .val_rmse
                .total_cmp(&b.val_rmse)
                .then(cand.trees.cmp(&b.trees))
                .then(cand.params.max_depth.cmp(&b.params.max_depth))
                .is_lt(),
        };
        candidates.push(cand.clone());
        if better {
            best = Some((cand, model));
        }
    }
    let (cand, model) = best.expect("grid is non-empty");
    Ok(TuneOutcome {
        best: cand.params,
        model,
        candidates,
    })
}
