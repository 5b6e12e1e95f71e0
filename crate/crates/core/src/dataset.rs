//! Training corpus: random link configurations, SCI-based feature vectors
//! and oracle labels, split by link into train / validation / test.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nli::{link_keys, oracle_eta, SciStore};
use crate::num::lin_to_db;
use crate::phys::{Channel, ChannelConfig, FiberParams, LinkConfig, DEFAULT_BAND_SLOTS};

pub const N_FEATURES: usize = 25;
pub const N_NEIGHBORS: usize = 10;
pub const SCI_SENTINEL_DB: f64 = -100.0;
pub const DF_SENTINEL_GHZ: f64 = 6000.0;
pub const FORMAT_VERSION: u32 = 1;
/// Links whose coefficients are resolved together during generation.
const KEY_BATCH_LINKS: usize = 25;

pub type Features = [f64; N_FEATURES];

/// Column names in feature order.
pub fn feature_names() -> Vec<String> {
    let mut names = vec!["cut_sci_db".to_string()];
    names.extend((1..=N_NEIGHBORS).map(|i| format!("nb{i}_sci_db")));
    names.extend((1..=N_NEIGHBORS).map(|i| format!("nb{i}_df_ghz")));
    names.extend(
        ["cut_power_dbm", "channel_count", "span_length_km", "span_count"]
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub features: Features,
    pub label_eta_db: f64,
    pub link_id: u64,
    pub cut_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.csv",
            Split::Val => "val.csv",
            Split::Test => "test.csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn link_count(self) -> usize {
        match self {
            Scale::Desk => 500,
            Scale::Paper => 2200,
        }
    }
}

/// Contents of `generation.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub seed: u64,
    pub scale: Scale,
    /// Overrides the count implied by `scale`.
    pub link_count: Option<usize>,
    pub fill_min: f64,
    pub fill_max: f64,
    pub span_lengths_km: Vec<f64>,
    pub max_span_count: usize,
    pub band_slots: usize,
    pub split: [f64; 3],
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scale: Scale::Desk,
            link_count: None,
            fill_min: 0.75,
            fill_max: 0.95,
            span_lengths_km: vec![60.0, 80.0, 100.0, 120.0],
            max_span_count: 50,
            band_slots: DEFAULT_BAND_SLOTS,
            split: [0.7, 0.1, 0.2],
        }
    }
}

impl GenerationConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn links(&self) -> usize {
        self.link_count.unwrap_or_else(|| self.scale.link_count())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.fill_min && self.fill_min <= self.fill_max && self.fill_max <= 1.0) {
            return Err(Error::invalid("fill range must satisfy 0 < min <= max <= 1"));
        }
        if self.span_lengths_km.is_empty() || self.span_lengths_km.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("span lengths must be non-empty and positive"));
        }
        if self.max_span_count == 0 {
            return Err(Error::invalid("max span count must be at least 1"));
        }
        let total: f64 = self.split.iter().sum();
        if self.split.iter().any(|&s| s < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split fractions must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    fn bump(&mut self, split: Split, by: usize) {
        match split {
            Split::Train => self.train += by,
            Split::Val => self.val += by,
            Split::Test => self.test += by,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub link_config_count: usize,
    pub links: SplitCounts,
    pub rows: SplitCounts,
    pub generation: GenerationConfig,
    pub fiber: FiberParams<f64>,
    /// SCI features are full-link values: per-span coefficient plus 10 log10(N).
    pub sci_feature_scope: String,
    pub feature_names: Vec<String>,
}

/// Draws one link: span layout, fill target and a random channel layout.
///
/// Channels are drawn uniformly from the valid (modulation, rate) set until
/// the next one would exceed the fill target; their order is shuffled and
/// the free slots are split into the gaps by a uniform random composition.
/// The returned channels are sorted by frequency.
pub fn sample_link_config<R: Rng>(rng: &mut R, cfg: &GenerationConfig) -> LinkConfig {
    let span_length_km = *cfg.span_lengths_km.choose(rng).expect("validated non-empty");
    let span_count = rng.gen_range(1..=cfg.max_span_count);
    let fill = if cfg.fill_max > cfg.fill_min {
        rng.gen_range(cfg.fill_min..=cfg.fill_max)
    } else {
        cfg.fill_min
    };
    let target = fill * cfg.band_slots as f64;
    let configs = ChannelConfig::all_valid();

    let mut drawn: Vec<ChannelConfig> = Vec::new();
    let mut occupied = 0usize;
    loop {
        let c = *configs.choose(rng).expect("non-empty config set");
        if (occupied + c.slot_count()) as f64 > target {
            break;
        }
        occupied += c.slot_count();
        drawn.push(c);
    }
    drawn.shuffle(rng);

    let free = cfg.band_slots - occupied;
    let n = drawn.len();
    let mut bars: Vec<usize> = index::sample(rng, free + n, n).into_vec();
    bars.sort_unstable();
    let mut channels = Vec::with_capacity(n);
    let mut slot = 0usize;
    let mut prev_bar: Option<usize> = None;
    for (c, &bar) in drawn.iter().zip(&bars) {
        let gap = match prev_bar {
            None => bar,
            Some(p) => bar - p - 1,
        };
        slot += gap;
        let ch = Channel::new(*c, slot);
        slot = ch.end_slot();
        channels.push(ch);
        prev_bar = Some(bar);
    }

    LinkConfig {
        span_length_km,
        span_count,
        channels,
        band_slots: cfg.band_slots,
    }
}

/// Deterministic per-link RNG.
pub fn link_rng(seed: u64, link_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ link_id)
}

/// Full-link SCI coefficient of a channel in dB.
fn sci_db(link: &LinkConfig, ch: &Channel, store: &SciStore) -> Result<f64> {
    let per_span = store.sci(ch.symbol_rate_gbd, link.span_length_km)?;
    Ok(lin_to_db(per_span * link.span_count as f64))
}

/// Builds the 25-element feature vector of channel `cut_index`.
///
/// Layout: CUT SCI (dB); SCI of the ten nearest neighbors (dB); their signed
/// spacing (GHz); CUT launch power (dBm); channel count; span length (km);
/// span count. Neighbors are ordered by |delta f|, lower frequency first on
/// ties; missing neighbors use the sentinels.
pub fn extract_features(link: &LinkConfig, cut_index: usize, store: &SciStore) -> Result<Features> {
    let cut = link.channel(cut_index)?;
    let mut f = [0.0; N_FEATURES];
    f[0] = sci_db(link, cut, store)?;

    let mut neighbors: Vec<(f64, &Channel)> = link
        .channels
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != cut_index)
        .map(|(_, c)| (c.center_freq_ghz - cut.center_freq_ghz, c))
        .collect();
    let nearest = |a: &(f64, &Channel), b: &(f64, &Channel)| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0));
    if neighbors.len() > N_NEIGHBORS {
        neighbors.select_nth_unstable_by(N_NEIGHBORS, nearest);
        neighbors.truncate(N_NEIGHBORS);
    }
    neighbors.sort_unstable_by(nearest);

    for slot in 0..N_NEIGHBORS {
        match neighbors.get(slot) {
            Some(&(df, ch)) => {
                f[1 + slot] = sci_db(link, ch, store)?;
                f[1 + N_NEIGHBORS + slot] = df;
            }
            None => {
                f[1 + slot] = SCI_SENTINEL_DB;
                f[1 + N_NEIGHBORS + slot] = DF_SENTINEL_GHZ;
            }
        }
    }
    f[21] = cut.launch_power_dbm;
    f[22] = link.channels.len() as f64;
    f[23] = link.span_length_km;
    f[24] = link.span_count as f64;
    Ok(f)
}

/// Oracle NLI coefficient of channel `cut_index` in dB (re 1/W^2).
pub fn label(link: &LinkConfig, cut_index: usize, store: &SciStore) -> Result<f64> {
    Ok(lin_to_db(oracle_eta(link, cut_index, store)?))
}

/// Assigns each link id to a split; whole links never straddle splits.
pub fn assign_splits(link_count: usize, fractions: [f64; 3], seed: u64) -> Vec<Split> {
    let n_train = (fractions[0] * link_count as f64).round() as usize;
    let n_val = ((fractions[1] * link_count as f64).round() as usize).min(link_count - n_train.min(link_count));
    let mut ids: Vec<usize> = (0..link_count).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Split::Test; link_count];
    for (rank, &id) in ids.iter().enumerate() {
        out[id] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkRecord {
    pub link_id: u64,
    pub split: Split,
    pub link: LinkConfig,
}

/// Generated corpus held in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub links: Vec<LinkRecord>,
    pub train: Vec<FeatureRow>,
    pub val: Vec<FeatureRow>,
    pub test: Vec<FeatureRow>,
}

impl Dataset {
    pub fn rows(&self, split: Split) -> &[FeatureRow] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn links_in(&self, split: Split) -> impl Iterator<Item = &LinkRecord> {
        self.links.iter().filter(move |r| r.split == split)
    }

    /// Writes CSV splits, `links.jsonl` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in Split::ALL {
            write_rows(&dir.join(split.file_name()), self.rows(split))?;
        }
        let links_path = dir.join("links.jsonl");
        let file = File::create(&links_path).map_err(|e| Error::io(&links_path, e))?;
        let mut w = BufWriter::new(file);
        for rec in &self.links {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(&links_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&links_path, e))?;
        write_json(&dir.join("manifest.json"), &self.manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = read_json(&dir.join("manifest.json"))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "dataset format version {} unsupported (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let links_path = dir.join("links.jsonl");
        let file = File::open(&links_path).map_err(|e| Error::io(&links_path, e))?;
        let mut links = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&links_path, e))?;
            if !line.trim().is_empty() {
                links.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self {
            train: read_rows(&dir.join(Split::Train.file_name()))?,
            val: read_rows(&dir.join(Split::Val.file_name()))?,
            test: read_rows(&dir.join(Split::Test.file_name()))?,
            manifest,
            links,
        })
    }
}

/// Feature rows for every channel of one link, in channel order.
pub fn link_rows(link_id: u64, link: &LinkConfig, store: &SciStore) -> Result<Vec<FeatureRow>> {
    (0..link.channels.len())
        .map(|cut| {
            Ok(FeatureRow {
                features: extract_features(link, cut, store)?,
                label_eta_db: label(link, cut, store)?,
                link_id,
                cut_index: cut,
            })
        })
        .collect()
}

/// Generates the full corpus in memory. Coefficients missing from `store`
/// are computed (in parallel) and kept there.
pub fn generate(cfg: &GenerationConfig, store: &SciStore) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.links();
    let links: Vec<LinkConfig> = (0..n as u64)
        .into_par_iter()
        .map(|id| sample_link_config(&mut link_rng(cfg.seed, id), cfg))
        .collect();
    let splits = assign_splits(n, cfg.split, cfg.seed);

    let mut rows_by_link: Vec<Vec<FeatureRow>> = Vec::with_capacity(n);
    for (batch_start, batch) in links.chunks(KEY_BATCH_LINKS).enumerate() {
        store.ensure(batch.iter().flat_map(link_keys))?;
        let rows: Vec<Vec<FeatureRow>> = batch
            .par_iter()
            .enumerate()
            .map(|(i, link)| link_rows((batch_start * KEY_BATCH_LINKS + i) as u64, link, store))
            .collect::<Result<_>>()?;
        rows_by_link.extend(rows);
    }

    let mut dataset = Dataset {
        manifest: DatasetManifest {
            format_version: FORMAT_VERSION,
            seed: cfg.seed,
            link_config_count: n,
            links: SplitCounts::default(),
            rows: SplitCounts::default(),
            generation: cfg.clone(),
            fiber: *store.fiber(),
            sci_feature_scope: "full-link".to_string(),
            feature_names: feature_names(),
        },
        links: Vec::with_capacity(n),
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (id, (link, rows)) in links.into_iter().zip(rows_by_link).enumerate() {
        let split = splits[id];
        dataset.manifest.links.bump(split, 1);
        dataset.manifest.rows.bump(split, rows.len());
        match split {
            Split::Train => dataset.train.extend(rows),
            Split::Val => dataset.val.extend(rows),
            Split::Test => dataset.test.extend(rows),
        }
        dataset.links.push(LinkRecord {
            link_id: id as u64,
            split,
            link,
        });
    }
    Ok(dataset)
}

fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = (0..N_FEATURES).map(|i| format!("f{i}")).collect();
    h.extend(["label", "link_id", "cut_index"].iter().map(|s| s.to_string()));
    h
}

pub fn write_rows(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(csv_header())?;
    let mut rec: Vec<String> = Vec::with_capacity(N_FEATURES + 3);
    for row in rows {
        rec.clear();
        rec.extend(row.features.iter().map(|v| v.to_string()));
        rec.push(row.label_eta_db.to_string());
        rec.push(row.link_id.to_string());
        rec.push(row.cut_index.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != N_FEATURES + 3 {
            return Err(Error::invalid(format!(
                "{}: expected {} columns, found {}",
                path.display(),
                N_FEATURES + 3,
                rec.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("{}: bad number `{}`: {e}", path.display(), &rec[i])))
        };
        let mut features = [0.0; N_FEATURES];
        for (i, f) in features.iter_mut().enumerate() {
            *f = num(i)?;
        }
        rows.push(FeatureRow {
            features,
            label_eta_db: num(N_FEATURES)?,
            link_id: num(N_FEATURES + 1)? as u64,
            cut_index: num(N_FEATURES + 2)? as usize,
        });
    }
    Ok(rows)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Default output layout of `gen-dataset`.
pub fn dataset_paths(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = Split::ALL.iter().map(|s| dir.join(s.file_name())).collect();
    v.push(dir.join("links.jsonl"));
    v.push(dir.join("manifest.json"));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::Modulation;

    fn qpsk(start: usize) -> Channel {
        Channel::new(ChannelConfig::new(Modulation::Qpsk, 100).unwrap(), start)
    }

    #[test]
    fn high_fill_accounting() {
        let cfg = GenerationConfig {
            fill_min: 0.95,
            fill_max: 0.95,
            ..Default::default()
        };
        for id in 0..20 {
            let link = sample_link_config(&mut link_rng(7, id), &cfg);
            link.validate().unwrap();
            let occ = link.occupied_slots();
            assert!(occ <= 380 && occ > 380 - 8, "occupied {occ}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let cfg = GenerationConfig::default();
        let a = sample_link_config(&mut link_rng(3, 11), &cfg);
        let b = sample_link_config(&mut link_rng(3, 11), &cfg);
        assert_eq!(a, b);
        for id in 0..30 {
            let link = sample_link_config(&mut link_rng(3, id), &cfg);
            assert!(cfg.span_lengths_km.contains(&link.span_length_km));
            assert!((1..=50).contains(&link.span_count));
            for c in &link.channels {
                assert!((10.0..=90.0).contains(&c.symbol_rate_gbd));
            }
            assert!(link.channels.windows(2).all(|w| w[0].end_slot() <= w[1].start_slot));
        }
    }

    #[test]
    fn split_counts() {
        let s = assign_splits(10, [0.7, 0.1, 0.2], 5);
        let count = |x: Split| s.iter().filter(|&&y| y == x).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (7, 1, 2));
        let s = assign_splits(500, [0.7, 0.1, 0.2], 9);
        let count = |x: Split| s.iter().filter(|&&y| y == x).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (350, 50, 100));
    }

    #[test]
    fn single_channel_padding() {
        let store = SciStore::in_memory(FiberParams::default());
        let link = LinkConfig::new(80.0, 3, vec![qpsk(100)]).unwrap();
        let f = extract_features(&link, 0, &store).unwrap();
        assert!(f[1..=10].iter().all(|&v| v == SCI_SENTINEL_DB));
        assert!(f[11..=20].iter().all(|&v| v == DF_SENTINEL_GHZ));
        assert_eq!(f[21], 0.0);
        assert_eq!(f[22], 1.0);
        assert_eq!((f[23], f[24]), (80.0, 3.0));
        let sci = store.sci(35.0, 80.0).unwrap();
        assert!((f[0] - 10.0 * (3.0 * sci).log10()).abs() < 1e-12);
        assert!(extract_features(&link, 1, &store).is_err());
    }

    #[test]
    fn mirrored_spectrum_negates_spacing() {
        let store = SciStore::in_memory(FiberParams::default());
        let cfgs = ChannelConfig::all_valid();
        // Channels on both sides with different footprints; mirror around slot 200.
        let layout = [(cfgs[0], 150usize), (cfgs[5], 170), (cfgs[12], 196), (cfgs[20], 230), (cfgs[30], 260)];
        let chans: Vec<Channel> = layout.iter().map(|&(c, s)| Channel::new(c, s)).collect();
        let mirrored: Vec<Channel> = layout
            .iter()
            .rev()
            .map(|&(c, s)| Channel::new(c, 400 - s - c.slot_count()))
            .collect();
        let a = LinkConfig::new(100.0, 2, chans).unwrap();
        let b = LinkConfig::new(100.0, 2, mirrored).unwrap();
        // Channel 2 maps to channel 2 under the mirror.
        let fa = extract_features(&a, 2, &store).unwrap();
        let fb = extract_features(&b, 2, &store).unwrap();
        for i in 0..4 {
            assert_eq!(fa[1 + i], fb[1 + i]);
            assert_eq!(fa[11 + i], -fb[11 + i]);
        }
    }

    #[test]
    fn twelve_channel_neighbors_match_exhaustive_sort() {
        let store = SciStore::in_memory(FiberParams::default());
        let chans: Vec<Channel> = (0..12).map(|i| qpsk(6 * i + usize::from(i == 9))).collect();
        let link = LinkConfig::new(60.0, 1, chans).unwrap();
        let cut = 5;
        let f = extract_features(&link, cut, &store).unwrap();
        // Exhaustive: every ordering of the others by (|df|, df).
        let c0 = link.channels[cut].center_freq_ghz;
        let mut dfs: Vec<f64> = link
            .channels
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != cut)
            .map(|(_, c)| c.center_freq_ghz - c0)
            .collect();
        for i in 0..dfs.len() {
            for j in i + 1..dfs.len() {
                let (a, b) = (dfs[i], dfs[j]);
                if b.abs() < a.abs() || (b.abs() == a.abs() && b < a) {
                    dfs.swap(i, j);
                }
            }
        }
        assert_eq!(&f[11..21], &dfs[..10]);
    }

    #[test]
    fn label_rules() {
        let store = SciStore::in_memory(FiberParams::default());
        let one = LinkConfig::new(80.0, 1, vec![qpsk(100)]).unwrap();
        let sci = store.sci(35.0, 80.0).unwrap();
        assert!((label(&one, 0, &store).unwrap() - 10.0 * sci.log10()).abs() < 1e-12);

        let ten = LinkConfig { span_count: 10, ..one.clone() };
        assert!((label(&ten, 0, &store).unwrap() - label(&one, 0, &store).unwrap() - 10.0).abs() < 1e-12);

        let two = LinkConfig::new(80.0, 1, vec![qpsk(100), qpsk(300)]).unwrap();
        assert!(label(&two, 0, &store).unwrap() > label(&one, 0, &store).unwrap());
    }

    #[test]
    fn generation_config_toml() {
        let cfg = GenerationConfig::from_toml_str("seed = 9\nlink_count = 12\nfill_min = 0.8\n").unwrap();
        assert_eq!(cfg.links(), 12);
        assert_eq!(cfg.seed, 9);
        assert_eq!(GenerationConfig::from_toml_str("scale = \"paper\"\n").unwrap().links(), 2200);
        assert!(GenerationConfig::from_toml_str("fill_min = 0.99\nfill_max = 0.5\n").is_err());
        assert!(GenerationConfig::from_toml_str("bogus = 1\n").is_err());
    }
}
