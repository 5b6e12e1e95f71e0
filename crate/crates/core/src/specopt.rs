//! Spectral assignment on a single link: first-fit versus an exhaustive
//! slot sweep that minimizes the summed NLI coefficient.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phys::{Channel, ChannelConfig, LinkConfig, DEFAULT_BAND_SLOTS};
use crate::qot::{estimate_snr, Estimator, EstimatorKind};

/// Occupancy of one link's band plus the channels placed on it, in
/// placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub band_slots: usize,
    occupied: Vec<bool>,
    pub channels: Vec<Channel>,
}

impl Spectrum {
    pub fn new(band_slots: usize) -> Self {
        Self {
            band_slots,
            occupied: vec![false; band_slots],
            channels: Vec::new(),
        }
    }

    pub fn is_occupied(&self, slot: usize) -> bool {
        self.occupied[slot]
    }

    pub fn occupied_slots(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn is_free(&self, start: usize, width: usize) -> bool {
        start + width <= self.band_slots && self.occupied[start..start + width].iter().all(|&o| !o)
    }

    /// Every start slot with `width` free contiguous slots, ascending.
    pub fn feasible_starts(&self, width: usize) -> Vec<usize> {
        if width == 0 || width > self.band_slots {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut run = 0usize;
        for (slot, &occ) in self.occupied.iter().enumerate() {
            run = if occ { 0 } else { run + 1 };
            if run >= width {
                out.push(slot + 1 - width);
            }
        }
        out
    }

    pub fn place(&mut self, channel: Channel) -> Result<()> {
        if !self.is_free(channel.start_slot, channel.slot_count) {
            return Err(Error::Overlap(format!(
                "slots {}..{} are not free",
                channel.start_slot,
                channel.end_slot()
            )));
        }
        self.occupied[channel.start_slot..channel.end_slot()].fill(true);
        self.channels.push(channel);
        Ok(())
    }

    /// The channels as a uniform-span link.
    pub fn link(&self, span_length_km: f64, span_count: usize) -> LinkConfig {
        LinkConfig {
            span_length_km,
            span_count,
            channels: self.channels.clone(),
            band_slots: self.band_slots,
        }
    }
}

/// Lowest start slot with room for `demand`.
pub fn first_fit_place(spectrum: &Spectrum, demand: ChannelConfig) -> Result<usize> {
    let width = demand.slot_count();
    spectrum
        .feasible_starts(width)
        .first()
        .copied()
        .ok_or(Error::NoFeasibleSlot { slots: width })
}

/// Link geometry plus the estimator used as the placement objective.
pub struct Placer<'a> {
    pub estimator: &'a Estimator,
    pub span_length_km: f64,
    pub span_count: usize,
    calls: AtomicU64,
}

impl<'a> Placer<'a> {
    pub fn new(estimator: &'a Estimator, span_length_km: f64, span_count: usize) -> Self {
        Self {
            estimator,
            span_length_km,
            span_count,
            calls: AtomicU64::new(0),
        }
    }

    /// Number of per-channel NLI evaluations issued so far.
    pub fn nli_computations(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Sum of full-link NLI coefficients (1/W^2) over every channel of `spectrum`.
    pub fn objective(&self, spectrum: &Spectrum) -> Result<f64> {
        let link = spectrum.link(self.span_length_km, self.span_count);
        self.calls.fetch_add(link.channels.len() as u64, Ordering::Relaxed);
        let mut total = 0.0;
        for cut in 0..link.channels.len() {
            total += self.estimator.eta(&link, cut)?;
        }
        Ok(total)
    }

    /// Objective with `demand` tentatively placed at each feasible slot.
    pub fn sweep(&self, spectrum: &Spectrum, demand: ChannelConfig) -> Result<Vec<(usize, f64)>> {
        let starts = spectrum.feasible_starts(demand.slot_count());
        if starts.is_empty() {
            return Err(Error::NoFeasibleSlot {
                slots: demand.slot_count(),
            });
        }
        starts
            .par_iter()
            .map(|&s| {
                let mut trial = spectrum.clone();
                trial.place(Channel::new(demand, s))?;
                Ok((s, self.objective(&trial)?))
            })
            .collect()
    }

    /// Start slot minimizing the objective; lowest slot on ties.
    pub fn optimize_place(&self, spectrum: &Spectrum, demand: ChannelConfig) -> Result<usize> {
        Ok(argmin(&self.sweep(spectrum, demand)?).0)
    }
}

/// Lowest-slot minimum of a slot-ascending sweep.
fn argmin(sweep: &[(usize, f64)]) -> (usize, f64) {
    let mut best = sweep[0];
    for &(s, v) in &sweep[1..] {
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

pub fn optimize_place(
    spectrum: &Spectrum,
    demand: ChannelConfig,
    estimator: &Estimator,
    span_length_km: f64,
    span_count: usize,
) -> Result<usize> {
    Placer::new(estimator, span_length_km, span_count).optimize_place(spectrum, demand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub span_count: usize,
    pub span_length_km: f64,
    pub fill: f64,
    pub band_slots: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            span_count: 12,
            span_length_km: 80.0,
            fill: 0.5,
            band_slots: DEFAULT_BAND_SLOTS,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fill > 0.0 && self.fill <= 1.0) {
            return Err(Error::invalid("fill must lie in (0, 1]"));
        }
        if self.span_count == 0 || !(self.span_length_km > 0.0) {
            return Err(Error::invalid("span count and length must be positive"));
        }
        Ok(())
    }
}

/// Uniform draws over the valid configurations until the next one would
/// push the occupied slots past `fill * band_slots`.
pub fn demand_sequence(seed: u64, fill: f64, band_slots: usize) -> Vec<ChannelConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = ChannelConfig::all_valid();
    let target = fill * band_slots as f64;
    let mut out = Vec::new();
    let mut used = 0usize;
    loop {
        let c = *configs.choose(&mut rng).expect("non-empty config set");
        if (used + c.slot_count()) as f64 > target {
            return out;
        }
        used += c.slot_count();
        out.push(c);
    }
}

/// One greedy step of the optimized placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementStep {
    pub demand: ChannelConfig,
    pub chosen_slot: usize,
    pub chosen_objective: f64,
    /// First-fit slot in the same spectrum state, and its objective.
    pub first_fit_slot: usize,
    pub first_fit_objective: f64,
    pub feasible_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub config: ScenarioConfig,
    pub estimator: EstimatorKind,
    pub demands: Vec<ChannelConfig>,
    pub first_fit_layout: Vec<Channel>,
    pub optimized_layout: Vec<Channel>,
    /// Oracle SNR per demand (placement order).
    pub first_fit_snr_db: Vec<f64>,
    pub optimized_snr_db: Vec<f64>,
    pub average_gain_db: f64,
    pub nli_computations: u64,
    pub steps: Vec<PlacementStep>,
    /// Not serialized, so reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Places one demand sequence by first-fit and by the slot sweep under
/// `estimator`, then scores both layouts with `oracle`.
pub fn run_scenario(cfg: &ScenarioConfig, estimator: &Estimator, oracle: &Estimator) -> Result<PlacementReport> {
    cfg.validate()?;
    if oracle.kind() != EstimatorKind::Oracle {
        return Err(Error::invalid("layouts must be scored by the oracle estimator"));
    }
    let started = Instant::now();
    let demands = demand_sequence(cfg.seed, cfg.fill, cfg.band_slots);

    let mut ff = Spectrum::new(cfg.band_slots);
    for &d in &demands {
        let s = first_fit_place(&ff, d)?;
        ff.place(Channel::new(d, s))?;
    }

    let placer = Placer::new(estimator, cfg.span_length_km, cfg.span_count);
    let mut opt = Spectrum::new(cfg.band_slots);
    let mut steps = Vec::with_capacity(demands.len());
    for &d in &demands {
        let sweep = placer.sweep(&opt, d)?;
        let (chosen_slot, chosen_objective) = argmin(&sweep);
        let (first_fit_slot, first_fit_objective) = sweep[0];
        steps.push(PlacementStep {
            demand: d,
            chosen_slot,
            chosen_objective,
            first_fit_slot,
            first_fit_objective,
            feasible_slots: sweep.len(),
        });
        opt.place(Channel::new(d, chosen_slot))?;
    }

    let ff_link = ff.link(cfg.span_length_km, cfg.span_count);
    let opt_link = opt.link(cfg.span_length_km, cfg.span_count);
    let snrs = |link: &LinkConfig| -> Result<Vec<f64>> {
        (0..link.channels.len())
            .into_par_iter()
            .map(|c| estimate_snr(link, c, oracle))
            .collect()
    };
    let first_fit_snr_db = snrs(&ff_link)?;
    let optimized_snr_db = snrs(&opt_link)?;
    let average_gain_db = if demands.is_empty() {
        0.0
    } else {
        optimized_snr_db
            .iter()
            .zip(&first_fit_snr_db)
            .map(|(o, f)| o - f)
            .sum::<f64>()
            / demands.len() as f64
    };

    Ok(PlacementReport {
        config: cfg.clone(),
        estimator: estimator.kind(),
        demands,
        first_fit_layout: ff.channels,
        optimized_layout: opt.channels,
        first_fit_snr_db,
        optimized_snr_db,
        average_gain_db,
        nli_computations: placer.nli_computations(),
        steps,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
