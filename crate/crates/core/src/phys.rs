//! Fiber constants, the flex-grid spectral layout, channel and link records,
//! and amplifier noise.
//!
//! Interfaces use GHz and dBm; the numerical kernels work in Hz and watts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{dbm_to_w, Real};

pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
pub const SLOT_WIDTH_GHZ: f64 = 12.5;
pub const DEFAULT_BAND_SLOTS: usize = 400;
/// FEC and framing overhead on the line rate.
pub const LINE_OVERHEAD: f64 = 0.40;
/// Spectral guard applied to the symbol rate before rounding to slots.
pub const GUARD_FACTOR: f64 = 1.10;
/// Symbol rate launched at 0 dBm; all other channels share its PSD.
pub const REFERENCE_SYMBOL_RATE_GBD: f64 = 35.0;
pub const MIN_SYMBOL_RATE_GBD: f64 = 10.0;
pub const MAX_SYMBOL_RATE_GBD: f64 = 90.0;
pub const MIN_DATA_RATE_GBPS: u32 = 100;
pub const MAX_DATA_RATE_GBPS: u32 = 600;
pub const DATA_RATE_STEP_GBPS: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberParams<T> {
    pub alpha_db_per_km: T,
    pub beta2_ps2_per_km: T,
    pub gamma_per_w_km: T,
    pub nf_db: T,
    pub center_freq_thz: T,
}

impl<T: Real> Default for FiberParams<T> {
    fn default() -> Self {
        Self {
            alpha_db_per_km: T::lit(0.2),
            beta2_ps2_per_km: T::lit(-21.7),
            gamma_per_w_km: T::lit(1.3),
            nf_db: T::lit(5.0),
            center_freq_thz: T::lit(193.41),
        }
    }
}

impl<T: Real> FiberParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_db_per_km > T::zero()) {
            return Err(Error::invalid("fiber attenuation must be positive"));
        }
        if !(self.gamma_per_w_km > T::zero()) {
            return Err(Error::invalid("fiber nonlinearity must be positive"));
        }
        if self.beta2_ps2_per_km == T::zero() || !self.beta2_ps2_per_km.is_finite() {
            return Err(Error::invalid("fiber dispersion must be non-zero"));
        }
        if !(self.center_freq_thz > T::zero()) {
            return Err(Error::invalid("reference frequency must be positive"));
        }
        Ok(())
    }

    /// Power attenuation in Np/km.
    pub fn alpha_np_per_km(&self) -> T {
        self.alpha_db_per_km * T::LN_10() / T::lit(10.0)
    }

    pub fn beta2_s2_per_km(&self) -> T {
        self.beta2_ps2_per_km * T::lit(1e-24)
    }

    pub fn photon_energy_j(&self) -> T {
        T::lit(PLANCK_J_S) * self.center_freq_thz * T::lit(1e12)
    }

    pub fn cast<U: Real>(&self) -> FiberParams<U> {
        FiberParams {
            alpha_db_per_km: U::lit(self.alpha_db_per_km.as_f64()),
            beta2_ps2_per_km: U::lit(self.beta2_ps2_per_km.as_f64()),
            gamma_per_w_km: U::lit(self.gamma_per_w_km.as_f64()),
            nf_db: U::lit(self.nf_db.as_f64()),
            center_freq_thz: U::lit(self.center_freq_thz.as_f64()),
        }
    }
}

impl FiberParams<f64> {
    /// Reads a `fiber.toml` override; missing keys keep their defaults.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let p: Self = toml::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }
}

/// One amplified fiber span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span<T> {
    pub length_km: T,
    pub fiber: FiberParams<T>,
}

impl<T: Real> Span<T> {
    pub fn new(length_km: T, fiber: FiberParams<T>) -> Self {
        Self { length_km, fiber }
    }

    pub fn effective_length_km(&self) -> T {
        effective_length(self.fiber.alpha_db_per_km, self.length_km)
    }

    pub fn asymptotic_length_km(&self) -> T {
        T::one() / self.fiber.alpha_np_per_km()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam32,
        Modulation::Qam64,
    ];

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam32 => "32QAM",
            Modulation::Qam64 => "64QAM",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QPSK" => Ok(Modulation::Qpsk),
            "16QAM" | "16-QAM" | "QAM16" => Ok(Modulation::Qam16),
            "32QAM" | "32-QAM" | "QAM32" => Ok(Modulation::Qam32),
            "64QAM" | "64-QAM" | "QAM64" => Ok(Modulation::Qam64),
            _ => Err(Error::UnknownModulation(s.to_string())),
        }
    }
}

/// Symbol rate of a dual-polarization transceiver carrying `data_rate_gbps`.
///
/// The rate must sit on the 100..=600 Gbit/s grid with 50 Gbit/s steps. The
/// [10, 90] GBd feasibility window is enforced by [`ChannelConfig::new`].
pub fn symbol_rate<T: Real>(data_rate_gbps: T, modulation: Modulation) -> Result<T> {
    let r = data_rate_gbps.as_f64();
    let on_grid = r >= MIN_DATA_RATE_GBPS as f64
        && r <= MAX_DATA_RATE_GBPS as f64
        && (r / DATA_RATE_STEP_GBPS as f64).fract() == 0.0;
    if !on_grid {
        return Err(Error::invalid(format!(
            "data rate {r} Gbit/s outside {MIN_DATA_RATE_GBPS}..={MAX_DATA_RATE_GBPS} step {DATA_RATE_STEP_GBPS}"
        )));
    }
    let bits = T::lit(2.0 * modulation.bits_per_symbol() as f64);
    Ok(data_rate_gbps * T::lit(1.0 + LINE_OVERHEAD) / bits)
}

/// Launch power for a PSD-equalized channel.
pub fn launch_power<T: Real>(symbol_rate_gbd: T) -> Result<T> {
    if !(symbol_rate_gbd > T::zero()) {
        return Err(Error::invalid("symbol rate must be positive"));
    }
    Ok(T::lit(10.0) * (symbol_rate_gbd / T::lit(REFERENCE_SYMBOL_RATE_GBD)).log10())
}

/// Number of 12.5 GHz slots occupied by a channel.
pub fn slot_footprint<T: Real>(symbol_rate_gbd: T) -> usize {
    let slots = symbol_rate_gbd.as_f64() * GUARD_FACTOR / SLOT_WIDTH_GHZ;
    // Absorb representation error so exact multiples do not round up.
    ((slots - 1e-9).ceil() as usize).max(1)
}

/// Effective nonlinear length `(1 - exp(-a L)) / a` with `a` in Np/km.
pub fn effective_length<T: Real>(alpha_db_per_km: T, length_km: T) -> T {
    let a = alpha_db_per_km * T::LN_10() / T::lit(10.0);
    if a == T::zero() {
        return length_km;
    }
    -(-a * length_km).exp_m1() / a
}

/// Lumped-amplifier ASE power in `noise_bandwidth_ghz` after `span_count`
/// spans whose gain exactly compensates the span loss.
pub fn ase_noise<T: Real>(
    span_length_km: T,
    span_count: usize,
    fiber: &FiberParams<T>,
    noise_bandwidth_ghz: T,
) -> T {
    let gain = T::lit(10.0).powf(fiber.alpha_db_per_km * span_length_km / T::lit(10.0));
    let nf = T::lit(10.0).powf(fiber.nf_db / T::lit(10.0));
    T::lit(span_count as f64)
        * (gain - T::one())
        * nf
        * fiber.photon_energy_j()
        * noise_bandwidth_ghz
        * T::lit(1e9)
}

/// A (modulation, data rate) pair with a feasible symbol rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub modulation: Modulation,
    pub data_rate_gbps: u32,
}

impl ChannelConfig {
    pub fn new(modulation: Modulation, data_rate_gbps: u32) -> Result<Self> {
        let rs = symbol_rate(data_rate_gbps as f64, modulation)?;
        if !(MIN_SYMBOL_RATE_GBD..=MAX_SYMBOL_RATE_GBD).contains(&rs) {
            return Err(Error::invalid(format!(
                "{data_rate_gbps}G {modulation} needs {rs} GBd, outside [{MIN_SYMBOL_RATE_GBD}, {MAX_SYMBOL_RATE_GBD}]"
            )));
        }
        Ok(Self {
            modulation,
            data_rate_gbps,
        })
    }

    pub fn symbol_rate_gbd(&self) -> f64 {
        symbol_rate(self.data_rate_gbps as f64, self.modulation).expect("validated on construction")
    }

    pub fn slot_count(&self) -> usize {
        slot_footprint(self.symbol_rate_gbd())
    }

    /// Every feasible configuration, ordered by modulation then rate.
    pub fn all_valid() -> Vec<ChannelConfig> {
        let mut out = Vec::new();
        for m in Modulation::ALL {
            let mut rate = MIN_DATA_RATE_GBPS;
            while rate <= MAX_DATA_RATE_GBPS {
                if let Ok(c) = ChannelConfig::new(m, rate) {
                    out.push(c);
                }
                rate += DATA_RATE_STEP_GBPS;
            }
        }
        out
    }
}

impl fmt::Display for ChannelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}G-{}", self.data_rate_gbps, self.modulation)
    }
}

/// One WDM carrier placed on the flex grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub center_freq_ghz: f64,
    pub symbol_rate_gbd: f64,
    pub modulation: Modulation,
    pub data_rate_gbps: u32,
    pub launch_power_dbm: f64,
    pub start_slot: usize,
    pub slot_count: usize,
}

impl Channel {
    pub fn new(config: ChannelConfig, start_slot: usize) -> Self {
        let symbol_rate_gbd = config.symbol_rate_gbd();
        let slot_count = slot_footprint(symbol_rate_gbd);
        Self {
            center_freq_ghz: (start_slot as f64 + slot_count as f64 / 2.0) * SLOT_WIDTH_GHZ,
            symbol_rate_gbd,
            modulation: config.modulation,
            data_rate_gbps: config.data_rate_gbps,
            launch_power_dbm: launch_power(symbol_rate_gbd).expect("positive symbol rate"),
            start_slot,
            slot_count,
        }
    }

    pub fn config(&self) -> ChannelConfig {
        ChannelConfig {
            modulation: self.modulation,
            data_rate_gbps: self.data_rate_gbps,
        }
    }

    pub fn end_slot(&self) -> usize {
        self.start_slot + self.slot_count
    }

    pub fn power_w(&self) -> f64 {
        dbm_to_w(self.launch_power_dbm)
    }

    pub fn overlaps(&self, other: &Channel) -> bool {
        self.start_slot < other.end_slot() && other.start_slot < self.end_slot()
    }
}

/// A uniform-span link carrying a set of channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub span_length_km: f64,
    pub span_count: usize,
    pub channels: Vec<Channel>,
    #[serde(default = "default_band_slots")]
    pub band_slots: usize,
}

fn default_band_slots() -> usize {
    DEFAULT_BAND_SLOTS
}

impl LinkConfig {
    pub fn new(span_length_km: f64, span_count: usize, channels: Vec<Channel>) -> Result<Self> {
        let link = Self {
            span_length_km,
            span_count,
            channels,
            band_slots: DEFAULT_BAND_SLOTS,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if self.span_count == 0 {
            return Err(Error::invalid("span count must be at least 1"));
        }
        if !(self.span_length_km > 0.0) {
            return Err(Error::invalid("span length must be positive"));
        }
        let mut ranges: Vec<(usize, usize)> = self.channels.iter().map(|c| (c.start_slot, c.end_slot())).collect();
        ranges.sort_unstable();
        for w in ranges.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Overlap(format!(
                    "slots {}..{} and {}..{}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        if let Some(&(_, end)) = ranges.last() {
            if end > self.band_slots {
                return Err(Error::invalid(format!(
                    "channel ends at slot {end} beyond a {}-slot band",
                    self.band_slots
                )));
            }
        }
        Ok(())
    }

    pub fn occupied_slots(&self) -> usize {
        self.channels.iter().map(|c| c.slot_count).sum()
    }

    pub fn span(&self, fiber: &FiberParams<f64>) -> Span<f64> {
        Span::new(self.span_length_km, *fiber)
    }

    pub fn channel(&self, index: usize) -> Result<&Channel> {
        self.channels.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.channels.len(),
        })
    }

    /// ASE power in the bandwidth of channel `index`.
    pub fn ase_noise_w(&self, fiber: &FiberParams<f64>, index: usize) -> Result<f64> {
        let ch = self.channel(index)?;
        Ok(ase_noise(self.span_length_km, self.span_count, fiber, ch.symbol_rate_gbd))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn symbol_rate_anchor_points() {
        assert_relative_eq!(symbol_rate(100.0, Modulation::Qpsk).unwrap(), 35.0, epsilon = 1e-12);
        assert_relative_eq!(symbol_rate(200.0, Modulation::Qam16).unwrap(), 35.0, epsilon = 1e-12);
        assert_relative_eq!(symbol_rate(600.0, Modulation::Qpsk).unwrap(), 210.0, epsilon = 1e-12);
        assert!(ChannelConfig::new(Modulation::Qpsk, 600).is_err());
        assert!(symbol_rate(125.0, Modulation::Qpsk).is_err());
        assert!(symbol_rate(650.0, Modulation::Qpsk).is_err());
        assert!("8PSK".parse::<Modulation>().is_err());
        assert_eq!("16qam".parse::<Modulation>().unwrap(), Modulation::Qam16);
    }

    #[test]
    fn launch_power_anchor_points() {
        assert_eq!(launch_power(35.0).unwrap(), 0.0);
        assert_relative_eq!(launch_power(70.0).unwrap(), 3.0103, epsilon = 1e-4);
        assert_relative_eq!(launch_power(17.5).unwrap(), -3.0103, epsilon = 1e-4);
        assert!(launch_power(0.0).is_err());
        assert!(launch_power(-3.0).is_err());
    }

    #[test]
    fn slot_footprints() {
        assert_eq!(slot_footprint(35.0), 4);
        assert_eq!(slot_footprint(87.5), 8);
        assert_eq!(slot_footprint(12.5 / 1.1), 1);
    }

    #[test]
    fn effective_length_values() {
        assert_relative_eq!(effective_length(0.2, 80.0), 21.169, epsilon = 1e-3);
        assert_relative_eq!(effective_length(1e-12, 80.0), 80.0, epsilon = 1e-6);
        assert_relative_eq!(effective_length(0.0, 80.0), 80.0);
        assert_relative_eq!(effective_length(0.2, 1e6), 21.715, epsilon = 1e-3);
    }

    #[test]
    fn ase_values() {
        let f = FiberParams::<f64>::default();
        let one = ase_noise(80.0, 1, &f, 35.0);
        assert_relative_eq!(one, 5.50e-7, max_relative = 2e-3);
        let twelve = ase_noise(80.0, 12, &f, 35.0);
        assert_relative_eq!(twelve, 6.60e-6, max_relative = 2e-3);
        assert_eq!(ase_noise(0.0, 7, &f, 35.0), 0.0);
    }

    #[test]
    fn valid_configs_respect_window() {
        let all = ChannelConfig::all_valid();
        assert_eq!(all.len(), 35);
        for c in &all {
            let rs = c.symbol_rate_gbd();
            assert!((10.0..=90.0).contains(&rs), "{c} at {rs}");
        }
    }

    #[test]
    fn link_validation() {
        let cfg = ChannelConfig::new(Modulation::Qpsk, 100).unwrap();
        let a = Channel::new(cfg, 0);
        let b = Channel::new(cfg, 3);
        assert!(LinkConfig::new(80.0, 1, vec![a.clone(), b]).is_err());
        assert!(LinkConfig::new(80.0, 0, vec![a.clone()]).is_err());
        assert!(LinkConfig::new(80.0, 1, vec![Channel::new(cfg, 398)]).is_err());
        let link = LinkConfig::new(80.0, 2, vec![a, Channel::new(cfg, 4)]).unwrap();
        assert_eq!(link.occupied_slots(), 8);
        assert!(link.channel(2).is_err());
    }

    #[test]
    fn fiber_toml_override() {
        let f = FiberParams::from_toml_str("alpha_db_per_km = 0.18\n").unwrap();
        assert_eq!(f.alpha_db_per_km, 0.18);
        assert_eq!(f.gamma_per_w_km, 1.3);
        assert!(FiberParams::from_toml_str("gamma_per_w_km = -1.0\n").is_err());
        assert!(FiberParams::from_toml_str("beta2_ps2_per_km = 0.0\n").is_err());
    }

    proptest! {
        #[test]
        fn ase_linear_in_span_count(n in 1usize..60, l in 1.0f64..150.0) {
            let f = FiberParams::<f64>::default();
            let one = ase_noise(l, 1, &f, 35.0);
            let many = ase_noise(l, n, &f, 35.0);
            prop_assert!((many - n as f64 * one).abs() <= 4.0 * f64::EPSILON * many);
        }

        #[test]
        fn launch_power_increasing(a in 1.0f64..200.0, b in 1.0f64..200.0) {
            prop_assume!(a < b);
            prop_assert!(launch_power(a).unwrap() < launch_power(b).unwrap());
        }

        #[test]
        fn centers_on_half_slot_grid(idx in 0usize..35, start in 0usize..390) {
            let cfg = ChannelConfig::all_valid()[idx];
            let ch = Channel::new(cfg, start);
            prop_assert_eq!((ch.center_freq_ghz / 6.25).fract(), 0.0);
        }

        #[test]
        fn effective_length_bounded(alpha in 0.01f64..1.0, l in 0.1f64..500.0) {
            let a = alpha * std::f64::consts::LN_10 / 10.0;
            // Beyond a*L ~ 35 the two sides round to the same double.
            prop_assume!(a * l < 30.0);
            let le = effective_length(alpha, l);
            prop_assert!(le < l.min(1.0 / a));
        }
    }
}
