//! Multi-period routing, modulation and spectrum assignment on a small
//! topology, with a pluggable QoT estimator acting as path computation
//! element.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_json, write_json};
use crate::error::{Error, Result};
use crate::num::lin_to_db;
use crate::phys::{Channel, ChannelConfig, LinkConfig, Modulation, DEFAULT_BAND_SLOTS};
use crate::qot::{Estimator, EstimatorKind};
use crate::specopt::Spectrum;

pub const PLANNING_MARGIN_DB: f64 = 0.5;
pub const TRAFFIC_STEP_GBPS: u32 = 50;

/// Minimum SNR (dB) for error-free operation of a modulation format, before margin.
pub fn required_snr(modulation: Modulation) -> f64 {
    match modulation {
        Modulation::Qpsk => 7.0,
        Modulation::Qam16 => 13.5,
        Modulation::Qam32 => 16.6,
        Modulation::Qam64 => 19.7,
    }
}

pub fn required_snr_by_name(name: &str) -> Result<f64> {
    Ok(required_snr(Modulation::from_str(name)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyLink {
    pub a: String,
    pub b: String,
    pub length_km: f64,
    #[serde(default = "default_span_km")]
    pub span_km: f64,
    #[serde(default = "default_slots")]
    pub slots: usize,
}

fn default_span_km() -> f64 {
    80.0
}

fn default_slots() -> usize {
    DEFAULT_BAND_SLOTS
}

impl TopologyLink {
    /// Equal spans no longer than `span_km`.
    pub fn span_count(&self) -> usize {
        ((self.length_km / self.span_km) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn span_length_km(&self) -> f64 {
        self.length_km / self.span_count() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub name: String,
    pub nodes: Vec<String>,
    pub links: Vec<TopologyLink>,
    /// Unordered node pairs; all pairs when omitted.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
}

impl Topology {
    /// Five nodes in a line, 640/560/480/800 km, 80 km spans, all ten pairs.
    pub fn nordunet() -> Self {
        let nodes: Vec<String> = (1..=5).map(|i| format!("N{i}")).collect();
        let links = [640.0, 560.0, 480.0, 800.0]
            .iter()
            .enumerate()
            .map(|(i, &length_km)| TopologyLink {
                a: nodes[i].clone(),
                b: nodes[i + 1].clone(),
                length_km,
                span_km: 80.0,
                slots: DEFAULT_BAND_SLOTS,
            })
            .collect();
        let mut t = Self {
            name: "nordunet".into(),
            nodes,
            links,
            pairs: Vec::new(),
        };
        t.pairs = t.all_pairs();
        t
    }

    fn all_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                out.push((self.nodes[i].clone(), self.nodes[j].clone()));
            }
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut t: Self = serde_json::from_str(s)?;
        if t.pairs.is_empty() {
            t.pairs = t.all_pairs();
        }
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown node `{name}`")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("topology has no nodes"));
        }
        let mut sorted = self.nodes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.nodes.len() {
            return Err(Error::invalid("duplicate node names"));
        }
        for l in &self.links {
            let (a, b) = (self.node_index(&l.a)?, self.node_index(&l.b)?);
            if a == b {
                return Err(Error::invalid(format!("self-loop at `{}`", l.a)));
            }
            if !(l.length_km > 0.0 && l.span_km > 0.0) || l.slots == 0 {
                return Err(Error::invalid(format!("link {}-{} has invalid geometry", l.a, l.b)));
            }
        }
        for (a, b) in &self.pairs {
            if self.node_index(a)? == self.node_index(b)? {
                return Err(Error::invalid(format!("demand pair `{a}`-`{b}` is a self-pair")));
            }
        }
        for i in 1..self.nodes.len() {
            self.shortest_path(0, i)?;
        }
        Ok(())
    }

    /// Link indices of the shortest path from node `src` to node `dst`.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (i, l) in self.links.iter().enumerate() {
            let (a, b) = (self.node_index(&l.a)?, self.node_index(&l.b)?);
            adj[a].push((b, i));
            adj[b].push((a, i));
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((d_bits, u))) = heap.pop() {
            let d = f64::from_bits(d_bits);
            if d > dist[u] {
                continue;
            }
            for &(v, li) in &adj[u] {
                let nd = d + self.links[li].length_km;
                if nd < dist[v] {
                    dist[v] = nd;
                    via[v] = Some((u, li));
                    heap.push(Reverse((nd.to_bits(), v)));
                }
            }
        }
        if !dist[dst].is_finite() {
            return Err(Error::invalid(format!(
                "topology is disconnected: no path {} -> {}",
                self.nodes[src], self.nodes[dst]
            )));
        }
        let mut path = Vec::new();
        let mut at = dst;
        while let Some((prev, li)) = via[at] {
            path.push(li);
            at = prev;
        }
        path.reverse();
        Ok(path)
    }
}

/// Requested rate per pair and year, `gbps[pair][year]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    pub pairs: Vec<(String, String)>,
    pub years: usize,
    pub gbps: Vec<Vec<u32>>,
}

fn round_up_step(v: f64) -> u32 {
    let step = TRAFFIC_STEP_GBPS as f64;
    ((v / step - 1e-9).ceil() * step) as u32
}

/// Year-1 demand uniform over {100, 150, ..., 400} Gbit/s; each following
/// year multiplies by a uniform factor in [1.2, 1.4] and rounds up to 50.
pub fn generate_traffic(pairs: &[(String, String)], years: usize, seed: u64) -> TrafficMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gbps: Vec<Vec<u32>> = pairs
        .iter()
        .map(|_| {
            let mut row = Vec::with_capacity(years);
            row.push(100 + TRAFFIC_STEP_GBPS * rng.gen_range(0..=6u32));
            row
        })
        .collect();
    for _ in 1..years {
        for row in gbps.iter_mut() {
            let growth = rng.gen_range(1.2..=1.4);
            let last = *row.last().expect("year-1 entry");
            row.push(round_up_step(last as f64 * growth));
        }
    }
    if years == 0 {
        gbps.iter_mut().for_each(Vec::clear);
    }
    TrafficMatrix {
        pairs: pairs.to_vec(),
        years,
        gbps,
    }
}

impl TrafficMatrix {
    pub fn zero(pairs: &[(String, String)], years: usize) -> Self {
        Self {
            pairs: pairs.to_vec(),
            years,
            gbps: vec![vec![0; years]; pairs.len()],
        }
    }

    /// Writes `pair,year,gbps` rows; years are 1-based.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "pair,year,gbps").map_err(io)?;
        for (p, (a, b)) in self.pairs.iter().enumerate() {
            for y in 0..self.years {
                writeln!(w, "{a}-{b},{},{}", y + 1, self.gbps[p][y]).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lightpath {
    pub id: usize,
    pub pair: (String, String),
    pub path: Vec<usize>,
    pub start_slot: usize,
    pub slot_count: usize,
    pub config: ChannelConfig,
    /// 1-based planning year.
    pub year: usize,
    pub estimated_snr_db: f64,
    pub threshold_db: f64,
}

impl Lightpath {
    pub fn channel(&self) -> Channel {
        Channel::new(self.config, self.start_slot)
    }
}

#[derive(Debug, Clone)]
struct LinkState {
    span_length_km: f64,
    span_count: usize,
    /// Both directions; duplex lightpaths keep them identical.
    spectra: [Spectrum; 2],
    /// Lightpath id of each channel in `spectra[0].channels`.
    owners: Vec<usize>,
}

impl LinkState {
    fn link_config(&self) -> LinkConfig {
        self.spectra[0].link(self.span_length_km, self.span_count)
    }
}

/// Spectrum state of every link plus the lightpaths established so far.
#[derive(Debug, Clone)]
pub struct Network {
    pub topology: Topology,
    links: Vec<LinkState>,
    pub lightpaths: Vec<Lightpath>,
}

/// Link configs of a network state, with optional tentative additions.
struct View<'a> {
    links: Vec<std::borrow::Cow<'a, LinkConfig>>,
    owners: Vec<std::borrow::Cow<'a, [usize]>>,
}

impl Network {
    pub fn new(topology: Topology) -> Self {
        let links = topology
            .links
            .iter()
            .map(|l| LinkState {
                span_length_km: l.span_length_km(),
                span_count: l.span_count(),
                spectra: [Spectrum::new(l.slots), Spectrum::new(l.slots)],
                owners: Vec::new(),
            })
            .collect();
        Self {
            topology,
            links,
            lightpaths: Vec::new(),
        }
    }

    pub fn link_config(&self, link: usize) -> LinkConfig {
        self.links[link].link_config()
    }

    /// Start slots free on both directions of every link in `path`, ascending.
    pub fn common_free_starts(&self, path: &[usize], width: usize) -> Vec<usize> {
        let slots = path.iter().map(|&l| self.links[l].spectra[0].band_slots).min().unwrap_or(0);
        (0..slots.saturating_sub(width) + 1)
            .filter(|&s| {
                s + width <= slots
                    && path
                        .iter()
                        .all(|&l| self.links[l].spectra.iter().all(|sp| sp.is_free(s, width)))
            })
            .collect()
    }

    fn owned_configs(&self) -> Vec<LinkConfig> {
        self.links.iter().map(LinkState::link_config).collect()
    }

    /// Path SNR (dB) of lightpath `id` with the given per-link configs.
    fn path_snr(
        &self,
        lp: &Lightpath,
        links: &[std::borrow::Cow<'_, LinkConfig>],
        owners: &[std::borrow::Cow<'_, [usize]>],
        est: &Estimator,
    ) -> Result<f64> {
        let mut nsr = 0.0;
        for &l in &lp.path {
            let cut = owners[l]
                .iter()
                .position(|&o| o == lp.id)
                .ok_or_else(|| Error::invalid(format!("lightpath {} missing from link {l}", lp.id)))?;
            let link = &links[l];
            let p = link.channel(cut)?.power_w();
            let (ase, nli) = est.noise_w(link, cut)?;
            nsr += (ase + nli) / p;
        }
        Ok(-lin_to_db(nsr))
    }

    fn base_view(&self) -> View<'_> {
        View {
            links: self.owned_configs().into_iter().map(std::borrow::Cow::Owned).collect(),
            owners: self.links.iter().map(|l| std::borrow::Cow::Borrowed(&l.owners[..])).collect(),
        }
    }

    /// Path SNR of every established lightpath under `est`.
    pub fn lightpath_snrs(&self, est: &Estimator) -> Result<Vec<f64>> {
        let view = self.base_view();
        self.lightpaths
            .par_iter()
            .map(|lp| self.path_snr(lp, &view.links, &view.owners, est))
            .collect()
    }

    fn commit(&mut self, lp: Lightpath) -> Result<()> {
        for &l in &lp.path {
            let state = &mut self.links[l];
            for sp in state.spectra.iter_mut() {
                sp.place(lp.channel())?;
            }
            state.owners.push(lp.id);
        }
        self.lightpaths.push(lp);
        Ok(())
    }

    /// Outcome of checking one tentative lightpath.
    fn check(&self, lp: &Lightpath, est: &Estimator) -> Result<Check> {
        let mut view = self.base_view();
        for &l in &lp.path {
            view.links[l].to_mut().channels.push(lp.channel());
            view.owners[l].to_mut().push(lp.id);
        }
        let own = self.path_snr(lp, &view.links, &view.owners, est)?;
        if own < lp.threshold_db + PLANNING_MARGIN_DB {
            return Ok(Check::OwnFails);
        }
        let affected: Vec<&Lightpath> = self
            .lightpaths
            .iter()
            .filter(|o| o.path.iter().any(|l| lp.path.contains(l)))
            .collect();
        let violated = affected
            .par_iter()
            .map(|o| Ok(self.path_snr(o, &view.links, &view.owners, est)? < o.threshold_db + PLANNING_MARGIN_DB))
            .collect::<Result<Vec<bool>>>()?;
        if violated.into_iter().any(|v| v) {
            return Ok(Check::OthersFail);
        }
        Ok(Check::Ok(own))
    }
}

enum Check {
    Ok(f64),
    OwnFails,
    OthersFail,
}

/// Candidate configs for a remaining deficit: configs that cover it, in
/// ascending rate, then the rest in descending rate; ties by required SNR.
pub fn candidate_order(deficit_gbps: u32) -> Vec<ChannelConfig> {
    let by_snr = |a: &ChannelConfig, b: &ChannelConfig| {
        required_snr(a.modulation).total_cmp(&required_snr(b.modulation))
    };
    let (mut covering, mut partial): (Vec<ChannelConfig>, Vec<ChannelConfig>) = ChannelConfig::all_valid()
        .into_iter()
        .partition(|c| c.data_rate_gbps >= deficit_gbps);
    covering.sort_by(|a, b| a.data_rate_gbps.cmp(&b.data_rate_gbps).then(by_snr(a, b)));
    partial.sort_by(|a, b| b.data_rate_gbps.cmp(&a.data_rate_gbps).then(by_snr(a, b)));
    covering.extend(partial);
    covering
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingRecord {
    pub pair: (String, String),
    pub year: usize,
    pub uncovered_gbps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsaOutcome {
    pub lightpaths: Vec<Lightpath>,
    pub blocked: Option<BlockingRecord>,
    /// Per-lightpath QoT evaluations issued (new + affected channels).
    pub checks: usize,
}

/// Places lightpaths for `pair` until `deficit_gbps` is covered or no
/// candidate is feasible. Accepted lightpaths are committed to `net`.
pub fn rmsa_place(
    net: &mut Network,
    pair: (&str, &str),
    deficit_gbps: u32,
    year: usize,
    est: &Estimator,
) -> Result<RmsaOutcome> {
    let (src, dst) = (net.topology.node_index(pair.0)?, net.topology.node_index(pair.1)?);
    let path = net.topology.shortest_path(src, dst)?;
    let mut remaining = deficit_gbps;
    let mut placed = Vec::new();
    let mut checks = 0usize;

    'demand: while remaining > 0 {
        for config in candidate_order(remaining) {
            let starts = net.common_free_starts(&path, config.slot_count());
            for start in starts {
                let lp = Lightpath {
                    id: net.lightpaths.len(),
                    pair: (pair.0.to_string(), pair.1.to_string()),
                    path: path.clone(),
                    start_slot: start,
                    slot_count: config.slot_count(),
                    config,
                    year,
                    estimated_snr_db: f64::NAN,
                    threshold_db: required_snr(config.modulation),
                };
                checks += 1;
                match net.check(&lp, est)? {
                    Check::Ok(snr) => {
                        let lp = Lightpath {
                            estimated_snr_db: snr,
                            ..lp
                        };
                        net.commit(lp.clone())?;
                        placed.push(lp);
                        remaining = remaining.saturating_sub(config.data_rate_gbps);
                        continue 'demand;
                    }
                    Check::OwnFails => break,
                    Check::OthersFail => continue,
                }
            }
        }
        return Ok(RmsaOutcome {
            lightpaths: placed,
            blocked: Some(BlockingRecord {
                pair: (pair.0.to_string(), pair.1.to_string()),
                year,
                uncovered_gbps: remaining,
            }),
            checks,
        });
    }
    Ok(RmsaOutcome {
        lightpaths: placed,
        blocked: None,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSummary {
    pub year: usize,
    pub new_lightpaths: usize,
    pub total_lightpaths: usize,
    pub requested_gbps: u64,
    pub provisioned_gbps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Satisfaction {
    pub pair: (String, String),
    pub year: usize,
    pub requested_gbps: u32,
    pub provisioned_gbps: u32,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub lightpath: usize,
    pub estimated_snr_db: f64,
    pub oracle_snr_db: f64,
    pub threshold_db: f64,
    pub violation: bool,
    pub margin_eroded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    /// Substitutes for unpublished inputs make this an analogue run.
    pub label: String,
    pub substitutes: Vec<String>,
    pub topology: String,
    pub estimator: EstimatorKind,
    pub margin_db: f64,
    pub lightpaths: Vec<Lightpath>,
    pub per_year: Vec<YearSummary>,
    pub per_config: BTreeMap<String, usize>,
    pub satisfaction: Vec<Satisfaction>,
    pub blocking: Vec<BlockingRecord>,
    pub oracle_checks: Vec<OracleCheck>,
    pub oracle_violations: usize,
    pub oracle_margin_erosions: usize,
    pub qot_checks: usize,
}

impl PlanReport {
    pub fn total_lightpaths(&self) -> usize {
        self.lightpaths.len()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn config_label(c: &ChannelConfig) -> String {
    format!("{}G-{}", c.data_rate_gbps, c.modulation.name())
}

/// Plans every year in order and every pair in traffic order, then checks
/// each lightpath against `oracle`.
pub fn plan(topology: &Topology, traffic: &TrafficMatrix, est: &Estimator, oracle: &Estimator) -> Result<PlanReport> {
    if oracle.kind() != EstimatorKind::Oracle {
        return Err(Error::invalid("post-hoc verification needs the oracle estimator"));
    }
    if traffic.gbps.len() != traffic.pairs.len() || traffic.gbps.iter().any(|r| r.len() != traffic.years) {
        return Err(Error::invalid("traffic matrix shape does not match its pairs and years"));
    }
    let mut net = Network::new(topology.clone());
    let mut per_year = Vec::with_capacity(traffic.years);
    let mut satisfaction = Vec::new();
    let mut blocking = Vec::new();
    let mut qot_checks = 0usize;

    for y in 0..traffic.years {
        let year = y + 1;
        let before = net.lightpaths.len();
        for (p, (a, b)) in traffic.pairs.iter().enumerate() {
            let requested = traffic.gbps[p][y];
            let provisioned = provisioned_gbps(&net, (a, b));
            if requested > provisioned {
                let out = rmsa_place(&mut net, (a, b), requested - provisioned, year, est)?;
                qot_checks += out.checks;
                blocking.extend(out.blocked);
            }
            let provisioned = provisioned_gbps(&net, (a, b));
            satisfaction.push(Satisfaction {
                pair: (a.clone(), b.clone()),
                year,
                requested_gbps: requested,
                provisioned_gbps: provisioned,
                satisfied: provisioned >= requested,
            });
        }
        per_year.push(YearSummary {
            year,
            new_lightpaths: net.lightpaths.len() - before,
            total_lightpaths: net.lightpaths.len(),
            requested_gbps: traffic.gbps.iter().map(|r| r[y] as u64).sum(),
            provisioned_gbps: net.lightpaths.iter().map(|l| l.config.data_rate_gbps as u64).sum(),
        });
    }

    let oracle_snr = net.lightpath_snrs(oracle)?;
    let oracle_checks: Vec<OracleCheck> = net
        .lightpaths
        .iter()
        .zip(&oracle_snr)
        .map(|(lp, &snr)| OracleCheck {
            lightpath: lp.id,
            estimated_snr_db: lp.estimated_snr_db,
            oracle_snr_db: snr,
            threshold_db: lp.threshold_db,
            violation: snr < lp.threshold_db,
            margin_eroded: snr < lp.threshold_db + PLANNING_MARGIN_DB,
        })
        .collect();

    let mut per_config = BTreeMap::new();
    for lp in &net.lightpaths {
        *per_config.entry(config_label(&lp.config)).or_insert(0) += 1;
    }

    Ok(PlanReport {
        label: "analogue".into(),
        substitutes: vec![
            "topology: 5-node line with assumed link lengths".into(),
            "traffic: uniform year-1 draw with 20-40% yearly growth".into(),
            "thresholds: assumed per-format SNR table plus 0.5 dB margin".into(),
            "ground truth: integral-form GN oracle".into(),
        ],
        topology: topology.name.clone(),
        estimator: est.kind(),
        margin_db: PLANNING_MARGIN_DB,
        oracle_violations: oracle_checks.iter().filter(|c| c.violation).count(),
        oracle_margin_erosions: oracle_checks.iter().filter(|c| c.margin_eroded).count(),
        lightpaths: net.lightpaths,
        per_year,
        per_config,
        satisfaction,
        blocking,
        oracle_checks,
        qot_checks,
    })
}

fn provisioned_gbps(net: &Network, pair: (&String, &String)) -> u32 {
    net.lightpaths
        .iter()
        .filter(|l| (&l.pair.0, &l.pair.1) == pair)
        .map(|l| l.config.data_rate_gbps)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(required_snr(Modulation::Qpsk), 7.0);
        assert!(required_snr(Modulation::Qam64) > required_snr(Modulation::Qam32));
        assert!(required_snr(Modulation::Qam32) > required_snr(Modulation::Qam16));
        assert!(required_snr(Modulation::Qam16) > required_snr(Modulation::Qpsk));
        assert_eq!(required_snr_by_name("16QAM").unwrap(), 13.5);
        assert!(required_snr_by_name("8PSK").is_err());
    }

    #[test]
    fn nordunet_paths() {
        let t = Topology::nordunet();
        t.validate().unwrap();
        assert_eq!(t.pairs.len(), 10);
        assert_eq!(t.shortest_path(0, 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(t.shortest_path(3, 1).unwrap(), vec![2, 1]);
        assert_eq!(t.links[3].span_count(), 10);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(Topology::from_json(&json).unwrap(), t);
    }

    #[test]
    fn disconnected_topology_is_rejected() {
        let mut t = Topology::nordunet();
        t.links.pop();
        assert!(t.validate().is_err());
    }

    #[test]
    fn traffic_model() {
        let t = Topology::nordunet();
        let m = generate_traffic(&t.pairs, 5, 3);
        assert_eq!(m, generate_traffic(&t.pairs, 5, 3));
        for row in &m.gbps {
            assert!((100..=400).contains(&row[0]) && row[0] % 50 == 0);
            for w in row.windows(2) {
                assert!(w[1] >= w[0] && w[1] % 50 == 0);
                assert!(w[1] as f64 >= 1.2 * w[0] as f64 - 1e-9);
                assert!((w[1] as f64) < 1.4 * w[0] as f64 + 50.0);
            }
        }
        let one = generate_traffic(&t.pairs, 1, 3);
        assert_eq!(one.gbps.iter().map(|r| r[0]).collect::<Vec<_>>(), m.gbps.iter().map(|r| r[0]).collect::<Vec<_>>());
    }

    #[test]
    fn candidate_order_prefers_single_covering_lightpath() {
        let c = candidate_order(400);
        assert_eq!(c[0].data_rate_gbps, 400);
        assert_eq!(c[0].modulation, Modulation::Qam16);
        let c = candidate_order(1000);
        assert_eq!(c[0].data_rate_gbps, 600);
        let rates: Vec<u32> = c.iter().map(|x| x.data_rate_gbps).collect();
        assert!(rates.windows(2).all(|w| w[0] >= w[1]));
    }
}
