use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nliconquer::dataset::GenerationConfig;
use nliconquer::gbm::{GbmParams, TuneGrid};
use nliconquer::qot::EstimatorKind;
use nliconquer::specopt::ScenarioConfig;
use nliconquer::FiberParams;
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "NLICONQUER_CONFIG";
pub const ECHO_FILE: &str = "resolved-config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub store: PathBuf,
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            store: "out/sci_store.jsonl".into(),
            dataset: "out/dataset".into(),
            model: "out/model/model.json".into(),
            reports: "out/reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSection {
    pub enabled: bool,
    pub grid: TuneGrid,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self {
            enabled: false,
            grid: TuneGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSection {
    /// Built-in five-node line when unset.
    pub topology: Option<PathBuf>,
    pub years: usize,
    pub estimator: EstimatorKind,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            topology: None,
            years: 5,
            estimator: EstimatorKind::Ml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub estimator: EstimatorKind,
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorKind::Ml,
            scenario: ScenarioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub channels: usize,
    pub iterations: usize,
    pub oracle_iterations: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            channels: 80,
            iterations: 20_000,
            oracle_iterations: 5,
        }
    }
}

/// Every knob of a run. The global seed overrides the per-section seeds
/// when the config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub fiber: FiberParams,
    pub generation: GenerationConfig,
    pub gbm: GbmParams,
    pub tune: TuneSection,
    pub spectrum: SpectrumSection,
    pub plan: PlanSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: Paths::default(),
            fiber: FiberParams::default(),
            generation: GenerationConfig::default(),
            gbm: GbmParams::default(),
            tune: TuneSection::default(),
            spectrum: SpectrumSection::default(),
            plan: PlanSection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path`, else the file named by `NLICONQUER_CONFIG`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
            None => Ok(Self::default()),
        }
    }

    /// Propagates the global seed into every seeded section and validates.
    pub fn resolve(mut self) -> Result<Self> {
        self.generation.seed = self.seed;
        self.gbm.seed = self.seed;
        self.spectrum.scenario.seed = self.seed;
        self.fiber.validate()?;
        self.generation.validate()?;
        self.gbm.validate()?;
        self.spectrum.scenario.validate()?;
        Ok(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Writes the resolved config next to a command's outputs.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}
