//! Experiment configuration: one JSON file per run, echoed back verbatim
//! (with defaults filled in) into the JSON summary so records are
//! self-describing.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mgof_core::alternatives::{Profile, RateFamily};
use mgof_core::growth::GrowthLaw;
use mgof_core::iare::TauSpec;
use mgof_core::statistics::CellFunction;

pub fn default_tol() -> f64 {
    1e-10
}

fn default_reps() -> u64 {
    100_000
}

fn default_seed() -> u64 {
    0
}

fn default_alpha() -> f64 {
    0.05
}

/// Statistic descriptor as written in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum StatisticSpec {
    Chi2,
    Loglik,
    FreemanTukey,
    Pds { d: f64 },
    Indicator { r: u32 },
    Collision,
}

impl StatisticSpec {
    pub fn to_cell(&self) -> anyhow::Result<CellFunction> {
        let cell = match self {
            StatisticSpec::Chi2 => CellFunction::ChiSquareCell,
            StatisticSpec::Loglik => CellFunction::LogLikelihood,
            StatisticSpec::FreemanTukey => CellFunction::FreemanTukey,
            StatisticSpec::Pds { d } => CellFunction::PowerDivergence(*d),
            StatisticSpec::Indicator { r } => CellFunction::Indicator(*r),
            StatisticSpec::Collision => CellFunction::CollisionCell,
        };
        cell.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(cell)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub c: f64,
    pub q: f64,
}

impl GrowthSpec {
    pub fn to_law(self) -> anyhow::Result<GrowthLaw> {
        GrowthLaw::new(self.c, self.q).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Amplitude law of the alternative family.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmplitudeSpec {
    /// Mean squared perturbation c·n^{-gamma}.
    Rate { c: f64, gamma: f64 },
    /// Fixed contiguity index: eps(n) = value·sqrt(N)/n.
    Nabla { value: f64 },
    /// Fixed mean squared perturbation.
    Eps { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlternativeConfig {
    pub profile: String,
    pub amplitude: AmplitudeSpec,
}

impl AlternativeConfig {
    pub fn profile(&self) -> anyhow::Result<Profile> {
        self.profile
            .parse::<Profile>()
            .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn eps_norm_at(&self, n: u64, cells: u64) -> f64 {
        match self.amplitude {
            AmplitudeSpec::Rate { c, gamma } => c * (n as f64).powf(-gamma),
            AmplitudeSpec::Nabla { value } => value * (cells as f64).sqrt() / n as f64,
            AmplitudeSpec::Eps { value } => value,
        }
    }

    /// Rate-law view; only available for the `rate` amplitude kind.
    pub fn to_rate_family(&self, growth: GrowthLaw) -> anyhow::Result<RateFamily> {
        match self.amplitude {
            AmplitudeSpec::Rate { c, gamma } => {
                RateFamily::new(self.profile()?, c, gamma, growth).map_err(|e| anyhow::anyhow!("{e}"))
            }
            _ => bail!("this command needs an amplitude of kind \"rate\""),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TauConfig {
    Constant { value: f64 },
    Vanishing,
}

impl TauConfig {
    pub fn to_tau(&self) -> anyhow::Result<TauSpec> {
        match self {
            TauConfig::Constant { value } => {
                TauSpec::constant(*value).map_err(|e| anyhow::anyhow!("{e}"))
            }
            TauConfig::Vanishing => Ok(TauSpec::Vanishing),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentsConfig {
    pub id: String,
    pub statistics: Vec<StatisticSpec>,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_tol")]
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerConfig {
    pub id: String,
    pub statistics: Vec<StatisticSpec>,
    pub n_grid: Vec<u64>,
    pub growth: GrowthSpec,
    pub alternative: AlternativeConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrConfig {
    pub id: String,
    pub statistics: Vec<StatisticSpec>,
    pub n: u64,
    pub cells: u64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalityConfig {
    pub id: String,
    pub statistics: Vec<StatisticSpec>,
    pub n: u64,
    pub cells: u64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub z: f64,
    #[serde(default = "default_window")]
    pub window: u64,
}

fn default_window() -> u64 {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IareConfig {
    pub id: String,
    pub h: StatisticSpec,
    pub psi: StatisticSpec,
    pub growth: GrowthSpec,
    pub tau: TauConfig,
    pub alternative: AlternativeConfig,
    pub n_grid: Vec<u64>,
    pub mc: Option<McConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictConfig {
    pub id: String,
    pub psi: Vec<StatisticSpec>,
    pub growth: GrowthSpec,
    pub alternative: AlternativeConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub id: String,
    /// Subset of criterion ids; all of them when omitted.
    pub criteria: Option<Vec<String>>,
    /// The criteria pin their own replicate counts; a value below the largest
    /// pinned count is a configuration error.
    pub reps: Option<u64>,
    #[serde(default = "default_verify_seed")]
    pub seed: u64,
}

fn default_verify_seed() -> u64 {
    mgof_core::acceptance::DEFAULT_SEED
}

pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Shared post-parse validation used by every command.
pub fn validate_common(n_grid: &[u64], reps: Option<u64>) -> anyhow::Result<()> {
    if let Some(r) = reps {
        if r < 100 {
            bail!("reps must be at least 100, got {r}");
        }
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("n grid must be strictly ascending");
    }
    Ok(())
}
