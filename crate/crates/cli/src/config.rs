//! Experiment configuration. Every experiment has its own parameter block;
//! fields not listed for an experiment are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rough_gauss::covariance_models::{CovarianceKernel, KernelSpec};
use rough_gauss::gaussian_sim::WeakLimitFunctional;
use rough_gauss::variation_2d::VariationMode;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Kernel given either as `"fbm:H=0.4"` or as `{"kernel": "fbm", "H": 0.4}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel(pub KernelSpec);

impl Kernel {
    pub fn build(&self) -> Result<CovarianceKernel, CliError> {
        self.0.build().map_err(|e| CliError::Config(format!("kernel {}: {e}", self.0)))
    }
}

impl FromStr for Kernel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        s.parse().map(Kernel).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            KernelSpec::Martingale { .. } => self.0.serialize(s),
            spec => s.serialize_str(&spec.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Spec(KernelSpec),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse::<KernelSpec>().map(Kernel).map_err(serde::de::Error::custom),
            Raw::Spec(s) => Ok(Kernel(s)),
        }
    }
}

fn bm() -> Kernel {
    Kernel(KernelSpec::Bm)
}
fn fbm04() -> Kernel {
    Kernel(KernelSpec::Fbm { hurst: 0.4 })
}
fn two() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrand {
    One,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftConfig {
    /// CSV with header `t,x1,..,xd`.
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "VariationConfig::grid")]
    pub grid: u32,
    /// Defaults to the kernel's variation exponent.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "VariationConfig::mode")]
    pub mode: VariationMode,
    /// Number of nested squares `[0, 2^-j]^2` for the fBM envelope.
    #[serde(default = "VariationConfig::squares")]
    pub squares: u32,
}

impl VariationConfig {
    fn grid() -> u32 {
        4
    }
    fn mode() -> VariationMode {
        VariationMode::Auto
    }
    fn squares() -> u32 {
        3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Young2dConfig {
    #[serde(default = "bm")]
    pub integrand: Kernel,
    #[serde(default = "bm")]
    pub integrator: Kernel,
    #[serde(default = "Young2dConfig::levels")]
    pub levels: usize,
    /// Grid level for the Young–Loève bound.
    #[serde(default = "Young2dConfig::bound_grid")]
    pub bound_grid: u32,
}

impl Young2dConfig {
    fn levels() -> usize {
        10
    }
    fn bound_grid() -> u32 {
        3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level2VarianceConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "Level2VarianceConfig::grid")]
    pub grid: u32,
    #[serde(default = "Level2VarianceConfig::samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "Level2VarianceConfig::extra_band")]
    pub extra_band: f64,
}

impl Level2VarianceConfig {
    fn grid() -> u32 {
        8
    }
    fn samples() -> usize {
        10_000
    }
    fn extra_band() -> f64 {
        0.01
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelBoundsConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "LevelBoundsConfig::dim")]
    pub dim: usize,
    #[serde(default = "LevelBoundsConfig::grid")]
    pub grid: u32,
    #[serde(default = "LevelBoundsConfig::samples")]
    pub samples: usize,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl LevelBoundsConfig {
    fn dim() -> usize {
        3
    }
    fn grid() -> u32 {
        4
    }
    fn samples() -> usize {
        4000
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "DyadicConfig::p")]
    pub p: f64,
    #[serde(default = "DyadicConfig::first")]
    pub first: u32,
    #[serde(default = "DyadicConfig::last")]
    pub last: u32,
    #[serde(default = "DyadicConfig::samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl DyadicConfig {
    fn p() -> f64 {
        2.5
    }
    fn first() -> u32 {
        3
    }
    fn last() -> u32 {
        7
    }
    fn samples() -> usize {
        200
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "PerturbationConfig::eps")]
    pub eps: Vec<f64>,
    #[serde(default = "PerturbationConfig::p")]
    pub p: f64,
    #[serde(default = "PerturbationConfig::grid")]
    pub grid: u32,
    #[serde(default = "PerturbationConfig::samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PerturbationConfig {
    fn eps() -> Vec<f64> {
        vec![0.2, 0.1, 0.05]
    }
    fn p() -> f64 {
        2.5
    }
    fn grid() -> u32 {
        6
    }
    fn samples() -> usize {
        200
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FerniqueConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "FerniqueConfig::p")]
    pub p: f64,
    #[serde(default = "FerniqueConfig::grid")]
    pub grid: u32,
    #[serde(default = "FerniqueConfig::samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl FerniqueConfig {
    fn p() -> f64 {
        2.5
    }
    fn grid() -> u32 {
        5
    }
    fn samples() -> usize {
        10_000
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungWienerConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "YoungWienerConfig::integrand")]
    pub integrand: Integrand,
    #[serde(default = "YoungWienerConfig::grid")]
    pub grid: u32,
    #[serde(default = "YoungWienerConfig::samples")]
    pub samples: usize,
    /// Variation exponent of the integrand.
    #[serde(default = "YoungWienerConfig::q")]
    pub q: f64,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl YoungWienerConfig {
    fn integrand() -> Integrand {
        Integrand::Identity
    }
    fn grid() -> u32 {
        10
    }
    fn samples() -> usize {
        10_000
    }
    fn q() -> f64 {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakLimitConfig {
    #[serde(default = "WeakLimitConfig::hurst")]
    pub hurst: Vec<f64>,
    #[serde(default = "WeakLimitConfig::functional")]
    pub functional: WeakLimitFunctional,
    #[serde(default = "WeakLimitConfig::grid")]
    pub grid: u32,
    #[serde(default = "WeakLimitConfig::samples")]
    pub samples: usize,
    #[serde(default = "WeakLimitConfig::final_gap")]
    pub final_gap: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl WeakLimitConfig {
    fn hurst() -> Vec<f64> {
        vec![0.45, 0.48, 0.5]
    }
    fn functional() -> WeakLimitFunctional {
        WeakLimitFunctional::Level2
    }
    fn grid() -> u32 {
        8
    }
    fn samples() -> usize {
        10_000
    }
    fn final_gap() -> f64 {
        0.05
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmEmbeddingConfig {
    #[serde(default = "CmEmbeddingConfig::kernels")]
    pub kernels: Vec<Kernel>,
    #[serde(default = "CmEmbeddingConfig::grid")]
    pub grid: u32,
    /// Random elements per kernel.
    #[serde(default = "CmEmbeddingConfig::samples")]
    pub samples: usize,
    /// Maximal number of nodes of a random element.
    #[serde(default = "CmEmbeddingConfig::nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl CmEmbeddingConfig {
    fn kernels() -> Vec<Kernel> {
        ["bm", "fbm:H=0.4", "fbm:H=0.3", "ou:theta=1,sigma=1,stationary=false", "bridge:bm"]
            .iter()
            .map(|s| s.parse().expect("default kernel"))
            .collect()
    }
    fn grid() -> u32 {
        4
    }
    fn samples() -> usize {
        200
    }
    fn nodes() -> usize {
        4
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrrConfig {
    #[serde(default = "fbm04")]
    pub kernel: Kernel,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "GrrConfig::r")]
    pub r: f64,
    #[serde(default = "GrrConfig::alpha")]
    pub alpha: f64,
    /// Defaults to the smallest admissible value.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "GrrConfig::grid")]
    pub grid: u32,
    #[serde(default = "GrrConfig::samples")]
    pub samples: usize,
    #[serde(default = "GrrConfig::deterministic_paths")]
    pub deterministic_paths: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl GrrConfig {
    fn r() -> f64 {
        2.6
    }
    fn alpha() -> f64 {
        0.3
    }
    fn grid() -> u32 {
        7
    }
    fn samples() -> usize {
        1000
    }
    fn deterministic_paths() -> usize {
        100
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosRatioConfig {
    #[serde(default = "bm")]
    pub kernel: Kernel,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "ChaosRatioConfig::grid")]
    pub grid: u32,
    #[serde(default = "ChaosRatioConfig::samples")]
    pub samples: usize,
    #[serde(default = "ChaosRatioConfig::moments")]
    pub moments: Vec<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ChaosRatioConfig {
    fn grid() -> u32 {
        6
    }
    fn samples() -> usize {
        10_000
    }
    fn moments() -> Vec<u32> {
        vec![4, 6, 8]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoutinQianConfig {
    #[serde(default = "CoutinQianConfig::hurst")]
    pub hurst: f64,
    /// Defaults to `fbm:H=<hurst>`.
    #[serde(default)]
    pub kernel: Option<Kernel>,
    #[serde(default = "CoutinQianConfig::grid")]
    pub grid: u32,
    #[serde(default = "CoutinQianConfig::constant")]
    pub constant: f64,
}

impl CoutinQianConfig {
    fn hurst() -> f64 {
        0.4
    }
    fn grid() -> u32 {
        6
    }
    fn constant() -> f64 {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Lift(LiftConfig),
    Variation(VariationConfig),
    Young2d(Young2dConfig),
    Level2Variance(Level2VarianceConfig),
    LevelBounds(LevelBoundsConfig),
    DyadicConvergence(DyadicConfig),
    Perturbation(PerturbationConfig),
    Fernique(FerniqueConfig),
    YoungWiener(YoungWienerConfig),
    WeakLimit(WeakLimitConfig),
    CmEmbedding(CmEmbeddingConfig),
    Grr(GrrConfig),
    ChaosRatio(ChaosRatioConfig),
    CoutinQian(CoutinQianConfig),
}

pub const EXPERIMENTS: [&str; 14] = [
    "lift",
    "variation",
    "young2d",
    "level2-variance",
    "level-bounds",
    "dyadic-convergence",
    "perturbation",
    "fernique",
    "young-wiener",
    "weak-limit",
    "cm-embedding",
    "grr",
    "chaos-ratio",
    "coutin-qian",
];

/// Top-level run file: the experiment block plus optional output settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    /// Stem of the output files; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Lift(_) => "lift",
            Experiment::Variation(_) => "variation",
            Experiment::Young2d(_) => "young2d",
            Experiment::Level2Variance(_) => "level2-variance",
            Experiment::LevelBounds(_) => "level-bounds",
            Experiment::DyadicConvergence(_) => "dyadic-convergence",
            Experiment::Perturbation(_) => "perturbation",
            Experiment::Fernique(_) => "fernique",
            Experiment::YoungWiener(_) => "young-wiener",
            Experiment::WeakLimit(_) => "weak-limit",
            Experiment::CmEmbedding(_) => "cm-embedding",
            Experiment::Grr(_) => "grr",
            Experiment::ChaosRatio(_) => "chaos-ratio",
            Experiment::CoutinQian(_) => "coutin-qian",
        }
    }

    pub fn seed_mut(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Experiment::Level2Variance(c) => Some(&mut c.seed),
            Experiment::LevelBounds(c) => Some(&mut c.seed),
            Experiment::DyadicConvergence(c) => Some(&mut c.seed),
            Experiment::Perturbation(c) => Some(&mut c.seed),
            Experiment::Fernique(c) => Some(&mut c.seed),
            Experiment::YoungWiener(c) => Some(&mut c.seed),
            Experiment::WeakLimit(c) => Some(&mut c.seed),
            Experiment::CmEmbedding(c) => Some(&mut c.seed),
            Experiment::Grr(c) => Some(&mut c.seed),
            Experiment::ChaosRatio(c) => Some(&mut c.seed),
            Experiment::Lift(_) | Experiment::Variation(_) | Experiment::Young2d(_) | Experiment::CoutinQian(_) => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.clone().seed_mut().and_then(|s| *s)
    }

    pub fn is_randomized(&self) -> bool {
        self.clone().seed_mut().is_some()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_value(value)
    }

    /// `name` and `out_dir` are peeled off before the experiment block is
    /// parsed, so unknown-field checks stay strict.
    pub fn from_value(mut value: serde_json::Value) -> Result<Self, CliError> {
        let obj = value.as_object_mut().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
        let name = match obj.remove("name") {
            None => None,
            Some(serde_json::Value::String(s)) if valid_stem(&s) => Some(s),
            Some(v) => return Err(CliError::Config(format!("name must be a plain file stem, got {v}"))),
        };
        let out_dir = match obj.remove("out_dir") {
            None => None,
            Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
            Some(v) => return Err(CliError::Config(format!("out_dir must be a string, got {v}"))),
        };
        match obj.get("experiment") {
            Some(serde_json::Value::String(e)) if EXPERIMENTS.contains(&e.as_str()) => {}
            Some(e) => {
                return Err(CliError::Config(format!(
                    "unknown experiment {e}; expected one of {}",
                    EXPERIMENTS.join(", ")
                )))
            }
            None => return Err(CliError::Config("missing field `experiment`".into())),
        }
        let experiment = Experiment::deserialize(value).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(RunConfig { experiment, name, out_dir })
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }
}

fn valid_stem(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && !s.starts_with('.')
}

/// Parameter swept by `table`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Hurst,
    Eps,
    Level,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: serde_json::Value,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: SweepConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(n) = &s.name {
            if !valid_stem(n) {
                return Err(CliError::Config(format!("name must be a plain file stem, got {n:?}")));
            }
        }
        Ok(s)
    }
}
