//! Run configuration: a TOML file with top-level settings and one optional
//! block per command.

use std::path::PathBuf;

use erasure_robust::Normalization;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Path of a constants file to use instead of the shipped one.
    pub constants: Option<PathBuf>,
    /// Fixed `c_g`, taking precedence over `constants`.
    pub c_g: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub quantiles: QuantilesConfig,
    #[serde(default)]
    pub tailcheck: TailcheckConfig,
    #[serde(default, rename = "calibrate-cg")]
    pub calibrate_cg: CalibrateConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub jl: JlConfig,
    #[serde(default)]
    pub rip: RipConfig,
    #[serde(default, rename = "bernoulli-demo")]
    pub bernoulli_demo: BernoulliConfig,
    #[serde(default)]
    pub orderstats: OrderStatsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub eps: Vec<f64>,
    pub alpha: f64,
    pub beta: Vec<f64>,
    /// Row count for the finite-`m` entries and the tail bound.
    pub m: Option<usize>,
    /// Point counts for pairwise-embedding row requirements.
    pub n_points: Vec<usize>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            eps: vec![0.01, 0.05, 0.1],
            alpha: 0.25,
            beta: (1..=9).map(|i| i as f64 / 10.0).collect(),
            m: Some(1000),
            n_points: vec![100],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub m: usize,
    pub trials: usize,
    pub eps: Vec<f64>,
    pub beta: Vec<f64>,
    pub mode: Normalization,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            m: 100,
            trials: 10_000,
            eps: vec![0.1, 0.3, 0.5],
            beta: vec![0.0, 0.01, 0.05],
            mode: Normalization::PerSurvivor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantilesConfig {
    pub m: usize,
    pub trials: usize,
    pub beta: Vec<f64>,
    pub mode: Normalization,
    pub levels: Vec<f64>,
    /// When set, each quantile row carries the matching level bound.
    pub alpha: Option<f64>,
}

impl Default for QuantilesConfig {
    fn default() -> Self {
        QuantilesConfig {
            m: 1000,
            trials: 10_000,
            beta: vec![0.25, 0.5],
            mode: Normalization::PerSurvivor,
            levels: vec![0.001, 0.01, 0.5, 0.99, 0.999],
            alpha: Some(0.01),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailcheckConfig {
    pub m: Vec<usize>,
    pub eps: Vec<f64>,
    pub trials: usize,
}

impl Default for TailcheckConfig {
    fn default() -> Self {
        TailcheckConfig {
            m: vec![20, 100, 500],
            eps: vec![0.1, 0.3, 0.5],
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub m_grid: Vec<usize>,
    pub trials: usize,
    /// Where to write a constants file with the result.
    pub constants_out: Option<PathBuf>,
    /// Date recorded in the written constants file.
    pub date: String,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            m_grid: vec![64, 256, 1024],
            trials: 10_000,
            constants_out: None,
            date: "unspecified".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub m_min: usize,
    pub m_max: usize,
    pub samples: usize,
    pub rel_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            m_min: 2,
            m_max: 12,
            samples: 200,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JlConfig {
    /// Dataset file; when absent, `n_points` Gaussian points in `dim`
    /// dimensions are generated from the seed.
    pub dataset: Option<PathBuf>,
    pub n_points: usize,
    pub dim: usize,
    pub eps: f64,
    pub alpha: f64,
    /// Row count; defaults to the minimum sufficient one.
    pub m: Option<usize>,
    /// Erasure budget; defaults to the embedding's budget for `m`.
    pub budget: Option<usize>,
    pub mode: Normalization,
    /// Reject distortions outside the embedding's hypothesis.
    pub strict: bool,
    pub matrix_cache: Option<PathBuf>,
}

impl Default for JlConfig {
    fn default() -> Self {
        JlConfig {
            dataset: None,
            n_points: 20,
            dim: 50,
            eps: 0.3,
            alpha: 0.25,
            m: None,
            budget: None,
            mode: Normalization::Uniform,
            strict: false,
            matrix_cache: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSource {
    /// `θ = ω = 1`.
    Symmetric,
    /// `θ`, `ω` from the finite-`m` level bounds at `(β, α)`.
    Bounds,
    /// `θ`, `ω` given explicitly.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Deterministic,
    Sampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RipConfig {
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub beta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub levels: LevelSource,
    pub theta: Option<f64>,
    pub omega: Option<f64>,
    pub draws: usize,
    pub net: NetKind,
    pub net_points: usize,
    pub net_probes: usize,
}

impl Default for RipConfig {
    fn default() -> Self {
        RipConfig {
            n: 8,
            s: 2,
            m: 300,
            beta: 0.2,
            eps: 0.5,
            alpha: 0.01,
            levels: LevelSource::Bounds,
            theta: None,
            omega: None,
            draws: 1,
            net: NetKind::Deterministic,
            net_points: 2000,
            net_probes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernoulliConfig {
    pub m: Vec<usize>,
    pub seeds: usize,
}

impl Default for BernoulliConfig {
    fn default() -> Self {
        BernoulliConfig {
            m: vec![10, 100],
            seeds: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderStatsConfig {
    pub m: usize,
    pub trials: usize,
    /// Partial-sum sizes for the tail root-mean-square brackets.
    pub k: Vec<usize>,
    /// Allowed distance from a bracket, in standard errors.
    pub tolerance_se: f64,
}

impl Default for OrderStatsConfig {
    fn default() -> Self {
        OrderStatsConfig {
            m: 100,
            trials: 10_000,
            k: vec![10, 25, 50, 75],
            tolerance_se: 4.0,
        }
    }
}

pub fn parse(text: &str) -> Result<Config, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}
