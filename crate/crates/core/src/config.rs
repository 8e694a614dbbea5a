//! JSON config files: tagged records for distributions, value functions,
//! single-task problems and simulations.
//!
//! ```json
//! {"types": {"kind": "impatience_exponential", "lambda": 3},
//!  "value": {"kind": "poly", "k": 4, "p_bar": 1}}
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simulator::{RetentionMode, SimConfig, DEFAULT_MAX_ROUNDS};
use crate::single_task::{Objective, SearchOptions};
use crate::{Distribution, Retention, Scheme, ValueFn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform,
    ImpatienceExponential { lambda: f64 },
    FlattenedImpatienceExponential { lambda: f64, tau: f64 },
    Exponential { lambda: f64 },
    Lomax { alpha: f64 },
    EqualRevenue,
    TwoPoint { values: [f64; 2], probs: [f64; 2] },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Empirical { samples: Vec<f64> },
    Truncated { base: Box<DistSpec>, lo: f64, hi: f64 },
    Scaled { base: Box<DistSpec>, factor: f64 },
}

impl DistSpec {
    pub fn build(&self) -> Result<Distribution> {
        Ok(match self {
            DistSpec::Uniform => Distribution::uniform_unit(),
            DistSpec::ImpatienceExponential { lambda } => Distribution::impatience_exponential(*lambda)?,
            DistSpec::FlattenedImpatienceExponential { lambda, tau } => {
                Distribution::flattened_impatience_exponential(*lambda, *tau)?
            }
            DistSpec::Exponential { lambda } => Distribution::exponential(*lambda)?,
            DistSpec::Lomax { alpha } => Distribution::lomax(*alpha)?,
            DistSpec::EqualRevenue => Distribution::equal_revenue(),
            DistSpec::TwoPoint { values, probs } => Distribution::two_point(*values, *probs)?,
            DistSpec::Discrete { values, probs } => Distribution::discrete(values.clone(), probs.clone())?,
            DistSpec::Empirical { samples } => Distribution::empirical(samples.clone())?,
            DistSpec::Truncated { base, lo, hi } => base.build()?.truncate(*lo, *hi)?,
            DistSpec::Scaled { base, factor } => base.build()?.scale(*factor)?,
        })
    }

    /// The `kind` tag, as written in config files.
    pub fn kind_name(&self) -> &'static str {
        match self {
            DistSpec::Uniform => "uniform",
            DistSpec::ImpatienceExponential { .. } => "impatience_exponential",
            DistSpec::FlattenedImpatienceExponential { .. } => "flattened_impatience_exponential",
            DistSpec::Exponential { .. } => "exponential",
            DistSpec::Lomax { .. } => "lomax",
            DistSpec::EqualRevenue => "equal_revenue",
            DistSpec::TwoPoint { .. } => "two_point",
            DistSpec::Discrete { .. } => "discrete",
            DistSpec::Empirical { .. } => "empirical",
            DistSpec::Truncated { .. } => "truncated",
            DistSpec::Scaled { .. } => "scaled",
        }
    }

    /// Short label for CSV columns, e.g. `impexp(2)`.
    pub fn label(&self) -> String {
        match self {
            DistSpec::Uniform => "uniform".into(),
            DistSpec::ImpatienceExponential { lambda } => format!("impexp({lambda})"),
            DistSpec::FlattenedImpatienceExponential { lambda, tau } => format!("impexp({lambda},{tau})"),
            DistSpec::Exponential { lambda } => format!("exp({lambda})"),
            DistSpec::Lomax { alpha } => format!("lomax({alpha})"),
            DistSpec::EqualRevenue => "equal_revenue".into(),
            DistSpec::TwoPoint { values, .. } => format!("two_point({},{})", values[0], values[1]),
            DistSpec::Discrete { values, .. } => format!("discrete({})", values.len()),
            DistSpec::Empirical { samples } => format!("empirical({})", samples.len()),
            DistSpec::Truncated { base, lo, hi } => format!("{}[{lo},{hi}]", base.label()),
            DistSpec::Scaled { base, factor } => format!("{factor}*{}", base.label()),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_clinear_grid() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueSpec {
    Poly {
        k: f64,
        #[serde(default = "default_one")]
        p_bar: f64,
    },
    Insensitive {
        level: f64,
        #[serde(default)]
        threshold: f64,
    },
    /// Values generated from a type distribution; `types` defaults to the
    /// problem's own type distribution.
    Clinear {
        #[serde(default = "default_one")]
        c: f64,
        #[serde(default)]
        types: Option<DistSpec>,
        #[serde(default = "default_clinear_grid")]
        grid_n: usize,
    },
}

impl ValueSpec {
    pub fn build(&self, types: &Distribution) -> Result<ValueFn> {
        match self {
            ValueSpec::Poly { k, p_bar } => ValueFn::poly(*k, *p_bar),
            ValueSpec::Insensitive { level, threshold } => ValueFn::insensitive(*level, *threshold),
            ValueSpec::Clinear { c, types: own, grid_n } => match own {
                Some(spec) => ValueFn::clinear(*c, &spec.build()?, *grid_n),
                None => ValueFn::clinear(*c, types, *grid_n),
            },
        }
    }
}

fn default_grid_n() -> usize {
    10_000
}

fn default_refine_tol() -> f64 {
    1e-6
}

fn default_curve_points() -> usize {
    crate::single_task::CURVE_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleConfig {
    pub types: DistSpec,
    pub value: ValueSpec,
    /// Report only this objective's optimum; both when absent.
    #[serde(default)]
    pub objective: Option<Objective>,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

impl SingleConfig {
    pub fn search(&self) -> Result<SearchOptions<f64>> {
        if self.grid_n < 2 || !(self.refine_tol > 0.0) {
            return Err(Error::Config("grid_n must be at least 2 and refine_tol positive".into()));
        }
        Ok(SearchOptions { grid_n: self.grid_n, refine_tol: self.refine_tol })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionSpec {
    pub dist: DistSpec,
    pub beta: f64,
}

impl RetentionSpec {
    pub fn build(&self) -> Result<Retention> {
        Retention::new(self.dist.build()?, self.beta)
    }
}

fn default_n() -> usize {
    100_000
}

fn default_scheme() -> Scheme {
    Scheme::MyersonThreshold
}

fn default_mode() -> RetentionMode {
    RetentionMode::Shared
}

fn default_max_rounds() -> usize {
    DEFAULT_MAX_ROUNDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    pub types: DistSpec,
    #[serde(default = "default_one")]
    pub value: f64,
    pub retention: RetentionSpec,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_mode")]
    pub retention_mode: RetentionMode,
    #[serde(default)]
    pub growth_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default)]
    pub revenue_eps: Option<f64>,
    #[serde(default)]
    pub max_particles: Option<usize>,
    #[serde(default)]
    pub test_recruits_on_arrival: bool,
}

impl SimSpec {
    pub fn build(&self) -> Result<SimConfig> {
        let config = SimConfig {
            n_initial: self.n,
            type_dist: self.types.build()?,
            value: self.value,
            retention: self.retention.build()?,
            scheme: self.scheme,
            retention_mode: self.retention_mode,
            growth_rate: self.growth_rate,
            seed: self.seed,
            max_rounds: self.max_rounds,
            revenue_eps: self.revenue_eps,
            max_particles: self.max_particles,
            test_recruits_on_arrival: self.test_recruits_on_arrival,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses a JSON config, reporting the file, line and field on failure.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    if text.trim().is_empty() {
        return Err(Error::Config("config is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Hex SHA-256 of `bytes`.
pub fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of a value's canonical JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(hash_hex(&serde_json::to_vec(value)?))
}
