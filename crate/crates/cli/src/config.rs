//! Experiment configuration files.
//!
//! Every field is optional in the file. A `builtin` name pulls in a preset,
//! and fields given in the file override the preset's fields one by one.

use std::fmt;
use std::path::{Path, PathBuf};

use num_rational::Rational64;
use santalo_core::costs::{CostJson, CostSpec};
use santalo_core::geometry::{CartesianGrid, MeasureKind, ReferenceMeasure};
use serde::{Deserialize, Serialize};

use crate::builtins;

/// Current report and config schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    VerifyFunctional,
    VerifySets,
    Transport,
    Sphere,
    Symmetrize,
    Exponents,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

/// Where the tuple (functions, bodies or profiles) under test comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TupleSource {
    /// Seeded random tuples, one per trial.
    Random {
        #[serde(default)]
        separable: bool,
    },
    /// A JSON file: a function tuple for `verify-functional`.
    File { path: PathBuf },
    /// A named tuple: `gaussian` or `power` (functions), `disk`, `square`
    /// or `diamond` (bodies), scaled by `scale`.
    Builtin {
        name: String,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarityTarget {
    pub first_order_tol: f64,
    /// Expected value of `sum_i alpha_i Var(Phi_i)`.
    pub variance_target: f64,
    pub variance_tol: f64,
}

/// Raw configuration as written in a file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Kind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Sub-check of the experiment kind, e.g. `monotonicity` for transport.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostJson>,
    /// Several costs, cycled over trials (transport experiments).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<CostJson>>,
    /// One reference measure per slot, or a single shared one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<MeasureKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Homogeneity degrees `p_i` of the cost, as rationals like `"1/2"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<String>>,
    /// Homogeneity degrees `r_i` of the reference densities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_degrees: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<TupleSource>,
    /// Named reference tuple whose value is compared with `oracle`:
    /// `gaussian`, `maximize` or `maximize-separable`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Target>,
    /// Upper bound every trial value must respect, with relative slack.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<Target>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneity: Option<Target>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<StationarityTarget>,
    /// Absolute tolerance on admissibility slacks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_tol: Option<f64>,
    /// Relative tolerance of the mode's main comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Relative tolerance on ratios that should be constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    /// Exponents `beta'` for the layer-cake identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

/// A configuration error, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

type ConfigResult<T> = std::result::Result<T, ConfigError>;

impl ExperimentConfig {
    /// Parses a config, merges its builtin preset and validates the result.
    /// Relative file paths in the config resolve against `base_dir`.
    /// `seed_override` replaces the seed before validation.
    pub fn from_json(text: &str, base_dir: &Path, seed_override: Option<u64>) -> ConfigResult<Self> {
        let user: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            ConfigError(format!("config error at line {}, column {}: {e}", e.line(), e.column()))
        })?;
        let mut cfg = match &user.builtin {
            Some(name) => {
                let preset = builtins::preset(name)
                    .ok_or_else(|| ConfigError(format!("unknown builtin `{name}`; run `santalo-lab list`")))?;
                preset.overlay(user)
            }
            None => user,
        };
        if seed_override.is_some() {
            cfg.seed = seed_override;
        }
        if let Some(TupleSource::File { path }) = &mut cfg.tuple {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")), seed_override)
    }

    /// Fields of `top` replace the matching fields of `self`.
    pub fn overlay(self, top: ExperimentConfig) -> ExperimentConfig {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let over = serde_json::to_value(top).expect("config serializes");
        if let (Some(b), serde_json::Value::Object(o)) = (base.as_object_mut(), over) {
            for (k, v) in o {
                b.insert(k, v);
            }
        }
        serde_json::from_value(base).expect("merged config has the same schema")
    }

    fn validate(&self) -> ConfigResult<()> {
        if let Some(v) = self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(ConfigError(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})")));
            }
        }
        if self.experiment.is_none() {
            return Err(ConfigError::new("field `experiment` is required unless a builtin provides it"));
        }
        if self.uses_randomness() && self.seed.is_none() {
            return Err(ConfigError::new("field `seed` is required when trials or random tuples are used"));
        }
        if let Some(TupleSource::File { path }) = &self.tuple {
            if !path.exists() {
                return Err(ConfigError(format!("field `tuple.path`: file {} does not exist", path.display())));
            }
        }
        if let Some(c) = &self.cost {
            CostSpec::try_from(c.clone()).map_err(|e| ConfigError(format!("field `cost`: {e}")))?;
        }
        for (k, c) in self.costs.iter().flatten().enumerate() {
            CostSpec::try_from(c.clone()).map_err(|e| ConfigError(format!("field `costs[{k}]`: {e}")))?;
        }
        if let Some(g) = &self.grid {
            let n = self.cost.as_ref().map(|c| c.n).unwrap_or(1);
            CartesianGrid::new(n, g.half_width, g.points).map_err(|e| ConfigError(format!("field `grid`: {e}")))?;
        }
        if let Some(ms) = &self.measures {
            if ms.iter().any(|m| matches!(m, MeasureKind::CustomDensity)) {
                return Err(ConfigError::new("field `measures`: custom densities cannot be given in a config file"));
            }
        }
        for (field, list) in [("degrees", &self.degrees), ("density_degrees", &self.density_degrees)] {
            if let Some(l) = list {
                parse_rationals(l).map_err(|e| ConfigError(format!("field `{field}`: {e}")))?;
            }
        }
        Ok(())
    }

    fn uses_randomness(&self) -> bool {
        self.trials.unwrap_or(0) > 0 || matches!(self.tuple, Some(TupleSource::Random { .. }))
    }

    pub fn kind(&self) -> Kind {
        self.experiment.expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(0)
    }

    pub fn cost_spec(&self) -> ConfigResult<CostSpec> {
        let c = self.cost.clone().ok_or_else(|| ConfigError::new("field `cost` is required for this experiment"))?;
        Ok(CostSpec::try_from(c).expect("validated"))
    }

    /// `costs` if given, otherwise the single `cost`.
    pub fn cost_list(&self) -> ConfigResult<Vec<CostSpec>> {
        match &self.costs {
            Some(cs) if !cs.is_empty() => Ok(cs.iter().map(|c| CostSpec::try_from(c.clone()).expect("validated")).collect()),
            _ => Ok(vec![self.cost_spec()?]),
        }
    }

    pub fn mode(&self) -> &str {
        self.mode.as_deref().unwrap_or("")
    }

    pub fn grid_for(&self, dim: usize) -> CartesianGrid {
        match &self.grid {
            Some(g) => CartesianGrid::new(dim, g.half_width, g.points).expect("validated"),
            None => CartesianGrid::default_for(dim),
        }
    }

    /// Reference measures for `dim`, Lebesgue when none are configured.
    pub fn measures_for(&self, dim: usize) -> ConfigResult<Vec<ReferenceMeasure>> {
        match &self.measures {
            Some(ms) if !ms.is_empty() => ms
                .iter()
                .map(|k| ReferenceMeasure::new(dim, k.clone()).map_err(|e| ConfigError(format!("field `measures`: {e}"))))
                .collect(),
            _ => Ok(vec![ReferenceMeasure::lebesgue(dim)]),
        }
    }

    pub fn density_degrees(&self, marginals: usize) -> Vec<Rational64> {
        match &self.density_degrees {
            Some(l) => parse_rationals(l).expect("validated"),
            None => vec![Rational64::from_integer(0); marginals],
        }
    }

    pub fn degrees(&self) -> Option<Vec<Rational64>> {
        self.degrees.as_ref().map(|l| parse_rationals(l).expect("validated"))
    }
}

pub fn parse_rationals(list: &[String]) -> std::result::Result<Vec<Rational64>, String> {
    list.iter().map(|s| s.trim().parse::<Rational64>().map_err(|e| format!("`{s}` is not a rational: {e}"))).collect()
}
