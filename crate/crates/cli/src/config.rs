//! Run configurations. Every file carries `"schema": 1`; unknown keys are
//! rejected.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use isoprofile::delta::{ModulusSpec, NormSpec};
use isoprofile::functional::TestFunction1D;
use isoprofile::oned::Potential;
use isoprofile::profile::log_grid;
use isoprofile::transport::RadialProfile;

use crate::CliError;

pub const SCHEMA: u64 = 1;

/// Reads `path`, checks the schema version and parses the remaining keys.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let Value::Object(map) = &mut value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    match map.remove("schema") {
        Some(v) if v.as_u64() == Some(SCHEMA) => {}
        Some(v) => return Err(CliError::Config(format!("unsupported schema {v}, expected {SCHEMA}"))),
        None => return Err(CliError::Config("missing \"schema\" key".into())),
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
}

/// Explicit points, or `n` log-spaced points from `lo` to `hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Log(LogGrid),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            Grid::Points(p) => p.clone(),
            Grid::Log(g) => {
                if !(g.lo > 0.0 && g.lo <= g.hi) {
                    return Err(CliError::Config(format!(
                        "log grid needs 0 < lo <= hi, got [{}, {}]",
                        g.lo, g.hi
                    )));
                }
                if g.n == 0 {
                    vec![]
                } else {
                    log_grid(g.lo, g.hi, g.n)
                }
            }
        };
        if pts.is_empty() {
            return Err(CliError::Config("grid is empty".into()));
        }
        Ok(pts)
    }
}

fn default_lipschitz() -> f64 {
    isoprofile::profile::DEFAULT_LIPSCHITZ_CONSTANT
}

fn default_c_prime() -> f64 {
    isoprofile::profile::default_c_prime()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Ulc {
        delta: ModulusSpec,
    },
    PowerModulus {
        alpha: f64,
        p: f64,
    },
    BakryLedoux,
    Bobkov {
        r: f64,
        ball_mass: f64,
    },
    PowerMeasure {
        alpha: f64,
        p: f64,
        n: usize,
        #[serde(default = "default_lipschitz")]
        lipschitz_constant: f64,
    },
    BodyModulus {
        delta: ModulusSpec,
        n: usize,
        #[serde(default = "default_c_prime")]
        c_prime: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub curves: Vec<CurveSpec>,
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verify1dConfig {
    pub density: Potential,
    pub tail: ModulusSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint: Option<ModulusSpec>,
    /// Levels `a`; each is also checked at `1 - a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub norm: NormSpec,
    pub profile: RadialProfile,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_count() -> usize {
    10_000
}

fn default_pairs() -> usize {
    2_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerProfile {
    pub c0: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrateConfig {
    pub norm: NormSpec,
    /// Half-space normal; defaults to the first coordinate vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub t: f64,
    pub eps: Vec<f64>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Modulus of convexity of the norm, used by the n-dimensional bounds.
    pub delta: ModulusSpec,
    /// Mass of the base set; the Monte Carlo estimate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lam_b: Option<f64>,
    #[serde(default = "default_c_prime")]
    pub c_prime: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_profile: Option<PowerProfile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusConfig {
    pub norm: NormSpec,
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub density: Potential,
    pub tail: ModulusSpec,
    /// Test functions; the ramp family of the density when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<TestFunction1D>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}
