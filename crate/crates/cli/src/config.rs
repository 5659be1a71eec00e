//! JSON configuration documents.
//!
//! Angles are radians. Any `"theta"` value and any element of a `"thetas"`
//! array may also be one of the strings `"pi/2"`, `"pi/3"`, `"pi/4"`, `"pi/6"`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};

use capflow::FlowConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

pub fn parse_angle(text: &str) -> Option<f64> {
    match text.trim() {
        "pi/2" => Some(FRAC_PI_2),
        "pi/3" => Some(FRAC_PI_3),
        "pi/4" => Some(FRAC_PI_4),
        "pi/6" => Some(FRAC_PI_6),
        other => other.parse().ok(),
    }
}

fn angle_value(v: &mut Value) -> Result<(), String> {
    if let Value::String(s) = v {
        let x = parse_angle(s).ok_or_else(|| format!("unrecognized angle {s:?}"))?;
        *v = serde_json::json!(x);
    }
    Ok(())
}

fn normalize_angles(v: &mut Value) -> Result<(), String> {
    match v {
        Value::Object(map) => {
            for (key, child) in map.iter_mut() {
                match (key.as_str(), &mut *child) {
                    ("theta", _) => angle_value(child)?,
                    ("thetas", Value::Array(items)) => {
                        items.iter_mut().try_for_each(angle_value)?
                    }
                    _ => normalize_angles(child)?,
                }
            }
        }
        Value::Array(items) => items.iter_mut().try_for_each(normalize_angles)?,
        _ => {}
    }
    Ok(())
}

/// Parses a config document after angle normalization.
pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| Failure::usage(format!("config: {e}")))?;
    normalize_angles(&mut value).map_err(|e| Failure::usage(format!("config: {e}")))?;
    serde_json::from_value(value).map_err(|e| Failure::usage(format!("config: {e}")))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    from_str(&text).map_err(|f| Failure::usage(format!("{}: {}", path.display(), f.message)))
}

/// One perturbation mode `a · sin^j β · cos(2mβ) · cos(jα + ψ)`, times
/// `cos²β` when `j > 0`. The phase `ψ` is drawn from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub m: u32,
    #[serde(default)]
    pub j: u32,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Cap {
        r: f64,
    },
    PerturbedCap {
        r: f64,
        modes: Vec<Mode>,
    },
    /// A checkpoint written by `run` or `convexify`; relative paths resolve
    /// against the directory of the config file.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub flow: FlowConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Also write `final_mesh.obj` (n = 2 only).
    #[serde(default)]
    pub export_mesh: bool,
    /// `(k, ℓ)` pairs whose Alexandrov–Fenchel gap is tracked per row.
    #[serde(default)]
    pub af_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapTableConfig {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
    pub n_beta: usize,
}

impl Default for CapTableConfig {
    fn default() -> Self {
        Self {
            n: 2,
            thetas: vec![FRAC_PI_2, FRAC_PI_3],
            radii: vec![0.5, 1.0, 2.0],
            n_beta: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfCheckConfig {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub n_beta: usize,
    /// Samples per angle.
    pub samples: usize,
    /// Range of the perturbation norm.
    pub amplitude: (f64, f64),
    /// Range of the base cap radius.
    pub radius: (f64, f64),
    /// Number of `cos(2mβ)` modes, `m = 1..=modes`.
    pub modes: u32,
    /// Defaults to every pair `0 ≤ ℓ < k ≤ n`.
    pub af_pairs: Option<Vec<(usize, usize)>>,
    /// Replace every sample by its base cap; gaps must then vanish.
    pub exact_caps: bool,
    pub cap_tolerance: f64,
    pub violation_tolerance: f64,
    pub convexify_t: f64,
    pub cfl_factor: f64,
    pub seed: u64,
}

impl Default for AfCheckConfig {
    fn default() -> Self {
        Self {
            n: 2,
            thetas: vec![FRAC_PI_2, FRAC_PI_3],
            n_beta: 400,
            samples: 100,
            amplitude: (0.02, 0.1),
            radius: (0.5, 2.0),
            modes: 3,
            af_pairs: None,
            exact_caps: false,
            cap_tolerance: 1e-6,
            violation_tolerance: 1e-8,
            convexify_t: 0.01,
            cfl_factor: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinkowskiConfig {
    pub n: usize,
    pub theta: f64,
    /// `n_beta` per level.
    pub ladder: Vec<usize>,
    /// `n_alpha` per level; non-empty selects the two-dimensional grid.
    pub n_alpha: Vec<usize>,
    pub initial: InitialSpec,
    pub min_order: f64,
    /// Relative residuals below this are round-off and skip the order test.
    pub floor: f64,
    pub seed: u64,
}

impl Default for MinkowskiConfig {
    fn default() -> Self {
        Self {
            n: 2,
            theta: FRAC_PI_3,
            ladder: vec![100, 200, 400, 800],
            n_alpha: Vec::new(),
            initial: InitialSpec::PerturbedCap {
                r: 1.0,
                modes: vec![
                    Mode {
                        m: 1,
                        j: 0,
                        amplitude: 0.05,
                    },
                    Mode {
                        m: 2,
                        j: 0,
                        amplitude: 0.02,
                    },
                ],
            },
            min_order: 1.7,
            floor: 1e-11,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexifyConfig {
    #[serde(default)]
    pub flow: FlowConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_stop")]
    pub t_stop: f64,
    /// Rescale the perturbation so that `min κ = 0` exactly.
    #[serde(default)]
    pub weaken: bool,
}

fn default_t_stop() -> f64 {
    0.01
}
