//! Run configuration read from JSON.

use std::fs;
use std::path::Path;

use lrce_core::{ModelPrimitives, SolverOptions, TwoTypeModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_CELLS: usize = 201;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

fn default_cells() -> usize {
    DEFAULT_CELLS
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub primitives: ModelPrimitives,
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Firm first-order-condition tolerance; overrides `solver.tolerance`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Skip the assumption checks. Structural checks still apply.
    #[serde(default)]
    pub bypass_validation: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub supply: Option<SupplyOptions>,
    #[serde(default)]
    pub surface: Option<SurfaceOptions>,
    #[serde(default)]
    pub simulation: Option<SimulationOptions>,
    /// Closed-form two-type model for `oracle-twotype`.
    #[serde(default)]
    pub twotype: Option<TwoTypeModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyOptions {
    pub quantities: Vec<f64>,
}

/// Price grid for the average-cost curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceOptions {
    pub price_low: f64,
    pub price_high: f64,
    #[serde(default = "default_prices")]
    pub prices: usize,
    /// Write every `stride`-th boundary.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_prices() -> usize {
    400
}

fn default_stride() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationOptions {
    #[serde(default = "default_entrants")]
    pub entrants: u32,
    pub periods: Option<u32>,
    pub burn_in: Option<u32>,
    #[serde(default)]
    pub seed: u64,
}

fn default_entrants() -> u32 {
    1000
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { entrants: default_entrants(), periods: None, burn_in: None, seed: 0 }
    }
}

impl RunConfig {
    pub fn minimal(primitives: ModelPrimitives) -> Self {
        Self {
            primitives,
            cells: DEFAULT_CELLS,
            tolerance: DEFAULT_TOLERANCE,
            bypass_validation: false,
            solver: SolverOptions::default(),
            supply: None,
            surface: None,
            simulation: None,
            twotype: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.cells < 2 {
            return Err(CliError::Config(format!("cells = {} but at least 2 are needed", self.cells)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Config(format!("tolerance = {} must be positive", self.tolerance)));
        }
        if let Some(s) = &self.surface {
            if !(s.price_low >= 0.0 && s.price_high > s.price_low) || s.prices < 2 || s.stride == 0 {
                return Err(CliError::Config(String::from(
                    "surface needs 0 <= price_low < price_high, prices >= 2 and stride >= 1",
                )));
            }
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tolerance: self.tolerance, ..self.solver.clone() }
    }

    /// SHA-256 of the compact JSON of the config with defaults filled in and keys sorted.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "primitives": {
            "type_low": 1.0, "type_high": 3.0,
            "cost": {"variable": {"kind": "quadratic", "curvature": 1.0}, "fixed": {"slope": 1.0}},
            "demand": {"kind": "linear", "intercept": 10.0, "slope": 1.0},
            "kernel": {"kind": "truncated_normal", "persistence": 0.8, "center": 2.0, "sigma": 0.3},
            "entrants": {"kind": "uniform"},
            "discount": 0.9, "exit_prob": 0.1, "entry_cost": 0.0
        }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.cells, 201);
        assert_eq!(cfg.tolerance, 1e-10);
        assert!(!cfg.bypass_validation);
        assert_eq!(cfg.solver, SolverOptions::default());
        assert_eq!(cfg, RunConfig::minimal(cfg.primitives.clone()));
    }

    #[test]
    fn misspelled_field_is_named() {
        let bad = MINIMAL.replace("\"discount\"", "\"dicount\"");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("dicount"), "{err}");
        let bad = MINIMAL.replacen('{', "{\"cels\": 10,", 1);
        assert!(RunConfig::from_json(&bad).unwrap_err().to_string().contains("cels"));
    }

    #[test]
    fn hash_ignores_layout_and_spelled_out_defaults() {
        let a = RunConfig::from_json(MINIMAL).unwrap().hash();
        let compact: String = MINIMAL.split_whitespace().collect();
        assert_eq!(a, RunConfig::from_json(&compact).unwrap().hash());
        let explicit = MINIMAL.replacen('{', "{\"tolerance\": 1e-10, \"cells\": 201,", 1);
        assert_eq!(a, RunConfig::from_json(&explicit).unwrap().hash());
        let other = MINIMAL.replacen('{', "{\"cells\": 101,", 1);
        assert_ne!(a, RunConfig::from_json(&other).unwrap().hash());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn top_level_tolerance_wins() {
        let cfg = RunConfig::from_json(&MINIMAL.replacen('{', "{\"tolerance\": 1e-8,", 1)).unwrap();
        assert_eq!(cfg.solver_options().tolerance, 1e-8);
    }
}
