//! JSON result envelope.

use lrce_core::planner::ComparisonReport;
use lrce_core::sim::{PanelStats, VerificationReport};
use lrce_core::{LrceSolution, OracleSolution, PlannerSolution, ValidationReport};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultBundle {
    /// Command line that produced the result.
    pub command: Vec<String>,
    pub config_hash: String,
    pub version: String,
    pub result: CommandResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandResult {
    Solve(LrceSolution),
    Supply(SupplyTable),
    Planner(PlannerSolution),
    Compare(ComparisonReport),
    OracleTwotype(OracleSolution),
    Simulate(SimulationResult),
    Validate(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyRow {
    pub quantity: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyTable {
    pub rows: Vec<SupplyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub price: f64,
    pub threshold: f64,
    pub stats: PanelStats,
    pub mean_firm_count: f64,
    pub exit_rate: f64,
    pub verification: VerificationReport,
}

impl ResultBundle {
    pub fn new(command: Vec<String>, config_hash: String, result: CommandResult) -> Self {
        Self { command, config_hash, version: VERSION.to_string(), result }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
