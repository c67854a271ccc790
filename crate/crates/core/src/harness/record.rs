//! Self-contained run records.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::distortion::{CriterionReport, DistortionTable, SeedConsensus, Verdict};
use crate::variational::Configuration;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Solve,
    Distortion,
    Criteria,
}

/// An error captured with the pipeline stage that raised it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: Stage,
    pub kind: String,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, e: &crate::Error) -> Self {
        let kind = match e {
            crate::Error::Infeasible(_) => "infeasible",
            crate::Error::Degenerate(_) => "degenerate",
            crate::Error::Convergence { .. } => "convergence",
            crate::Error::InvalidInput(_) => "invalid-input",
            crate::Error::Invariant(_) => "invariant",
            _ => "internal",
        };
        Self { stage, kind: kind.to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Every seed produced a table and a report.
    Complete,
    /// The configuration was refused before solving.
    Rejected,
    /// Some stage failed; whatever was computed is kept.
    Partial,
}

/// Summary of the minimizing configuration shared by all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub p: u64,
    pub q: u64,
    pub residual: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub phases_converged: usize,
    pub reduced_action: f64,
    pub ordering_ok: bool,
    pub min_gap: f64,
}

impl SolverDiagnostics {
    pub fn of(c: &Configuration) -> Self {
        Self {
            p: c.p(),
            q: c.q(),
            residual: c.residual(),
            el_residual: c.el_residual(),
            iterations: c.stats().iterations,
            phases_converged: c.stats().phases_converged,
            reduced_action: c.reduced_action(),
            ordering_ok: c.ordering_check(),
            min_gap: c.rotation_gaps().into_iter().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub timestamps: Timestamps,
    pub status: RunStatus,
    pub errors: Vec<StageError>,
    pub solver: Option<SolverDiagnostics>,
    /// One table per seed, in seed order.
    pub tables: Vec<DistortionTable>,
    pub reports: Vec<CriterionReport>,
    pub consensus: Option<SeedConsensus>,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            timestamps: Timestamps { started: now(), finished: String::new() },
            status: RunStatus::Partial,
            errors: Vec::new(),
            solver: None,
            tables: Vec::new(),
            reports: Vec::new(),
            consensus: None,
        }
    }

    pub fn finish(&mut self) {
        self.timestamps.finished = now();
    }

    /// Cross-seed verdict; `None` when no report was produced.
    pub fn verdict(&self) -> Option<Verdict> {
        self.consensus.as_ref().map(|c| c.overall)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json(line: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(line)?)
    }

    /// The record with timestamps blanked, for reproducibility comparisons.
    pub fn payload_json(&self) -> String {
        let mut r = self.clone();
        r.timestamps = Timestamps { started: String::new(), finished: String::new() };
        r.to_json()
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}
