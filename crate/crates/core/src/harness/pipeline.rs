//! Solve, tabulate and evaluate one configuration, or a sweep of them.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::{RunRecord, RunStatus, SolverDiagnostics, Stage, StageError};
use super::store::RecordStore;
use crate::distortion::{compute_table, evaluate_conditions, seed_consensus, CriterionReport, DistortionTable};
use crate::variational::{minimal_window, Configuration};
use crate::{Error, Result};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Runs the full pipeline on `workers` threads. Failures are recorded in the
/// returned record rather than propagated; see [`RunRecord::status`].
pub fn run_criteria(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    let pool = pool(workers)?;
    Ok(pool.install(|| run_in_pool(config)))
}

/// The minimizer depends on the first seed only, so every seed shares it.
pub fn solve(config: &ExperimentConfig) -> Result<Configuration> {
    let map = config.map()?;
    minimal_window(
        &map,
        config.window,
        Some(config.kappa_max),
        config.margin,
        config.seeds.first().copied().unwrap_or(0),
    )
}

fn degenerate_reports(config: &ExperimentConfig, reason: &str) -> Vec<CriterionReport> {
    let a = config.alpha().map(|a| a.bound()).unwrap_or(0);
    config
        .seeds
        .iter()
        .map(|&s| CriterionReport::degenerate(s, (config.kappa_min, config.kappa_max), config.eps, a, reason))
        .collect()
}

fn run_in_pool(config: &ExperimentConfig) -> RunRecord {
    let mut rec = RunRecord::new(config);
    if let Err(e) = config.validate() {
        rec.errors.push(StageError::new(Stage::Config, &e));
        rec.status = RunStatus::Rejected;
        rec.finish();
        return rec;
    }
    log::info!("solving window M = {} for config {}", config.window, &rec.config_hash[..12]);
    let window = match solve(config) {
        Ok(c) => c,
        Err(e) => {
            log::warn!("solve failed: {e}");
            rec.errors.push(StageError::new(Stage::Solve, &e));
            if let Error::Degenerate(reason) = &e {
                // a collapsed minimizer is a definite negative outcome
                rec.reports = degenerate_reports(config, reason);
                rec.consensus = Some(seed_consensus(&rec.reports));
                rec.status = RunStatus::Complete;
            }
            rec.finish();
            return rec;
        }
    };
    rec.solver = Some(SolverDiagnostics::of(&window));

    let results: Vec<(u64, Result<DistortionTable>)> = config
        .seeds
        .par_iter()
        .map(|&s| (s, compute_table(&window, config.kappa_min, config.kappa_max, &config.params(s))))
        .collect();
    let mut complete = true;
    for (seed, r) in results {
        match r {
            Ok(t) => {
                log::info!("seed {seed}: {} rows, {} holes", t.rows.len(), t.holes.len());
                rec.reports.push(evaluate_conditions(&t));
                rec.tables.push(t);
            }
            Err(e) => {
                log::warn!("seed {seed}: {e}");
                rec.errors.push(StageError::new(Stage::Distortion, &e));
                if let Error::Degenerate(reason) = &e {
                    let a = window.map().alpha().bound();
                    rec.reports.push(CriterionReport::degenerate(
                        seed,
                        (config.kappa_min, config.kappa_max),
                        config.eps,
                        a,
                        reason,
                    ));
                } else {
                    complete = false;
                }
            }
        }
    }
    if !rec.reports.is_empty() {
        rec.consensus = Some(seed_consensus(&rec.reports));
    }
    rec.status = if complete { RunStatus::Complete } else { RunStatus::Partial };
    rec.finish();
    rec
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub ran: usize,
    pub skipped: usize,
}

/// Runs every grid point not already in `store`, appending records in grid
/// order. A stored record whose canonical configuration differs from the
/// grid point under the same hash is an error.
pub fn run_sweep(grid: &[ExperimentConfig], store: &mut RecordStore, workers: usize) -> Result<SweepSummary> {
    let mut summary = SweepSummary::default();
    let mut todo = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in grid {
        let h = c.hash();
        if let Some(old) = store.get(&h)? {
            if old.config.canonical_json() != c.canonical_json() {
                return Err(Error::Io(format!("store holds a different configuration under {h}")));
            }
            summary.skipped += 1;
        } else if seen.insert(h) {
            todo.push(c);
        } else {
            summary.skipped += 1;
        }
    }
    let pool = pool(workers)?;
    // chunks keep completed work durable without reordering the store
    for chunk in todo.chunks(workers.max(1)) {
        let records: Vec<RunRecord> = pool.install(|| chunk.par_iter().map(|c| run_in_pool(c)).collect());
        for r in &records {
            store.append(r)?;
            summary.ran += 1;
        }
    }
    Ok(summary)
}
