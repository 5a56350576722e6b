//! Statistics, experiment drivers and reports.
//!
//! [`execute`] runs an experiment in memory; [`run_experiment`] also writes
//! `report.json`, `timing.json` and the CSV tables. Reports hold no clock
//! readings, so equal configurations give byte-identical reports.

pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;
pub mod suites;

use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use report::{Attempt, Check, ExperimentReport, Table};

use crate::rng::derive_seed;
use crate::Result;

/// One seeded pass of the configured experiment.
pub fn attempt(cfg: &ExperimentConfig, seed: u64) -> Result<Attempt> {
    let start = Instant::now();
    let p = &cfg.params;
    let (checks, tables) = match cfg.experiment {
        Experiment::FlowConvergence => experiments::flow_convergence(cfg, &cfg.disturbance.rungs()?, seed)?,
        Experiment::PairCovariance => experiments::pair_covariance(cfg, &cfg.disturbance.rungs()?, seed)?,
        Experiment::CoalescenceTime => experiments::coalescence_time(cfg, seed)?,
        Experiment::TimeReversal => experiments::time_reversal(cfg, &cfg.disturbance.rungs()?[0], seed)?,
        Experiment::MetricSelftest => {
            let mut checks = Vec::new();
            let mut tables = Vec::new();
            for (c, t) in [
                suites::algebra_suite(seed, 200)?,
                suites::flow_algebra_suite(seed)?,
                suites::metric_suite(seed, p.pairs, p.level)?,
            ] {
                checks.extend(c);
                tables.extend(t);
            }
            (checks, tables)
        }
        Experiment::WebDistance => suites::web_suite(seed, p.pairs, p.level)?,
    };
    let mut a = Attempt::new(seed, checks, tables);
    a.seconds = start.elapsed().as_secs_f64();
    Ok(a)
}

/// The seed of the re-run: the second configured seed, or one derived from
/// the first.
pub fn rerun_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seeds.get(1).copied().unwrap_or_else(|| derive_seed(cfg.seed(), 0x7e_5eed))
}

/// Runs the experiment, re-running once with a fresh seed if a check fails
/// and re-runs are enabled.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut attempts = vec![attempt(cfg, cfg.seed())?];
    if !attempts[0].passed && cfg.params.rerun {
        attempts.push(attempt(cfg, rerun_seed(cfg))?);
    }
    let passed = attempts.last().expect("one attempt").passed;
    Ok(ExperimentReport { experiment: cfg.experiment.to_string(), config: cfg.clone(), attempts, passed })
}

/// [`execute`], then write the outputs if an output directory is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = execute(cfg)?;
    if let Some(dir) = &cfg.output.dir {
        report.write(dir)?;
    }
    Ok(report)
}
