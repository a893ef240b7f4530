//! Experiment configuration, Monte Carlo orchestration and the CLI.
//!
//! Trials run on a bounded rayon pool. Every trial draws from its own
//! stream `[trial]` of the master seed and results are reduced in trial
//! order, so outputs are byte-identical for any worker count.

pub mod cli;
mod config;
mod convergence;
mod single;
mod verify;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    Built, DistributionSpec, ExperimentConfig, KernelSpec, MarkSpec, MetricKind, ModulationSpec,
    VerifyConfig,
};
pub use convergence::{
    fit_rows, run_convergence, ConvergenceReport, FitRow, Row, DEFAULT_SLOPE_SLACK,
};
pub use single::{run_single, CoupleRow, SingleRun};
pub use verify::{verify_bounds, VerifyReport};

use crate::error::{Error, Result};

/// Environment variable holding the worker count; unset or `0` means one
/// worker per core.
pub const WORKERS_ENV: &str = "HAWKES_RISK_WORKERS";

pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{WORKERS_ENV} must be a nonnegative integer, got {s:?}"
            ))
        }),
    }
}

/// `f(0), ..., f(n-1)` on a pool of `workers` threads, in index order.
pub(crate) fn run_trials<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pass/fail outcome of one check, with the measured margin
/// (nonnegative exactly when the check passes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub detail: String,
}

impl Verdict {
    /// `measured <= bound`.
    pub(crate) fn at_most(
        check: impl Into<String>,
        measured: f64,
        bound: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            check: check.into(),
            passed: measured <= bound,
            measured,
            bound,
            margin: bound - measured,
            detail: detail.into(),
        }
    }

    /// `measured >= bound`.
    pub(crate) fn at_least(
        check: impl Into<String>,
        measured: f64,
        bound: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            check: check.into(),
            passed: measured >= bound,
            measured,
            bound,
            margin: measured - bound,
            detail: detail.into(),
        }
    }
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub(crate) fn write_verdicts<W: std::io::Write>(verdicts: &[Verdict], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "passed", "measured", "bound", "margin", "detail"])?;
    for v in verdicts {
        w.write_record([
            v.check.clone(),
            v.passed.to_string(),
            v.measured.to_string(),
            v.bound.to_string(),
            v.margin.to_string(),
            v.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
