use std::io::Write;

use serde::Serialize;

use crate::bounds::{bound_set, increment_shape, BoundInputs, BoundSet};
use crate::error::{Error, Result};
use crate::metrics::{
    fit_powerlaw, modulus_sparse, skorokhod_if_small, skorokhod_upper_bound, sobolev_distance,
    PowerLaw,
};
use crate::randomness::PoissonAtoms;
use crate::simulate::{
    grid_count, simulate_continuous, simulate_discrete, ContinuousPath, DiscreteTrace, Field,
    SimOptions,
};

use super::config::{Built, ExperimentConfig, MetricKind};
use super::{fmt_opt, mean_se, run_trials, Verdict};

/// Default allowed shortfall of a fitted Monte Carlo slope below the
/// slope of the predicted shape.
pub const DEFAULT_SLOPE_SLACK: f64 = 0.25;

/// One coupled trial: the continuous path and one discrete trace per
/// ladder step. A runaway intensity is kept as a message.
pub(crate) struct TrialPaths {
    pub atoms: PoissonAtoms,
    pub continuous: std::result::Result<ContinuousPath, String>,
    pub discrete: Vec<std::result::Result<DiscreteTrace, String>>,
}

fn soft<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::RunawayIntensity(_)) => Ok(Err(e.to_string())),
        Err(e) => Err(e),
    }
}

/// Options with the initial ceiling resolved, after the stability check.
pub(crate) fn resolved_options(cfg: &ExperimentConfig, built: &Built) -> Result<SimOptions> {
    let mut opts = cfg.sim_options();
    opts.initial_ceiling = Some(built.model().initial_ceiling(&opts)?);
    Ok(opts)
}

pub(crate) fn couple_trial(
    built: &Built,
    opts: &SimOptions,
    deltas: &[f64],
    seed: u64,
    trial: u64,
) -> Result<TrialPaths> {
    let ceiling = opts.initial_ceiling.expect("resolved options");
    let mut atoms =
        PoissonAtoms::sample_on_stream(built.horizon, ceiling, &built.marks, seed, &[trial])?;
    let continuous = soft(simulate_continuous(
        &built.kernel,
        &built.psi,
        &mut atoms,
        opts,
    ))?;
    let mut discrete = Vec::with_capacity(deltas.len());
    if let Err(msg) = &continuous {
        discrete.resize(deltas.len(), Err(msg.clone()));
    } else {
        for &d in deltas {
            let m = grid_count(built.horizon, d)?;
            discrete.push(soft(simulate_discrete(
                &built.kernel,
                &built.psi,
                d,
                m,
                &mut atoms,
                opts,
            ))?);
        }
    }
    Ok(TrialPaths {
        atoms,
        continuous,
        discrete,
    })
}

/// Warn once per step whose discrete stability coefficient is not below one.
pub(crate) fn warn_discrete_stability(bounds: &[Option<BoundSet>]) {
    for b in bounds.iter().flatten() {
        if !b.stable_discrete {
            log::warn!(
                "rho_h_delta = {} >= 1 at delta = {}",
                b.rho_h_delta,
                b.delta
            );
        }
    }
}

pub(crate) fn bounds_ladder(cfg: &ExperimentConfig, built: &Built) -> Vec<Option<BoundSet>> {
    cfg.deltas
        .iter()
        .map(|&step| {
            let inp = BoundInputs {
                kernel: &built.kernel,
                psi: &built.psi,
                marks: &built.marks,
                step,
                horizon: built.horizon,
                eta: cfg.eta,
                p: cfg.p,
                allow_unstable: true,
            };
            bound_set(&inp)
                .map_err(|e| log::warn!("bounds unavailable at delta = {step}: {e}"))
                .ok()
        })
        .collect()
}

/// Values of every metric on one `(continuous, discrete)` pair, in the
/// order of `metrics`, and whether the exact Skorokhod distance was
/// replaced by the surrogate.
pub(crate) fn evaluate_metrics(
    metrics: &[MetricKind],
    eta: f64,
    cont: &ContinuousPath,
    trace: &DiscreteTrace,
) -> Result<(Vec<f64>, bool)> {
    let r = cont.step(Field::Risk)?;
    let rd = trace.step(Field::Risk)?;
    let mut upper = None;
    let mut surrogate = || -> Result<f64> {
        if let Some(u) = upper {
            return Ok(u);
        }
        let grid = r.sample_grid(trace.step, trace.count);
        let w = modulus_sparse(&r, trace.step)?;
        let u = skorokhod_upper_bound(&grid, &trace.risk[1..], w, trace.step)?;
        upper = Some(u);
        Ok(u)
    };
    let mut downgraded = false;
    let mut out = Vec::with_capacity(metrics.len());
    for &m in metrics {
        out.push(match m {
            MetricKind::TerminalCount => (cont.count() as f64 - trace.total_events() as f64).abs(),
            MetricKind::TerminalRisk => (cont.terminal_risk() - trace.terminal_risk()).abs(),
            MetricKind::Sobolev => sobolev_distance(&r, &rd, eta)?,
            MetricKind::SkorokhodUpper => surrogate()?,
            MetricKind::SkorokhodExact => match skorokhod_if_small(&r, &rd)? {
                Some(d) => d,
                None => {
                    downgraded = true;
                    surrogate()?
                }
            },
        });
    }
    Ok((out, downgraded))
}

/// Predicted shape of a metric at one step (unit constant).
fn theory_shape(metric: MetricKind, b: &BoundSet) -> f64 {
    match metric {
        MetricKind::TerminalCount | MetricKind::TerminalRisk => {
            increment_shape(b.c_r, 0.0, b.horizon, b.delta)
        }
        MetricKind::Sobolev => b.sobolev_shape,
        MetricKind::SkorokhodExact | MetricKind::SkorokhodUpper => b
            .skorokhod_shape_bounded
            .unwrap_or(b.skorokhod_shape_unbounded),
    }
}

/// Monte Carlo summary of one `(Delta, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub delta: f64,
    pub metric: MetricKind,
    /// `None` when every trial of the cell was aborted.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub theory_shape: Option<f64>,
    pub trials_ok: usize,
    pub aborted: usize,
    /// Trials where the exact Skorokhod distance fell back to the surrogate.
    pub downgraded: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub metric: MetricKind,
    /// Power law fitted to the Monte Carlo means.
    pub fit: Option<PowerLaw>,
    /// Power law fitted to the predicted shape.
    pub theory: Option<PowerLaw>,
    pub points: usize,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub horizon: f64,
    pub trials: usize,
    pub seed: u64,
    pub eta: f64,
    pub rho_h: Option<f64>,
    pub rows: Vec<Row>,
    pub fits: Vec<FitRow>,
    pub verdicts: Vec<Verdict>,
}

/// Power-law fits of the means and of the theory shapes, per metric.
pub fn fit_rows(rows: &[Row], metrics: &[MetricKind]) -> Vec<FitRow> {
    metrics
        .iter()
        .map(|&metric| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.metric == metric).collect();
            let mc: Vec<(f64, f64)> = mine
                .iter()
                .filter_map(|r| r.mean.filter(|&m| m > 0.0).map(|m| (r.delta, m)))
                .collect();
            let th: Vec<(f64, f64)> = mine
                .iter()
                .filter_map(|r| r.theory_shape.filter(|&m| m > 0.0).map(|m| (r.delta, m)))
                .collect();
            let all_zero = mine.iter().all(|r| r.mean == Some(0.0));
            let fit = if mc.len() == mine.len() {
                fit_powerlaw(&mc).ok()
            } else {
                None
            };
            let note = if all_zero {
                "identically zero".to_string()
            } else if fit.is_none() {
                format!("{} of {} cells positive", mc.len(), mine.len())
            } else {
                String::new()
            };
            FitRow {
                metric,
                fit,
                theory: if th.len() == mine.len() {
                    fit_powerlaw(&th).ok()
                } else {
                    None
                },
                points: mc.len(),
                note,
            }
        })
        .collect()
}

/// Slope verdicts: the error must decay at least as fast as its predicted
/// shape, up to `slack`.
pub(crate) fn slope_verdicts(fits: &[FitRow], slack: f64) -> Vec<Verdict> {
    fits.iter()
        .map(|f| {
            let check = format!("slope:{}", f.metric.name());
            match (f.fit, f.theory) {
                (Some(mc), Some(th)) => Verdict::at_least(
                    check,
                    mc.exponent,
                    th.exponent - slack,
                    format!("theory exponent {} minus slack {slack}", th.exponent),
                ),
                _ if f.note == "identically zero" => {
                    Verdict::at_least(check, 0.0, 0.0, f.note.clone())
                }
                _ => Verdict {
                    check,
                    passed: false,
                    measured: f64::NAN,
                    bound: f64::NAN,
                    margin: f64::NAN,
                    detail: format!("no fit: {}", f.note),
                },
            }
        })
        .collect()
}

/// Monte Carlo error of every requested metric along the `Delta` ladder.
pub fn run_convergence(cfg: &ExperimentConfig, workers: usize) -> Result<ConvergenceReport> {
    let built = cfg.build()?;
    let opts = resolved_options(cfg, &built)?;
    let bounds = bounds_ladder(cfg, &built);
    warn_discrete_stability(&bounds);

    let per_trial = run_trials(cfg.trials, workers, |trial| {
        let paths = couple_trial(&built, &opts, &cfg.deltas, cfg.seed, trial)?;
        paths
            .discrete
            .iter()
            .map(|d| match (&paths.continuous, d) {
                (Ok(c), Ok(t)) => evaluate_metrics(&cfg.metrics, cfg.eta, c, t).map(Ok),
                (Err(e), _) | (_, Err(e)) => Ok(Err(e.clone())),
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        for (j, &metric) in cfg.metrics.iter().enumerate() {
            let mut values = Vec::with_capacity(cfg.trials);
            let (mut aborted, mut downgraded, mut first_error) = (0, 0, None);
            for cell in per_trial.iter().map(|t| &t[k]) {
                match cell {
                    Ok((v, down)) => {
                        values.push(v[j]);
                        if *down && metric == MetricKind::SkorokhodExact {
                            downgraded += 1;
                        }
                    }
                    Err(e) => {
                        aborted += 1;
                        first_error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            let (mean, stderr) = if values.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_se(&values);
                (Some(m), Some(s).filter(|s| s.is_finite()))
            };
            rows.push(Row {
                delta,
                metric,
                mean,
                stderr,
                theory_shape: bounds[k].as_ref().map(|b| theory_shape(metric, b)),
                trials_ok: values.len(),
                aborted,
                downgraded,
                first_error,
            });
        }
    }
    let fits = fit_rows(&rows, &cfg.metrics);
    let slack = cfg.verify.slope_slack.unwrap_or(DEFAULT_SLOPE_SLACK);
    let verdicts = slope_verdicts(&fits, slack);
    Ok(ConvergenceReport {
        horizon: cfg.horizon,
        trials: cfg.trials,
        seed: cfg.seed,
        eta: cfg.eta,
        rho_h: bounds.iter().flatten().next().map(|b| b.rho_h),
        rows,
        fits,
        verdicts,
    })
}

impl ConvergenceReport {
    /// `delta,metric,mean,stderr,theory_shape,trials_ok,aborted,downgraded`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "delta",
            "metric",
            "mean",
            "stderr",
            "theory_shape",
            "trials_ok",
            "aborted",
            "downgraded",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.delta.to_string(),
                r.metric.name().to_string(),
                fmt_opt(r.mean),
                fmt_opt(r.stderr),
                fmt_opt(r.theory_shape),
                r.trials_ok.to_string(),
                r.aborted.to_string(),
                r.downgraded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `metric,coefficient,exponent,residual_se,theory_coefficient,theory_exponent,points,note`
    pub fn write_fit_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "metric",
            "coefficient",
            "exponent",
            "residual_se",
            "theory_coefficient",
            "theory_exponent",
            "points",
            "note",
        ])?;
        for f in &self.fits {
            w.write_record([
                f.metric.name().to_string(),
                fmt_opt(f.fit.map(|p| p.coefficient)),
                fmt_opt(f.fit.map(|p| p.exponent)),
                fmt_opt(f.fit.map(|p| p.residual_se)),
                fmt_opt(f.theory.map(|p| p.coefficient)),
                fmt_opt(f.theory.map(|p| p.exponent)),
                f.points.to_string(),
                f.note.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn row(&self, delta: f64, metric: MetricKind) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.delta == delta && r.metric == metric)
    }

    pub fn fit(&self, metric: MetricKind) -> Option<&FitRow> {
        self.fits.iter().find(|f| f.metric == metric)
    }
}
