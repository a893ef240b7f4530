use serde::Serialize;

use crate::bounds::{increment_shape, modulus_poisson_bound, rho_continuous, rho_discrete};
use crate::error::Result;
use crate::metrics::{fit_powerlaw, modulus_sparse};
use crate::randomness::PoissonAtoms;
use crate::simulate::{eval_intensity, Field, StepPath};

use super::config::{Built, ExperimentConfig};
use super::convergence::{couple_trial, resolved_options, DEFAULT_SLOPE_SLACK};
use super::{mean_se, run_trials, Verdict};

/// Stream prefix of the compound Poisson ensemble, disjoint from trial
/// streams `[trial, ..]`.
const MODULUS_STREAM: u64 = 1 << 63;

const DEFAULT_TIME_POINTS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct IntensityRow {
    pub t: f64,
    pub continuous_mean: f64,
    pub continuous_stderr: f64,
    pub discrete_mean: f64,
    pub discrete_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementRow {
    pub delta: f64,
    pub mean: f64,
    pub stderr: f64,
    pub shape: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub horizon: f64,
    pub trials: usize,
    /// Trials dropped after a runaway intensity.
    pub aborted: usize,
    pub verdicts: Vec<Verdict>,
    pub intensity: Vec<IntensityRow>,
    pub increments: Vec<IncrementRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        super::write_verdicts(&self.verdicts, out)
    }
}

struct TrialStats {
    lambda: Vec<f64>,
    lambda_discrete: Vec<f64>,
    xi: f64,
    xi_discrete: f64,
    increments: Vec<f64>,
}

fn within_three_se(check: &str, xs: &[f64]) -> Verdict {
    let (m, se) = mean_se(xs);
    Verdict::at_most(check, m.abs(), 3.0 * se, format!("mean {m}, stderr {se}"))
}

/// Run the invariant suites on `cfg`: stability, mean-intensity bounds,
/// martingale means, the compound Poisson modulus bound and the scaling
/// of the increment error.
pub fn verify_bounds(cfg: &ExperimentConfig, workers: usize) -> Result<VerifyReport> {
    let built = cfg.build()?;
    // Stability is a verdict here, never a reason to stop.
    let relaxed = ExperimentConfig {
        allow_unstable: true,
        ..cfg.clone()
    };
    let opts = resolved_options(&relaxed, &built)?;
    let v = &cfg.verify;
    let trials = v.trials.unwrap_or(cfg.trials);
    let points = v.time_points.unwrap_or(DEFAULT_TIME_POINTS);
    let horizon = built.horizon;
    let (s, t) = v
        .increment_window
        .unwrap_or((horizon / 4.0, 3.0 * horizon / 4.0));
    let slack = v.slope_slack.unwrap_or(DEFAULT_SLOPE_SLACK);
    let times: Vec<f64> = (1..=points)
        .map(|i| horizon * i as f64 / points as f64)
        .collect();
    let fine = cfg.deltas.len() - 1;
    let fine_step = cfg.deltas[fine];
    let fine_count = built.counts[fine];
    let lip = built.psi.lipschitz();
    let psi0 = built.psi.at_zero();
    let mean_y = built.marks.mean()?;

    let rho_h = rho_continuous(&built.kernel, horizon, lip, &built.marks)?;
    let rho_d = cfg
        .deltas
        .iter()
        .zip(&built.counts)
        .map(|(&d, &m)| rho_discrete(&built.kernel.grid_coefficients(d, m)?, lip, &built.marks))
        .collect::<Result<Vec<_>>>()?;

    let stats = run_trials(trials, workers, |trial| {
        let paths = couple_trial(&built, &opts, &cfg.deltas, cfg.seed, trial)?;
        let (Ok(cont), true) = (&paths.continuous, paths.discrete.iter().all(|d| d.is_ok())) else {
            return Ok(None);
        };
        let traces: Vec<_> = paths.discrete.iter().map(|d| d.as_ref().unwrap()).collect();
        let fine_trace = traces[fine];
        let lambda = times
            .iter()
            .map(|&u| eval_intensity(cont, &built.kernel, &built.psi, u))
            .collect();
        let lambda_discrete = times
            .iter()
            .map(|&u| fine_trace.intensity[((u / fine_step).round() as usize).clamp(1, fine_count)])
            .collect();
        let r = cont.step(Field::Risk)?;
        let xi = r.terminal() - mean_y * cont.intensity_integral(&built.kernel, &built.psi)?;
        let xi_discrete = fine_trace.terminal_risk() - mean_y * fine_trace.compensator();
        let increments = traces
            .iter()
            .map(|tr| {
                let rd = tr.step(Field::Risk)?;
                Ok(((r.value_at(t) - r.value_at(s)) - (rd.value_at(t) - rd.value_at(s))).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(TrialStats {
            lambda,
            lambda_discrete,
            xi,
            xi_discrete,
            increments,
        }))
    })?;
    let ok: Vec<&TrialStats> = stats.iter().flatten().collect();
    let aborted = stats.len() - ok.len();

    let mut verdicts = vec![Verdict::at_most(
        "stability_continuous",
        rho_h,
        1.0 - f64::EPSILON,
        "rho_h < 1",
    )];
    for (d, r) in cfg.deltas.iter().zip(&rho_d) {
        verdicts.push(Verdict::at_most(
            format!("stability_discrete[{d}]"),
            *r,
            1.0 - f64::EPSILON,
            "rho_h_delta < 1",
        ));
    }

    let mut intensity = Vec::with_capacity(points);
    let bound_c = if rho_h < 1.0 {
        psi0 / (1.0 - rho_h)
    } else {
        f64::INFINITY
    };
    let bound_d = if rho_d[fine] < 1.0 {
        psi0 / (1.0 - rho_d[fine])
    } else {
        f64::INFINITY
    };
    let (mut worst_c, mut worst_d) = (f64::INFINITY, f64::INFINITY);
    let (mut max_c, mut max_d) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &u) in times.iter().enumerate() {
        let (mc, sc) = mean_se(&ok.iter().map(|x| x.lambda[i]).collect::<Vec<_>>());
        let (md, sd) = mean_se(&ok.iter().map(|x| x.lambda_discrete[i]).collect::<Vec<_>>());
        worst_c = worst_c.min(bound_c + 3.0 * sc - mc);
        worst_d = worst_d.min(bound_d + 3.0 * sd - md);
        max_c = max_c.max(mc);
        max_d = max_d.max(md);
        intensity.push(IntensityRow {
            t: u,
            continuous_mean: mc,
            continuous_stderr: sc,
            discrete_mean: md,
            discrete_stderr: sd,
        });
    }
    let mean_verdict = |check: &str, max: f64, bound: f64, worst: f64| Verdict {
        check: check.to_string(),
        passed: worst >= 0.0 && ok.len() >= 2,
        measured: max,
        bound,
        margin: worst,
        detail: format!("mean <= bound + 3 stderr at {points} times"),
    };
    verdicts.push(mean_verdict(
        "mean_intensity_continuous",
        max_c,
        bound_c,
        worst_c,
    ));
    verdicts.push(mean_verdict(
        &format!("mean_intensity_discrete[{fine_step}]"),
        max_d,
        bound_d,
        worst_d,
    ));

    verdicts.push(within_three_se(
        "martingale_continuous",
        &ok.iter().map(|x| x.xi).collect::<Vec<_>>(),
    ));
    verdicts.push(within_three_se(
        &format!("martingale_discrete[{fine_step}]"),
        &ok.iter().map(|x| x.xi_discrete).collect::<Vec<_>>(),
    ));

    verdicts.push(modulus_verdict(cfg, &built, trials, workers)?);

    let c_r: Vec<f64> = cfg
        .deltas
        .iter()
        .map(|&d| built.kernel.c_r(d, horizon).map(|c| c.total()))
        .collect::<Result<_>>()?;
    let increments: Vec<IncrementRow> = cfg
        .deltas
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let (mean, stderr) = mean_se(&ok.iter().map(|x| x.increments[k]).collect::<Vec<_>>());
            IncrementRow {
                delta: d,
                mean,
                stderr,
                shape: increment_shape(c_r[k], s, t, d),
            }
        })
        .collect();
    verdicts.push(increment_verdict(&increments, slack));

    Ok(VerifyReport {
        horizon,
        trials,
        aborted,
        verdicts,
        intensity,
        increments,
    })
}

fn modulus_verdict(
    cfg: &ExperimentConfig,
    built: &Built,
    trials: usize,
    workers: usize,
) -> Result<Verdict> {
    let rate = cfg.verify.modulus_rate.unwrap_or(built.psi.at_zero());
    let step = cfg.verify.modulus_delta.unwrap_or(cfg.deltas[0]);
    let check = format!("modulus_poisson[rate={rate}, delta={step}]");
    if !(rate > 0.0) {
        return Ok(Verdict::at_least(
            check,
            0.0,
            0.0,
            "zero rate: modulus identically zero",
        ));
    }
    let horizon = built.horizon;
    let w = run_trials(trials, workers, |trial| {
        let atoms = PoissonAtoms::sample_on_stream(
            horizon,
            rate,
            &built.marks,
            cfg.seed,
            &[MODULUS_STREAM, trial],
        )?;
        let list = atoms.merged();
        let times: Vec<f64> = list.iter().map(|a| a.tau).collect();
        let ys: Vec<f64> = list.iter().map(|a| a.y).collect();
        modulus_sparse(&StepPath::from_jumps(0.0, &times, &ys, horizon)?, step)
    })?;
    let (m, se) = mean_se(&w);
    let bound = modulus_poisson_bound(rate, horizon, step, &built.marks)?;
    Ok(Verdict::at_most(
        check,
        m,
        bound + 3.0 * se,
        format!("mean {m}, stderr {se}, bound {bound}"),
    ))
}

fn increment_verdict(rows: &[IncrementRow], slack: f64) -> Verdict {
    let check = "increment_scaling";
    if rows.iter().all(|r| r.mean == 0.0) {
        return Verdict::at_least(check, 0.0, 0.0, "identically zero");
    }
    let mc: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.mean)).collect();
    let th: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.shape)).collect();
    match (fit_powerlaw(&mc), fit_powerlaw(&th)) {
        (Ok(a), Ok(b)) => Verdict::at_least(
            check,
            a.exponent,
            b.exponent - slack,
            format!("shape exponent {} minus slack {slack}", b.exponent),
        ),
        (a, b) => Verdict {
            check: check.to_string(),
            passed: false,
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            detail: format!(
                "no fit: {}",
                a.err()
                    .or(b.err())
                    .map(|e| e.to_string())
                    .unwrap_or_default()
            ),
        },
    }
}
