//! One coupled trial: the continuous path, the discrete traces of the
//! ladder and their pathwise distances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    modulus_sparse, skorokhod_if_small, skorokhod_upper_bound, sobolev_distance, uniform_distance,
};
use crate::randomness::PoissonAtoms;
use crate::simulate::{ContinuousPath, DiscreteTrace, Field, StepPath};

use super::config::{Built, ExperimentConfig};
use super::convergence::{couple_trial, resolved_options};

/// Distances between `R` and `R^Delta` on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupleRow {
    pub delta: f64,
    pub count: usize,
    pub count_delta: u64,
    pub risk: f64,
    pub risk_delta: f64,
    pub uniform: f64,
    pub sobolev: f64,
    /// `None` above the exact jump cap.
    pub skorokhod: Option<f64>,
    pub skorokhod_upper: f64,
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub trial: u64,
    pub atoms: PoissonAtoms,
    pub continuous: ContinuousPath,
    /// One trace per ladder step, in ladder order.
    pub discrete: Vec<DiscreteTrace>,
    pub rows: Vec<CoupleRow>,
}

/// Simulate trial `trial` of `cfg`, with discrete traces for every step of
/// `deltas`. A runaway on any path is an error here.
pub fn run_single(
    cfg: &ExperimentConfig,
    built: &Built,
    deltas: &[f64],
    trial: u64,
) -> Result<SingleRun> {
    let opts = resolved_options(cfg, built)?;
    let paths = couple_trial(built, &opts, deltas, cfg.seed, trial)?;
    let continuous = paths.continuous.map_err(Error::RunawayIntensity)?;
    let discrete = paths
        .discrete
        .into_iter()
        .map(|d| d.map_err(Error::RunawayIntensity))
        .collect::<Result<Vec<_>>>()?;
    let r = continuous.step(Field::Risk)?;
    let rows = discrete
        .iter()
        .map(|tr| couple_row(&continuous, &r, tr, cfg.eta))
        .collect::<Result<Vec<_>>>()?;
    Ok(SingleRun {
        trial,
        atoms: paths.atoms,
        continuous,
        discrete,
        rows,
    })
}

fn couple_row(
    cont: &ContinuousPath,
    r: &StepPath,
    tr: &DiscreteTrace,
    eta: f64,
) -> Result<CoupleRow> {
    let rd = tr.step(Field::Risk)?;
    let grid = r.sample_grid(tr.step, tr.count);
    Ok(CoupleRow {
        delta: tr.step,
        count: cont.count(),
        count_delta: tr.total_events(),
        risk: cont.terminal_risk(),
        risk_delta: tr.terminal_risk(),
        uniform: uniform_distance(r, &rd)?,
        sobolev: sobolev_distance(r, &rd, eta)?,
        skorokhod: skorokhod_if_small(r, &rd)?,
        skorokhod_upper: skorokhod_upper_bound(
            &grid,
            &tr.risk[1..],
            modulus_sparse(r, tr.step)?,
            tr.step,
        )?,
    })
}

impl SingleRun {
    /// Named paths for `trajectories.csv`: `N`, `xi`, `R`, then
    /// `N_delta_<d>`, `R_delta_<d>`, `lambda_delta_<d>` per step.
    pub fn trajectories(&self) -> Result<Vec<(String, StepPath)>> {
        let mut named = vec![
            ("N".to_string(), self.continuous.step(Field::Count)?),
            ("xi".to_string(), self.continuous.step(Field::Modulated)?),
            ("R".to_string(), self.continuous.step(Field::Risk)?),
        ];
        for tr in &self.discrete {
            named.push((format!("N_delta_{}", tr.step), tr.step(Field::Count)?));
            named.push((format!("R_delta_{}", tr.step), tr.step(Field::Risk)?));
            named.push((
                format!("lambda_delta_{}", tr.step),
                tr.step(Field::Intensity)?,
            ));
        }
        Ok(named)
    }

    /// `couple.csv`: one row per step.
    pub fn write_couple_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "delta",
            "count",
            "count_delta",
            "risk",
            "risk_delta",
            "uniform",
            "sobolev",
            "skorokhod",
            "skorokhod_upper",
        ])?;
        for row in &self.rows {
            w.write_record([
                row.delta.to_string(),
                row.count.to_string(),
                row.count_delta.to_string(),
                row.risk.to_string(),
                row.risk_delta.to_string(),
                row.uniform.to_string(),
                row.sobolev.to_string(),
                super::fmt_opt(row.skorokhod),
                row.skorokhod_upper.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"kernel": {"family": "exponential", "alpha": 0.5, "beta": 1.0},
                "jump_rate": {"family": "relu-affine", "mu": 1.0},
                "horizon": 3.0, "deltas": [0.5, 0.1], "seed": 11}"#,
        )
        .unwrap()
    }

    #[test]
    fn rows_follow_the_ladder() {
        let c = cfg();
        let built = c.build().unwrap();
        let run = run_single(&c, &built, &c.deltas, 4).unwrap();
        assert_eq!(run.rows.len(), 2);
        assert_eq!(run.discrete.len(), 2);
        for row in &run.rows {
            assert_eq!(row.count, run.continuous.count());
            assert!(row.uniform >= 0.0 && row.sobolev >= 0.0);
            if let Some(d) = row.skorokhod {
                assert!(d <= row.uniform + 1e-12);
            }
        }
        let names: Vec<_> = run
            .trajectories()
            .unwrap()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        assert_eq!(names.len(), 3 + 3 * 2);
        assert_eq!(names[3], "N_delta_0.5");
    }

    #[test]
    fn same_trial_same_run() {
        let c = cfg();
        let built = c.build().unwrap();
        let a = run_single(&c, &built, &c.deltas, 2).unwrap();
        let b = run_single(&c, &built, &c.deltas, 2).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.continuous, b.continuous);
    }
}
