//! Distances between càdlàg step paths and power-law fits of error curves.

mod modulus;
mod skorokhod;
mod sobolev;

use serde::{Deserialize, Serialize};

pub use modulus::modulus_sparse;
pub use skorokhod::{feasible_eps, skorokhod_distance, skorokhod_if_small, EXACT_JUMP_CAP};
pub use sobolev::{indicator_norm, sobolev_distance, sobolev_norm};

use crate::error::{Error, Result};
use crate::simulate::{check_horizons, StepPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Sobolev smoothness, in `(0, 1)`.
    pub eta: f64,
    /// Largest jump count per path for the exact Skorokhod distance.
    pub skorokhod_jump_cap: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            eta: 0.25,
            skorokhod_jump_cap: EXACT_JUMP_CAP,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::param(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// `sup_t |f(t) - g(t)|` over `[0, T]`.
pub fn uniform_distance(f: &StepPath, g: &StepPath) -> Result<f64> {
    check_horizons(f, g)?;
    let d = f.sub(g)?;
    Ok(d.values().iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// `Delta + modulus + max_k |f_k - g_k|` for paths sampled on the grid.
pub fn skorokhod_upper_bound(
    f_grid: &[f64],
    g_grid: &[f64],
    modulus: f64,
    step: f64,
) -> Result<f64> {
    if f_grid.len() != g_grid.len() {
        return Err(Error::param(format!(
            "grid samples differ in length: {} vs {}",
            f_grid.len(),
            g_grid.len()
        )));
    }
    let gap = f_grid
        .iter()
        .zip(g_grid)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(step + modulus + gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
    /// Residual standard error of the log-log regression.
    pub residual_se: f64,
}

/// Least squares fit of `log y = log c + p log x`.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<PowerLaw> {
    if points.len() < 3 {
        return Err(Error::param(format!(
            "a power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::LogDomain(format!("point ({x}, {y})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("a power-law fit needs distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerLaw {
        coefficient: intercept.exp(),
        exponent: slope,
        residual_se: (rss / (n - 2.0)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_basics() {
        let f = StepPath::from_jumps(0.0, &[0.5], &[1.0], 1.0).unwrap();
        let z = StepPath::constant(0.0, 1.0).unwrap();
        assert_eq!(uniform_distance(&f, &f).unwrap(), 0.0);
        assert_eq!(uniform_distance(&f, &z).unwrap(), 1.0);
    }

    #[test]
    fn uniform_matches_brute_grid() {
        let f = StepPath::from_jumps(0.5, &[0.13, 0.4, 0.77], &[1.0, -3.0, 0.5], 1.0).unwrap();
        let g = StepPath::from_jumps(0.0, &[0.2, 0.4, 0.9], &[2.0, 1.0, -1.0], 1.0).unwrap();
        let brute = (0..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|t| (f.value_at(t) - g.value_at(t)).abs())
            .fold(0.0, f64::max);
        assert!((uniform_distance(&f, &g).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_basics() {
        assert_eq!(
            skorokhod_upper_bound(&[1.0, 1.0], &[1.0, 1.0], 0.0, 0.1).unwrap(),
            0.1
        );
        assert_eq!(
            skorokhod_upper_bound(&[0.0, 2.0], &[0.0, 1.5], 1.0, 0.1).unwrap(),
            1.6
        );
        assert!(skorokhod_upper_bound(&[0.0], &[0.0, 1.0], 0.0, 0.1).is_err());
    }

    #[test]
    fn exact_powerlaw() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&d| (d, 2.0 * d * d * d))
            .collect();
        let fit = fit_powerlaw(&pts).unwrap();
        assert!((fit.coefficient - 2.0).abs() < 1e-12);
        assert!((fit.exponent - 3.0).abs() < 1e-12);
        assert!(fit.residual_se < 1e-12);
    }

    #[test]
    fn noisy_powerlaw() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|k| 0.2 / 2f64.powi(k))
            .map(|d| (d, d * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_powerlaw(&pts).unwrap();
        assert!((0.98..=1.02).contains(&fit.exponent), "{}", fit.exponent);
    }

    #[test]
    fn powerlaw_errors() {
        assert!(fit_powerlaw(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(matches!(
            fit_powerlaw(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]),
            Err(Error::LogDomain(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        assert!(MetricConfig {
            eta: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
