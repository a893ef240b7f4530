//! Stability coefficients and the shapes of the convergence bounds.
//!
//! The convergence bounds hold up to an unknown multiplicative constant; every
//! `*_shape` field below is reported with that constant set to one and is
//! only meaningful through its scaling in `Delta` and `T`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{GridCoefficients, Kernel, RegularityTerms};
use crate::randomness::MarkModel;
use crate::simulate::JumpRate;

/// `L * ||h||_1 * E b(Y)` on `[0, T]`.
pub fn rho_continuous(
    kernel: &Kernel,
    horizon: f64,
    lipschitz: f64,
    marks: &MarkModel,
) -> Result<f64> {
    Ok(lipschitz * kernel.l1_norm(horizon)? * marks.mean_b()?)
}

/// `L * sum_k |h_k| Delta * E b(Y)`.
pub fn rho_discrete(coeffs: &GridCoefficients, lipschitz: f64, marks: &MarkModel) -> Result<f64> {
    Ok(lipschitz * coeffs.abs_sum() * marks.mean_b()?)
}

/// Right-hand side of the discrete stability comparison:
/// `L E b(Y) (||h||_1 + int_0^{T-Delta} |h(s) - h((s)_Delta + Delta)| ds)`.
/// It dominates `L E b(Y) sum_{k=1}^{M-1} |h_k| Delta`.
pub fn discrete_rho_majorant(
    kernel: &Kernel,
    step: f64,
    horizon: f64,
    lipschitz: f64,
    marks: &MarkModel,
) -> Result<f64> {
    let proj = kernel.grid_projection_modulus(step, horizon)?;
    Ok(lipschitz * marks.mean_b()? * (kernel.l1_norm(horizon)? + proj))
}

/// Expected modulus bound for a rate-`I` compound Poisson path:
/// `2 E|Y| I Delta (1 + 2 I T)`.
pub fn modulus_poisson_bound(rate: f64, horizon: f64, step: f64, marks: &MarkModel) -> Result<f64> {
    if !(rate > 0.0 && horizon > 0.0 && step >= 0.0) {
        return Err(Error::param(format!(
            "need I > 0, T > 0, Delta >= 0; got {rate}, {horizon}, {step}"
        )));
    }
    Ok(2.0 * marks.mean_abs()? * rate * step * (1.0 + 2.0 * rate * horizon))
}

/// Increment bound shape `C_R ((t)_Delta - (s)_Delta) + Delta` for `s <= t`.
pub fn increment_shape(c_r: f64, s: f64, t: f64, step: f64) -> f64 {
    let floor = |x: f64| (x / step).floor() * step;
    c_r * (floor(t) - floor(s)) + step
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSet {
    pub delta: f64,
    pub horizon: f64,
    pub eta: f64,
    pub p: f64,
    pub rho_h: f64,
    pub rho_h_delta: f64,
    pub stable: bool,
    pub stable_discrete: bool,
    pub c_s: f64,
    pub c_r: f64,
    pub c_r_terms: RegularityTerms,
    pub mean_intensity_bound: f64,
    pub mean_intensity_bound_discrete: f64,
    /// `None` when `E b(Y)^2` is not available.
    pub second_moment_bound: Option<f64>,
    pub second_moment_bound_discrete: Option<f64>,
    /// `E b(Y) L psi(0) / (1 - E b(Y) L ||h||_1)`
    pub intensity_regularity_constant: f64,
    pub sobolev_shape: f64,
    /// Only for bounded `psi`.
    pub skorokhod_shape_bounded: Option<f64>,
    pub skorokhod_shape_unbounded: f64,
    pub martingale_shape: f64,
    /// `None` when `h` has infinite p-variation.
    pub p_variation_shape: Option<f64>,
}

/// Inputs of [`bound_set`].
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub kernel: &'a Kernel,
    pub psi: &'a JumpRate,
    pub marks: &'a MarkModel,
    pub step: f64,
    pub horizon: f64,
    pub eta: f64,
    pub p: f64,
    pub allow_unstable: bool,
}

fn inverse_gap(rho: f64) -> f64 {
    if rho < 1.0 {
        1.0 / (1.0 - rho)
    } else {
        f64::INFINITY
    }
}

/// Evaluate every constant and bound shape at one `Delta`.
pub fn bound_set(inp: &BoundInputs<'_>) -> Result<BoundSet> {
    let BoundInputs {
        kernel,
        psi,
        marks,
        step,
        horizon,
        eta,
        p,
        allow_unstable,
    } = *inp;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(p >= 1.0) {
        return Err(Error::param(format!("p must be at least 1, got {p}")));
    }
    let count = (horizon / step).round() as usize;
    if count == 0 || ((count as f64) * step - horizon).abs() > 1e-9 * horizon {
        return Err(Error::param(format!(
            "T / Delta must be an integer, got {horizon} / {step}"
        )));
    }
    let lip = psi.lipschitz();
    let psi0 = psi.at_zero();
    let coeffs = kernel.grid_coefficients(step, count)?;
    let rho_h = rho_continuous(kernel, horizon, lip, marks)?;
    let rho_h_delta = rho_discrete(&coeffs, lip, marks)?;
    if !allow_unstable {
        if rho_h >= 1.0 {
            return Err(Error::Unstable {
                what: "rho_h",
                value: rho_h,
            });
        }
        if rho_h_delta >= 1.0 {
            return Err(Error::Unstable {
                what: "rho_h_delta",
                value: rho_h_delta,
            });
        }
    }
    let g = inverse_gap(rho_h);
    let gd = inverse_gap(rho_h_delta);
    let c_r_terms = kernel.c_r(step, horizon)?;
    let c_r = c_r_terms.total();

    let second_b = marks.second_b().ok();
    let second_moment_bound = match second_b {
        Some(eb2) => {
            let l2 = kernel.l2_norm_sq(horizon)?;
            Some((psi0 * psi0 + lip * lip * eb2 * psi0 * g * l2) * g * g)
        }
        None => None,
    };
    let second_moment_bound_discrete = second_b.map(|eb2| {
        let l2 = coeffs.l2_sq();
        (psi0 * psi0 + lip * lip * eb2 * psi0 * gd * l2) * gd * gd
    });

    let mean_b = marks.mean_b()?;
    let intensity_regularity_constant = if rho_h < 1.0 {
        mean_b * lip * psi0 / (1.0 - rho_h)
    } else {
        f64::INFINITY
    };

    let t = horizon;
    let tail = (t * c_r).sqrt() + t * c_r;
    let sup_psi = psi.sup_norm();
    let p_variation_shape = match kernel.p_variation(p, horizon) {
        Ok(v) => Some(
            v.value * t.powf((p - 1.0) / p) * step.powf(1.0 / p) + step * kernel.sup_norm(horizon),
        ),
        Err(Error::InfiniteVariation(_)) => None,
        Err(e) => return Err(e),
    };

    Ok(BoundSet {
        delta: step,
        horizon,
        eta,
        p,
        rho_h,
        rho_h_delta,
        stable: rho_h < 1.0,
        stable_discrete: rho_h_delta < 1.0,
        c_s: g + gd,
        c_r,
        c_r_terms,
        mean_intensity_bound: psi0 * g,
        mean_intensity_bound_discrete: psi0 * gd,
        second_moment_bound,
        second_moment_bound_discrete,
        intensity_regularity_constant,
        sobolev_shape: t * t * c_r + t * step.powf(1.0 - eta),
        skorokhod_shape_bounded: sup_psi
            .is_finite()
            .then_some(step * (1.0 + t) * (1.0 + sup_psi) + tail),
        skorokhod_shape_unbounded: step.sqrt() * (1.0 + t.powf(1.5)) + tail,
        martingale_shape: (t * c_r).sqrt(),
        p_variation_shape,
    })
}
