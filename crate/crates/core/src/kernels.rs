//! Excitation kernels `h` on a bounded horizon, their grid coefficients and
//! the regularity moduli that control the discretization error.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, ABS_TOL};

/// Family tag of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Exponential,
    Erlang,
    CosineDecay,
    InverseSqrt,
    CompactSupport,
    Custom,
}

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// `alpha * exp(-beta t)`
    Exponential {
        alpha: f64,
        beta: f64,
    },
    /// `alpha * t^order * exp(-beta t)`
    Erlang {
        alpha: f64,
        beta: f64,
        order: u32,
    },
    /// `amplitude * cos(frequency t) / (1 + t^2)`
    CosineDecay {
        amplitude: f64,
        frequency: f64,
    },
    /// `c / sqrt(t)` on `(0, T]`
    InverseSqrt {
        c: f64,
    },
    /// `alpha * (1 - t / support)_+`
    CompactSupport {
        alpha: f64,
        support: f64,
    },
    /// Piecewise-linear interpolation of `(t, h(t))` pairs, constant outside.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    Custom(KernelFn),
}

/// An excitation kernel on `[0, horizon]`.
///
/// Kernels are immutable once built and cheap to clone, so a single instance
/// can be shared by every trial of a Monte Carlo run.
#[derive(Clone)]
pub struct Kernel {
    shape: Shape,
    horizon: f64,
    /// Points where `h` is monotone in between (includes `0` and `horizon`).
    monotone_pieces: Option<Vec<f64>>,
    /// `h` is nonnegative and nonincreasing on `(0, horizon]`.
    decreasing: bool,
    /// Non-smooth points handed to the quadrature as forced breaks.
    breaks: Vec<f64>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            Shape::Exponential { alpha, beta } => format!("Exponential({alpha}, {beta})"),
            Shape::Erlang { alpha, beta, order } => format!("Erlang({alpha}, {beta}, {order})"),
            Shape::CosineDecay {
                amplitude,
                frequency,
            } => format!("CosineDecay({amplitude}, {frequency})"),
            Shape::InverseSqrt { c } => format!("InverseSqrt({c})"),
            Shape::CompactSupport { alpha, support } => {
                format!("CompactSupport({alpha}, {support})")
            }
            Shape::Tabulated { times, .. } => format!("Tabulated({} knots)", times.len()),
            Shape::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("Kernel")
            .field("shape", &shape)
            .field("horizon", &self.horizon)
            .finish()
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "kernel horizon must be positive, got {horizon}"
        )))
    }
}

impl Kernel {
    fn from_shape(shape: Shape, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let mut kernel = Kernel {
            shape,
            horizon,
            monotone_pieces: None,
            decreasing: false,
            breaks: Vec::new(),
        };
        kernel.derive_metadata();
        Ok(kernel)
    }

    pub fn exponential(alpha: f64, beta: f64, horizon: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::param("exponential kernel needs beta > 0"));
        }
        Self::from_shape(Shape::Exponential { alpha, beta }, horizon)
    }

    /// The identically-zero kernel (Poisson limit).
    pub fn zero(horizon: f64) -> Result<Self> {
        Self::exponential(0.0, 1.0, horizon)
    }

    pub fn erlang(alpha: f64, beta: f64, order: u32, horizon: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::param("erlang kernel needs beta > 0"));
        }
        Self::from_shape(Shape::Erlang { alpha, beta, order }, horizon)
    }

    pub fn cosine_decay(amplitude: f64, frequency: f64, horizon: f64) -> Result<Self> {
        Self::from_shape(
            Shape::CosineDecay {
                amplitude,
                frequency,
            },
            horizon,
        )
    }

    pub fn inverse_sqrt(c: f64, horizon: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::param("inverse-sqrt kernel needs c >= 0"));
        }
        Self::from_shape(Shape::InverseSqrt { c }, horizon)
    }

    /// Inverse-sqrt kernel scaled so that `L * ||h||_1 * E b(Y) = target_rho`.
    pub fn inverse_sqrt_for_rho(
        target_rho: f64,
        lipschitz: f64,
        mean_b: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(target_rho > 0.0 && target_rho < 1.0) {
            return Err(Error::param("target rho must lie in (0, 1)"));
        }
        let scale = lipschitz * mean_b * 2.0 * horizon.sqrt();
        if !(scale > 0.0) {
            return Err(Error::param(
                "lipschitz constant and E b(Y) must be positive",
            ));
        }
        Self::inverse_sqrt(target_rho / scale, horizon)
    }

    pub fn compact_support(alpha: f64, support: f64, horizon: f64) -> Result<Self> {
        if !(support > 0.0) {
            return Err(Error::param("compact-support kernel needs support > 0"));
        }
        Self::from_shape(Shape::CompactSupport { alpha, support }, horizon)
    }

    /// Linear interpolation through `(t, h(t))` pairs; constant extension
    /// outside the first/last knot.
    pub fn tabulated(points: &[(f64, f64)], horizon: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("tabulated kernel needs at least two points"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::param(
                "tabulated kernel times must be strictly increasing",
            ));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::param("tabulated kernel values must be finite"));
        }
        let (times, values) = points.iter().copied().unzip();
        Self::from_shape(Shape::Tabulated { times, values }, horizon)
    }

    /// Arbitrary kernel given by a closure. Quadrature is used for every
    /// integral; declare monotone pieces to get exact p-variation.
    pub fn custom<F>(f: F, horizon: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_shape(Shape::Custom(Arc::new(f)), horizon)
    }

    /// Declare the boundaries of the monotone pieces of a custom kernel.
    pub fn with_monotone_pieces(mut self, mut pieces: Vec<f64>) -> Self {
        pieces.push(0.0);
        pieces.push(self.horizon);
        pieces.retain(|p| (0.0..=self.horizon).contains(p));
        pieces.sort_by(f64::total_cmp);
        pieces.dedup();
        self.breaks.extend(pieces.iter().copied());
        self.monotone_pieces = Some(pieces);
        self
    }

    /// Declare a custom kernel nonnegative and nonincreasing.
    pub fn with_decreasing(mut self) -> Self {
        self.decreasing = true;
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks.extend(breaks);
        self
    }

    fn derive_metadata(&mut self) {
        let horizon = self.horizon;
        match &self.shape {
            Shape::Exponential { alpha, .. } => {
                self.monotone_pieces = Some(vec![0.0, horizon]);
                self.decreasing = *alpha >= 0.0;
            }
            Shape::Erlang { beta, order, .. } => {
                let peak = *order as f64 / beta;
                let mut pieces = vec![0.0];
                if peak > 0.0 && peak < horizon {
                    pieces.push(peak);
                }
                pieces.push(horizon);
                self.monotone_pieces = Some(pieces);
                self.decreasing = *order == 0 && self.eval(1.0) >= 0.0;
            }
            Shape::CosineDecay {
                amplitude,
                frequency,
            } => {
                let (a, w) = (*amplitude, *frequency);
                let derivative = move |t: f64| {
                    a * (-w * (w * t).sin() * (1.0 + t * t) - 2.0 * t * (w * t).cos())
                };
                let mut pieces = vec![0.0];
                pieces.extend(sign_changes(derivative, 1e-9, horizon, 20_000));
                pieces.push(horizon);
                pieces.dedup();
                self.breaks.extend(pieces.iter().copied());
                self.monotone_pieces = Some(pieces);
            }
            Shape::InverseSqrt { .. } => {
                self.decreasing = true;
            }
            Shape::CompactSupport { alpha, support } => {
                let mut pieces = vec![0.0];
                if *support < horizon {
                    pieces.push(*support);
                    self.breaks.push(*support);
                }
                pieces.push(horizon);
                self.monotone_pieces = Some(pieces);
                self.decreasing = *alpha >= 0.0;
            }
            Shape::Tabulated { times, values } => {
                let mut pieces = vec![0.0];
                pieces.extend(times.iter().copied().filter(|&t| t > 0.0 && t < horizon));
                pieces.push(horizon);
                self.breaks.extend(pieces.iter().copied());
                self.monotone_pieces = Some(pieces);
                self.decreasing =
                    values.iter().all(|&v| v >= 0.0) && values.windows(2).all(|w| w[1] <= w[0]);
            }
            Shape::Custom(_) => {}
        }
        self.breaks.retain(|b| *b > 0.0 && *b < horizon);
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
    }

    pub fn family(&self) -> KernelFamily {
        match self.shape {
            Shape::Exponential { .. } => KernelFamily::Exponential,
            Shape::Erlang { .. } => KernelFamily::Erlang,
            Shape::CosineDecay { .. } => KernelFamily::CosineDecay,
            Shape::InverseSqrt { .. } => KernelFamily::InverseSqrt,
            Shape::CompactSupport { .. } => KernelFamily::CompactSupport,
            Shape::Tabulated { .. } | Shape::Custom(_) => KernelFamily::Custom,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `h(t)`; the inverse-sqrt family returns `+inf` at `t = 0`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Exponential { alpha, beta } => {
                if *alpha == 0.0 {
                    0.0
                } else {
                    alpha * (-beta * t).exp()
                }
            }
            Shape::Erlang { alpha, beta, order } => {
                alpha * t.powi(*order as i32) * (-beta * t).exp()
            }
            Shape::CosineDecay {
                amplitude,
                frequency,
            } => amplitude * (frequency * t).cos() / (1.0 + t * t),
            Shape::InverseSqrt { c } => c / t.sqrt(),
            Shape::CompactSupport { alpha, support } => {
                if t < *support {
                    alpha * (1.0 - t / support)
                } else {
                    0.0
                }
            }
            Shape::Tabulated { times, values } => interpolate(times, values, t),
            Shape::Custom(f) => f(t),
        }
    }

    /// Right endpoint of the support for compact kernels.
    pub fn support(&self) -> Option<f64> {
        match &self.shape {
            Shape::CompactSupport { support, .. } => Some(*support),
            Shape::Exponential { alpha, .. } if *alpha == 0.0 => Some(0.0),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Exponential { alpha, .. } if alpha == 0.0)
    }

    pub fn is_decreasing(&self) -> bool {
        self.decreasing
    }

    pub fn monotone_pieces(&self) -> Option<&[f64]> {
        self.monotone_pieces.as_deref()
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.shape, Shape::InverseSqrt { c } if c > 0.0)
    }

    /// Antiderivative of `|h|` when the family has one in closed form.
    fn abs_antiderivative(&self, t: f64) -> Option<f64> {
        match self.shape {
            Shape::Exponential { alpha, beta } => Some(-alpha.abs() / beta * (-beta * t).exp()),
            Shape::InverseSqrt { c } => Some(2.0 * c.abs() * t.sqrt()),
            Shape::CompactSupport { alpha, support } => {
                let m = t.min(support);
                Some(alpha.abs() * (m - m * m / (2.0 * support)))
            }
            _ => None,
        }
    }

    fn check_range(&self, a: f64, b: f64) -> Result<()> {
        let slack = self.horizon * 1e-12;
        if a < -slack || b > self.horizon + slack || a > b + slack {
            return Err(Error::param(format!(
                "interval [{a}, {b}] outside kernel horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `int_a^b |h(t)| dt`.
    pub fn abs_integral(&self, a: f64, b: f64) -> Result<f64> {
        self.check_range(a, b)?;
        if b <= a {
            return Ok(0.0);
        }
        if let (Some(ga), Some(gb)) = (self.abs_antiderivative(a), self.abs_antiderivative(b)) {
            return Ok(gb - ga);
        }
        integrate_with_breaks(|t| self.eval(t).abs(), a, b, &self.breaks, ABS_TOL)
    }

    /// Signed `int_a^b h(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        self.check_range(a, b)?;
        if b <= a {
            return Ok(0.0);
        }
        if self.decreasing {
            return self.abs_integral(a, b);
        }
        integrate_with_breaks(|t| self.eval(t), a, b, &self.breaks, ABS_TOL)
    }

    /// `||h||_1` on `[0, T]`.
    pub fn l1_norm(&self, horizon: f64) -> Result<f64> {
        self.abs_integral(0.0, horizon)
    }

    /// `int_0^T h(t)^2 dt`; infinite for the inverse-sqrt family.
    pub fn l2_norm_sq(&self, horizon: f64) -> Result<f64> {
        self.check_range(0.0, horizon)?;
        match self.shape {
            Shape::Exponential { alpha, beta } => {
                Ok(alpha * alpha / (2.0 * beta) * (1.0 - (-2.0 * beta * horizon).exp()))
            }
            Shape::InverseSqrt { c } if c > 0.0 => Ok(f64::INFINITY),
            Shape::InverseSqrt { .. } => Ok(0.0),
            _ => integrate_with_breaks(
                |t| {
                    let v = self.eval(t);
                    v * v
                },
                0.0,
                horizon,
                &self.breaks,
                ABS_TOL,
            ),
        }
    }

    /// `sup_{0 <= t <= T} |h(t)|`.
    pub fn sup_norm(&self, horizon: f64) -> f64 {
        if !self.is_bounded() {
            return f64::INFINITY;
        }
        match &self.monotone_pieces {
            Some(pieces) => {
                let mut points: Vec<f64> =
                    pieces.iter().copied().filter(|&p| p < horizon).collect();
                points.push(horizon);
                points
                    .iter()
                    .map(|&t| self.eval(t).abs())
                    .fold(0.0, f64::max)
            }
            None => {
                let n = 1 << 14;
                (0..=n)
                    .map(|i| self.eval(horizon * i as f64 / n as f64).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `h_k = h(k * step)` for `k = 1..=count`.
    pub fn grid_coefficients(&self, step: f64, count: usize) -> Result<GridCoefficients> {
        if !(step > 0.0) {
            return Err(Error::param(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let end = step * count as f64;
        if end > self.horizon * (1.0 + 1e-12) {
            return Err(Error::param(format!(
                "grid end {end} exceeds kernel horizon {}",
                self.horizon
            )));
        }
        let values = (1..=count).map(|k| self.eval(k as f64 * step)).collect();
        Ok(GridCoefficients {
            step,
            count,
            values,
        })
    }

    /// `int_0^Delta |h|`.
    pub fn head_integral(&self, step: f64) -> Result<f64> {
        self.abs_integral(0.0, step)
    }

    fn check_step(step: f64, horizon: f64) -> Result<()> {
        if step > 0.0 && step < horizon {
            Ok(())
        } else {
            Err(Error::param(format!(
                "need 0 < step < T, got step {step}, T {horizon}"
            )))
        }
    }

    /// `int_0^{T - Delta} |h(y + eps) - h(y)| dy` for one shift `eps`.
    pub fn shift_integral(&self, eps: f64, step: f64, horizon: f64) -> Result<f64> {
        let upper = horizon - step;
        if self.decreasing {
            // h >= 0 nonincreasing: the absolute value telescopes.
            let head = self.integral(0.0, upper)?;
            let shifted = self.integral(eps, upper + eps)?;
            return Ok((head - shifted).max(0.0));
        }
        let mut breaks = self.breaks.clone();
        breaks.extend(self.breaks.iter().map(|b| b - eps));
        integrate_with_breaks(
            |y| (self.eval(y + eps) - self.eval(y)).abs(),
            0.0,
            upper,
            &breaks,
            ABS_TOL,
        )
    }

    /// `sup_{eps in [0, Delta]} int_0^{T - Delta} |h(y + eps) - h(y)| dy`.
    ///
    /// The supremum is taken over a 33-point grid on `[0, Delta]`, refined by
    /// golden-section search around the best grid point. Nonnegative
    /// nonincreasing kernels attain it at `eps = Delta`.
    pub fn shift_modulus(&self, step: f64, horizon: f64) -> Result<f64> {
        Self::check_step(step, horizon)?;
        self.check_range(0.0, horizon)?;
        if self.decreasing {
            return self.shift_integral(step, step, horizon);
        }
        let (best, _) = self.shift_modulus_argmax(step, horizon)?;
        Ok(best)
    }

    /// Maximum and maximizer of the shift integral over `eps in [0, Delta]`.
    pub fn shift_modulus_argmax(&self, step: f64, horizon: f64) -> Result<(f64, f64)> {
        Self::check_step(step, horizon)?;
        const GRID: usize = 33;
        let eps_at = |i: usize| step * i as f64 / (GRID - 1) as f64;
        let mut values = Vec::with_capacity(GRID);
        for i in 0..GRID {
            values.push(self.shift_integral(eps_at(i), step, horizon)?);
        }
        let (imax, &vmax) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        let lo = eps_at(imax.saturating_sub(1));
        let hi = eps_at((imax + 1).min(GRID - 1));
        let (eps_ref, v_ref) = golden_max(|e| self.shift_integral(e, step, horizon), lo, hi, 40)?;
        if v_ref > vmax {
            Ok((v_ref, eps_ref))
        } else {
            Ok((vmax, eps_at(imax)))
        }
    }

    /// `int_0^{T - Delta} |h(y) - h((y)_Delta + Delta)| dy`, cell by cell.
    pub fn grid_projection_modulus(&self, step: f64, horizon: f64) -> Result<f64> {
        Self::check_step(step, horizon)?;
        self.check_range(0.0, horizon)?;
        let upper = horizon - step;
        let mut total = 0.0;
        let mut k = 1usize;
        loop {
            let lo = (k - 1) as f64 * step;
            if lo >= upper * (1.0 - 1e-14) {
                break;
            }
            let hi = (k as f64 * step).min(upper);
            let target = self.eval(k as f64 * step);
            let cell = if self.decreasing {
                // h(y) >= h(k Delta) on the cell.
                (self.integral(lo, hi)? - (hi - lo) * target).max(0.0)
            } else {
                integrate_with_breaks(
                    |y| (self.eval(y) - target).abs(),
                    lo,
                    hi,
                    &self.breaks,
                    ABS_TOL,
                )?
            };
            total += cell;
            k += 1;
        }
        Ok(total)
    }

    /// The regularity constant `C_R(h, Delta)` with its three terms.
    pub fn c_r(&self, step: f64, horizon: f64) -> Result<RegularityTerms> {
        let head = self.head_integral(step)?;
        let shift = self.shift_modulus(step, horizon)?;
        let projection = self.grid_projection_modulus(step, horizon)?;
        Ok(RegularityTerms {
            head,
            shift,
            projection,
        })
    }

    /// p-variation of `h` on `[0, T]`.
    pub fn p_variation(&self, p: f64, horizon: f64) -> Result<PVariation> {
        if !(p >= 1.0) {
            return Err(Error::param(format!("p-variation needs p >= 1, got {p}")));
        }
        if !self.is_bounded() {
            return Err(Error::InfiniteVariation(format!(
                "{:?} kernel is unbounded near 0",
                self.family()
            )));
        }
        self.check_range(0.0, horizon)?;
        if let Some(pieces) = &self.monotone_pieces {
            let mut points: Vec<f64> = pieces.iter().copied().filter(|&t| t < horizon).collect();
            points.push(horizon);
            let values: Vec<f64> = points.iter().map(|&t| self.eval(t)).collect();
            let value = sup_partition_sum(&values, p).powf(1.0 / p);
            return Ok(PVariation {
                value,
                exact: p == 1.0,
            });
        }
        let mut best = 0.0f64;
        for level in [10u32, 12, 14] {
            let n = 1usize << level;
            let values: Vec<f64> = (0..=n)
                .map(|i| self.eval(horizon * i as f64 / n as f64))
                .collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InfiniteVariation(
                    "kernel is not finite on the sampling grid".into(),
                ));
            }
            best = best.max(sup_partition_sum(&local_extrema(&values), p));
        }
        Ok(PVariation {
            value: best.powf(1.0 / p),
            exact: false,
        })
    }
}

/// The three terms of `C_R(h, Delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityTerms {
    /// `int_0^Delta |h|`
    pub head: f64,
    /// Shift modulus.
    pub shift: f64,
    /// Grid projection modulus.
    pub projection: f64,
}

impl RegularityTerms {
    pub fn total(&self) -> f64 {
        self.head + self.shift + self.projection
    }
}

/// p-variation value; `exact == false` marks a certified lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PVariation {
    pub value: f64,
    pub exact: bool,
}

/// Kernel evaluated on the simulation grid, `values[k - 1] = h(k * step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCoefficients {
    pub step: f64,
    pub count: usize,
    pub values: Vec<f64>,
}

impl GridCoefficients {
    /// `h_k` for `k >= 1`; zero beyond the grid.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 || k > self.count {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// `sum_k |h_k| * step`
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.step
    }

    /// `||h||_{Delta,2}^2 = sum_k h_k^2 * step`
    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.step
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let i = times.partition_point(|&x| x <= t);
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (t - t0) / (t1 - t0);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// Roots of `f` on `(a, b)` located by sign changes on an `n`-cell scan and
/// polished by bisection.
fn sign_changes<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    if b <= a {
        return roots;
    }
    let h = (b - a) / n as f64;
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = a + h * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn golden_max<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Collapse a sampled sequence to its endpoints and local extrema.
fn local_extrema(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if let Some(&last) = out.last() {
            if v == last {
                continue;
            }
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            if (b - a) * (v - b) > 0.0 {
                // still monotone: extend the run
                *out.last_mut().unwrap() = v;
                continue;
            }
        }
        out.push(v);
    }
    out
}

/// `sup` over subsequences (keeping both ends) of `sum |x_{i+1} - x_i|^p`.
fn sup_partition_sum(values: &[f64], p: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    if p == 1.0 {
        return values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    }
    let n = values.len();
    let mut best = vec![f64::NEG_INFINITY; n];
    best[0] = 0.0;
    for j in 1..n {
        for i in 0..j {
            let cand = best[i] + (values[j] - values[i]).abs().powf(p);
            if cand > best[j] {
                best[j] = cand;
            }
        }
    }
    best[n - 1]
}
