use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quadrature::integrate_with_breaks;
use crate::randomness::PoissonAtoms;

use super::{Field, JumpRate, SimOptions, StepPath};

/// An accepted event of the continuous process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub tau: f64,
    pub theta: f64,
    pub y: f64,
    pub b: f64,
    /// `lambda(tau-)`
    pub intensity: f64,
}

/// Accepted events of the thinned continuous-time process on `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    pub events: Vec<Event>,
    pub horizon: f64,
    /// Ceiling of the atom ladder when the scan finished.
    pub ceiling: f64,
    pub rescans: usize,
}

impl ContinuousPath {
    pub fn count(&self) -> usize {
        self.events.len()
    }

    pub fn terminal_risk(&self) -> f64 {
        self.events.iter().map(|e| e.y).sum()
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.tau).collect()
    }

    /// `N`, `xi` or `R` as a canonical step path.
    pub fn step(&self, field: Field) -> Result<StepPath> {
        let incr: Vec<f64> = match field {
            Field::Count => vec![1.0; self.events.len()],
            Field::Modulated => self.events.iter().map(|e| e.b).collect(),
            Field::Risk => self.events.iter().map(|e| e.y).collect(),
            Field::Intensity => {
                return Err(Error::param(
                    "the continuous intensity is not piecewise constant",
                ))
            }
        };
        StepPath::from_jumps(0.0, &self.times(), &incr, self.horizon)
    }

    /// `int_0^T lambda(t) dt`, integrated piecewise between events.
    pub fn intensity_integral(&self, kernel: &Kernel, psi: &JumpRate) -> Result<f64> {
        let mut knots: Vec<f64> = vec![0.0];
        knots.extend(self.events.iter().map(|e| e.tau));
        knots.push(self.horizon);
        let mut total = 0.0;
        for k in 0..knots.len() - 1 {
            let (a, b) = (knots[k], knots[k + 1]);
            if b <= a {
                continue;
            }
            let past = &self.events[..k];
            let mut breaks = Vec::new();
            if let Some(s) = kernel.support() {
                breaks.extend(past.iter().map(|e| e.tau + s));
            }
            let f = |t: f64| psi.eval(excitation(kernel, past, t));
            total += integrate_with_breaks(f, a, b, &breaks, 1e-8 * (b - a).max(1e-3))?;
        }
        Ok(total)
    }
}

/// `sum h(t - tau_i) b_i` over the given events, all assumed earlier than `t`.
#[inline]
pub(crate) fn excitation(kernel: &Kernel, past: &[Event], t: f64) -> f64 {
    past.iter().map(|e| kernel.eval(t - e.tau) * e.b).sum()
}

/// `lambda(t) = psi(sum_{tau_i < t} h(t - tau_i) b(y_i))`.
pub fn eval_intensity(path: &ContinuousPath, kernel: &Kernel, psi: &JumpRate, t: f64) -> f64 {
    let n = path.events.partition_point(|e| e.tau < t);
    psi.eval(excitation(kernel, &path.events[..n], t))
}

/// Points per horizon used to look for ceiling exceedance between atoms
/// when the kernel is not known to be nonincreasing.
const EXCEEDANCE_GRID: usize = 2048;

/// Thin `atoms` into the continuous-time marked Hawkes process. The atom
/// ladder is extended (and the scan restarted from the first exceedance
/// time) whenever the intensity rises above the current ceiling.
pub fn simulate_continuous(
    kernel: &Kernel,
    psi: &JumpRate,
    atoms: &mut PoissonAtoms,
    opts: &SimOptions,
) -> Result<ContinuousPath> {
    let horizon = atoms.horizon();
    if kernel.horizon() < horizon * (1.0 - 1e-12) {
        return Err(Error::param(
            "kernel horizon shorter than the simulation horizon",
        ));
    }
    let cap = opts.hard_cap(atoms);
    let sup_pos = positive_sup(kernel, horizon);
    let mut events: Vec<Event> = Vec::new();
    let mut start = 0.0;
    let mut rescans = 0;

    'scan: loop {
        let ceiling = atoms.ceiling();
        let candidates = atoms.merged_from(start);
        let mut prev = start;
        for a in &candidates {
            // Between the previous candidate and this one only the intensity
            // path can cross the ceiling; look for the first crossing.
            if let Some(t) = exceedance_between(kernel, psi, &events, prev, a.tau, ceiling, sup_pos)
            {
                rescans += 1;
                raise(atoms, psi.eval(excitation(kernel, &events, t)), cap)?;
                events.retain(|e| e.tau < t);
                start = t;
                continue 'scan;
            }
            let k = events.partition_point(|e| e.tau < a.tau);
            let lambda = psi.eval(excitation(kernel, &events[..k], a.tau));
            if lambda > ceiling {
                rescans += 1;
                raise(atoms, lambda, cap)?;
                events.retain(|e| e.tau < a.tau);
                start = a.tau;
                continue 'scan;
            }
            if a.theta <= lambda {
                events.push(Event {
                    tau: a.tau,
                    theta: a.theta,
                    y: a.y,
                    b: a.b,
                    intensity: lambda,
                });
            }
            prev = a.tau;
        }
        if let Some(t) = exceedance_between(kernel, psi, &events, prev, horizon, ceiling, sup_pos) {
            rescans += 1;
            raise(atoms, psi.eval(excitation(kernel, &events, t)), cap)?;
            events.retain(|e| e.tau < t);
            start = t;
            continue 'scan;
        }
        return Ok(ContinuousPath {
            events,
            horizon,
            ceiling: atoms.ceiling(),
            rescans,
        });
    }
}

/// Double the ceiling until it covers `level`.
pub(crate) fn raise(atoms: &mut PoissonAtoms, level: f64, cap: f64) -> Result<()> {
    if !level.is_finite() {
        return Err(Error::RunawayIntensity(format!("intensity {level}")));
    }
    while atoms.ceiling() < level {
        let next = 2.0 * atoms.ceiling();
        if next > cap {
            return Err(Error::RunawayIntensity(format!(
                "intensity {level:.6e} needs a ceiling above the cap {cap:.6e}"
            )));
        }
        atoms.extend_ceiling(next)?;
    }
    Ok(())
}

fn positive_sup(kernel: &Kernel, horizon: f64) -> f64 {
    if kernel.is_bounded() {
        kernel.sup_norm(horizon)
    } else {
        f64::INFINITY
    }
}

/// Earliest `t` in `[from, to)` where the intensity built from `events`
/// (all at or before `from`) exceeds `ceiling`, if any. `from` itself stands
/// for the right limit there.
fn exceedance_between(
    kernel: &Kernel,
    psi: &JumpRate,
    events: &[Event],
    from: f64,
    to: f64,
    ceiling: f64,
    sup_pos: f64,
) -> Option<f64> {
    if to <= from {
        return None;
    }
    let mass: f64 = events.iter().map(|e| e.b.abs()).sum();
    if mass == 0.0 {
        return (psi.at_zero() > ceiling).then_some(from);
    }
    if psi.eval(sup_pos * mass) <= ceiling {
        return None;
    }
    if kernel.is_decreasing() && events.iter().all(|e| e.b >= 0.0) {
        // Nonincreasing between events: the right limit is the maximum. An
        // infinite kernel value at lag 0 is only checked at candidate atoms.
        let x = excitation(kernel, events, from);
        if !x.is_finite() {
            return None;
        }
        return (psi.eval(x) > ceiling).then_some(from);
    }
    let n = (((to - from) * EXCEEDANCE_GRID as f64 / kernel.horizon()).ceil() as usize).max(1);
    (0..n)
        .map(|i| from + (to - from) * i as f64 / n as f64)
        .find(|&t| {
            let x = excitation(kernel, events, t);
            x.is_finite() && psi.eval(x) > ceiling
        })
}
