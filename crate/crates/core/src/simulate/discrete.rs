use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{GridCoefficients, Kernel};
use crate::randomness::{poisson_count, MarkModel, PoissonAtoms};

use super::continuous::raise;
use super::{Field, JumpRate, SimOptions, StepPath};

/// Arrays of the discrete-time scheme on the grid `k * step`, `k = 0..=M`.
/// Index 0 holds the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTrace {
    pub step: f64,
    pub count: usize,
    pub horizon: f64,
    /// `l_k`
    pub intensity: Vec<f64>,
    /// `X_k`
    pub mass: Vec<f64>,
    /// `D_k`
    pub events: Vec<u64>,
    /// `R^Delta` at `k * step`.
    pub risk: Vec<f64>,
    /// Raw marks accepted in each bin.
    pub marks: Vec<Vec<f64>>,
    pub ceiling: f64,
}

impl DiscreteTrace {
    fn empty(step: f64, count: usize, horizon: f64, l0: f64) -> Self {
        DiscreteTrace {
            step,
            count,
            horizon,
            intensity: vec![l0; count + 1],
            mass: vec![0.0; count + 1],
            events: vec![0; count + 1],
            risk: vec![0.0; count + 1],
            marks: vec![Vec::new(); count + 1],
            ceiling: 0.0,
        }
    }

    pub fn total_events(&self) -> u64 {
        self.events.iter().sum()
    }

    pub fn terminal_risk(&self) -> f64 {
        *self.risk.last().unwrap()
    }

    /// `sum_{k=1}^M l_k * step`
    pub fn compensator(&self) -> f64 {
        self.intensity[1..].iter().sum::<f64>() * self.step
    }

    fn grid_time(&self, k: usize) -> f64 {
        (k as f64 * self.step).min(self.horizon)
    }

    /// Càdlàg embedding `Z_t = Z_{floor(t / step)}`; values change only on
    /// the grid.
    pub fn step(&self, field: Field) -> Result<StepPath> {
        let values: Vec<f64> = match field {
            Field::Count => prefix_sums(self.events.iter().map(|&d| d as f64)),
            Field::Modulated => prefix_sums(self.mass.iter().copied()),
            Field::Risk => self.risk.clone(),
            Field::Intensity => self.intensity.clone(),
        };
        let breaks = (0..=self.count).map(|k| self.grid_time(k)).collect();
        StepPath::new(breaks, values, self.horizon)
    }

    /// `l_n` recomputed from `X` alone.
    pub fn recompute_intensity(&self, kernel: &Kernel, psi: &JumpRate) -> Result<Vec<f64>> {
        let coeffs = kernel.grid_coefficients(self.step, self.count)?;
        let mut conv = Convolution::new(&coeffs, kernel.support(), self.step);
        let mut out = vec![psi.at_zero(); self.count + 1];
        for (n, l) in out.iter_mut().enumerate().skip(2) {
            conv.push(n - 1, self.mass[n - 1]);
            *l = psi.eval(conv.at(n));
        }
        Ok(out)
    }
}

fn prefix_sums(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    xs.scan(0.0, |acc, x| {
        *acc += x;
        Some(*acc)
    })
    .collect()
}

/// Sparse causal convolution `sum_{k<n} h_{n-k} X_k` over nonzero `X_k`,
/// truncated to the last `r` bins for compactly supported kernels.
struct Convolution<'a> {
    coeffs: &'a GridCoefficients,
    window: Option<usize>,
    nonzero: Vec<(usize, f64)>,
}

impl<'a> Convolution<'a> {
    fn new(coeffs: &'a GridCoefficients, support: Option<f64>, step: f64) -> Self {
        Convolution {
            coeffs,
            window: support.map(|s| (s / step).ceil() as usize),
            nonzero: Vec::new(),
        }
    }

    fn push(&mut self, k: usize, x: f64) {
        if x != 0.0 {
            self.nonzero.push((k, x));
        }
    }

    fn at(&self, n: usize) -> f64 {
        let live = match self.window {
            Some(r) => {
                let first = n.saturating_sub(r);
                let i = self.nonzero.partition_point(|&(k, _)| k < first);
                &self.nonzero[i..]
            }
            None => &self.nonzero[..],
        };
        live.iter().map(|&(k, x)| self.coeffs.get(n - k) * x).sum()
    }
}

/// Bin of an atom time under the right-closed convention `((n-1)d, nd]`.
#[inline]
fn bin_of(tau: f64, step: f64, count: usize) -> usize {
    ((tau / step).ceil() as usize).clamp(1, count)
}

/// Thin `atoms` with the piecewise-constant intensity `l_n` of the
/// discrete scheme.
pub fn simulate_discrete(
    kernel: &Kernel,
    psi: &JumpRate,
    step: f64,
    count: usize,
    atoms: &mut PoissonAtoms,
    opts: &SimOptions,
) -> Result<DiscreteTrace> {
    check_grid(step, count, atoms.horizon())?;
    let coeffs = kernel.grid_coefficients(step, count)?;
    let mut conv = Convolution::new(&coeffs, kernel.support(), step);
    let cap = opts.hard_cap(atoms);
    let mut trace = DiscreteTrace::empty(step, count, atoms.horizon(), psi.at_zero());

    let mut list = atoms.merged();
    let mut pos = 0;
    for n in 1..=count {
        if n >= 2 {
            conv.push(n - 1, trace.mass[n - 1]);
            trace.intensity[n] = psi.eval(conv.at(n));
        }
        let l = trace.intensity[n];
        if l > atoms.ceiling() {
            raise(atoms, l, cap)?;
            list = atoms.merged();
            pos = list.partition_point(|a| bin_of(a.tau, step, count) < n);
        }
        // Risk is accumulated atom by atom, in the same order as the
        // continuous path, so identical acceptances give identical sums.
        let (mut x, mut d, mut r) = (0.0, 0u64, trace.risk[n - 1]);
        let mut marks = Vec::new();
        while pos < list.len() && bin_of(list[pos].tau, step, count) == n {
            let a = &list[pos];
            if a.theta <= l {
                x += a.b;
                d += 1;
                r += a.y;
                marks.push(a.y);
            }
            pos += 1;
        }
        trace.mass[n] = x;
        trace.events[n] = d;
        trace.risk[n] = r;
        trace.marks[n] = marks;
    }
    trace.ceiling = atoms.ceiling();
    Ok(trace)
}

/// The discrete scheme sampled directly: `D_n ~ Poisson(step * l_n)` with
/// i.i.d. marks. Not coupled to any continuous path.
pub fn simulate_discrete_fast<R: Rng>(
    kernel: &Kernel,
    psi: &JumpRate,
    marks: &MarkModel,
    step: f64,
    count: usize,
    rng: &mut R,
) -> Result<DiscreteTrace> {
    let horizon = step * count as f64;
    check_grid(step, count, horizon)?;
    let coeffs = kernel.grid_coefficients(step, count)?;
    let mut conv = Convolution::new(&coeffs, kernel.support(), step);
    let mut trace = DiscreteTrace::empty(step, count, horizon, psi.at_zero());
    for n in 1..=count {
        if n >= 2 {
            conv.push(n - 1, trace.mass[n - 1]);
            trace.intensity[n] = psi.eval(conv.at(n));
        }
        let d = poisson_count(step * trace.intensity[n], rng)?;
        let (mut x, mut r) = (0.0, 0.0);
        let mut ys = Vec::with_capacity(d as usize);
        for _ in 0..d {
            let y = marks.sample(rng);
            x += marks.modulate(y);
            r += y;
            ys.push(y);
        }
        trace.mass[n] = x;
        trace.events[n] = d;
        trace.risk[n] = trace.risk[n - 1] + r;
        trace.marks[n] = ys;
    }
    Ok(trace)
}

fn check_grid(step: f64, count: usize, horizon: f64) -> Result<()> {
    if !(step > 0.0) || count == 0 {
        return Err(Error::param(format!(
            "need step > 0 and M >= 1, got {step}, {count}"
        )));
    }
    let end = step * count as f64;
    if (end - horizon).abs() > 1e-9 * horizon {
        return Err(Error::param(format!(
            "M * step = {end} does not match the horizon {horizon}"
        )));
    }
    Ok(())
}
