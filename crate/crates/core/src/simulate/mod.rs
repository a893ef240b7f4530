//! Continuous-time marked Hawkes risk processes and their discrete-time
//! scheme, both obtained by thinning one [`PoissonAtoms`] ladder.

mod continuous;
mod discrete;
mod jump_rate;
mod step;

use serde::{Deserialize, Serialize};

pub use continuous::{eval_intensity, simulate_continuous, ContinuousPath, Event};
pub use discrete::{simulate_discrete, simulate_discrete_fast, DiscreteTrace};
pub use jump_rate::JumpRate;
pub use step::{write_trajectories, StepPath};

pub(crate) use step::check_horizons;

use crate::bounds::{rho_continuous, rho_discrete};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::randomness::{MarkModel, PoissonAtoms};

/// Which counter of a path to embed as a step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    /// `N`
    Count,
    /// `xi`
    Modulated,
    /// `R`
    Risk,
    /// `lambda^Delta` (discrete traces only)
    Intensity,
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// First strip ceiling; defaults to `4 psi(0) / (1 - rho_h)`.
    pub initial_ceiling: Option<f64>,
    /// Hard cap as a multiple of the initial ceiling.
    pub cap_factor: f64,
    /// Largest expected atom count `T * ceiling` of a ladder.
    pub max_atoms: f64,
    /// Proceed when `rho_h >= 1`.
    pub allow_unstable: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            initial_ceiling: None,
            cap_factor: (1u64 << 20) as f64,
            max_atoms: 1e6,
            allow_unstable: false,
        }
    }
}

impl SimOptions {
    /// Highest ceiling a ladder on `atoms` may reach.
    pub(crate) fn hard_cap(&self, atoms: &PoissonAtoms) -> f64 {
        (atoms.initial_ceiling() * self.cap_factor).min(self.max_atoms / atoms.horizon())
    }
}

/// `M` with `M * step = T`, or a parameter error.
pub fn grid_count(horizon: f64, step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= horizon) {
        return Err(Error::param(format!("need 0 < step <= T, got {step}")));
    }
    let m = (horizon / step).round();
    if (m * step - horizon).abs() > 1e-9 * horizon {
        return Err(Error::param(format!(
            "T / step is not an integer: {horizon} / {step}"
        )));
    }
    Ok(m as usize)
}

/// `rho_h`, erroring when it is at least one unless overridden.
pub fn check_stability(
    kernel: &Kernel,
    psi: &JumpRate,
    marks: &MarkModel,
    horizon: f64,
    opts: &SimOptions,
) -> Result<f64> {
    let rho = rho_continuous(kernel, horizon, psi.lipschitz(), marks)?;
    if rho >= 1.0 && !opts.allow_unstable {
        return Err(Error::Unstable {
            what: "rho_h",
            value: rho,
        });
    }
    Ok(rho)
}

/// `4 psi(0) / (1 - rho_h)`; a fixed multiple of `psi(0)` when unstable.
pub fn default_ceiling(psi: &JumpRate, rho: f64) -> f64 {
    let base = psi.at_zero();
    let c = if rho < 1.0 {
        4.0 * base / (1.0 - rho)
    } else {
        64.0 * base
    };
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

/// Both processes thinned from one atom ladder.
#[derive(Debug, Clone)]
pub struct Coupled {
    pub continuous: ContinuousPath,
    pub discrete: DiscreteTrace,
    pub atoms: PoissonAtoms,
}

/// Continuous path plus one discrete trace per step of `steps`, all from the
/// atom ladder of `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct CoupledLadder {
    pub continuous: ContinuousPath,
    pub discrete: Vec<DiscreteTrace>,
    pub atoms: PoissonAtoms,
}

#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub kernel: &'a Kernel,
    pub psi: &'a JumpRate,
    pub marks: &'a MarkModel,
    pub horizon: f64,
}

impl Model<'_> {
    /// Initial ceiling after the stability check.
    pub fn initial_ceiling(&self, opts: &SimOptions) -> Result<f64> {
        let rho = check_stability(self.kernel, self.psi, self.marks, self.horizon, opts)?;
        Ok(opts
            .initial_ceiling
            .unwrap_or_else(|| default_ceiling(self.psi, rho)))
    }

    fn warn_discrete(&self, step: f64, count: usize) -> Result<()> {
        let coeffs = self.kernel.grid_coefficients(step, count)?;
        let rho = rho_discrete(&coeffs, self.psi.lipschitz(), self.marks)?;
        if rho >= 1.0 {
            log::warn!("rho_h_delta = {rho} >= 1 at step {step}");
        }
        Ok(())
    }
}

/// Simulate `(R, R^Delta)` on shared atoms drawn from `seed`.
pub fn couple(model: &Model<'_>, step: f64, seed: u64, opts: &SimOptions) -> Result<Coupled> {
    let mut ladder = couple_ladder(model, &[step], seed, &[], opts)?;
    Ok(Coupled {
        continuous: ladder.continuous,
        discrete: ladder.discrete.pop().expect("one step"),
        atoms: ladder.atoms,
    })
}

/// As [`couple`] for several steps at once on the sub-stream `stream`.
///
/// The continuous path is computed once: later ceiling extensions add atoms
/// with `theta` above every intensity value it used, so it is unaffected.
pub fn couple_ladder(
    model: &Model<'_>,
    steps: &[f64],
    seed: u64,
    stream: &[u64],
    opts: &SimOptions,
) -> Result<CoupledLadder> {
    let counts = steps
        .iter()
        .map(|&s| grid_count(model.horizon, s))
        .collect::<Result<Vec<_>>>()?;
    let ceiling = model.initial_ceiling(opts)?;
    let mut atoms =
        PoissonAtoms::sample_on_stream(model.horizon, ceiling, model.marks, seed, stream)?;
    let continuous = simulate_continuous(model.kernel, model.psi, &mut atoms, opts)?;
    let mut discrete = Vec::with_capacity(steps.len());
    for (&s, &m) in steps.iter().zip(&counts) {
        model.warn_discrete(s, m)?;
        discrete.push(simulate_discrete(
            model.kernel,
            model.psi,
            s,
            m,
            &mut atoms,
            opts,
        )?);
    }
    Ok(CoupledLadder {
        continuous,
        discrete,
        atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{stream_rng, MarkDistribution, Modulation};

    fn unit_model<'a>(k: &'a Kernel, psi: &'a JumpRate, m: &'a MarkModel, t: f64) -> Model<'a> {
        Model {
            kernel: k,
            psi,
            marks: m,
            horizon: t,
        }
    }

    #[test]
    fn null_kernel_is_a_fixed_rate_filter() {
        let k = Kernel::zero(10.0).unwrap();
        let psi = JumpRate::relu(2.0);
        let m = MarkModel::new(
            MarkDistribution::Exponential { rate: 1.0 },
            Modulation::ConstantOne,
        )
        .unwrap();
        let model = unit_model(&k, &psi, &m, 10.0);
        for seed in 0..20 {
            let c = couple(&model, 0.1, seed, &SimOptions::default()).unwrap();
            let expected = c.atoms.count_below(2.0);
            assert_eq!(c.continuous.count(), expected);
            assert_eq!(c.discrete.total_events() as usize, expected);
            let r = c.continuous.terminal_risk();
            assert!((c.discrete.terminal_risk() - r).abs() <= 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn injected_atom_intensity() {
        let k = Kernel::exponential(1.0, 1.0, 5.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let mut atoms = PoissonAtoms::from_atoms(5.0, 4.0, &m, vec![(1.0, 0.1, 1.0)]).unwrap();
        let path = simulate_continuous(&k, &psi, &mut atoms, &SimOptions::default()).unwrap();
        assert_eq!(path.count(), 1);
        let lam = eval_intensity(&path, &k, &psi, 1.5);
        assert!((lam - (1.0 + (-0.5f64).exp())).abs() < 1e-15);
        // Left limit at the event time excludes the event itself.
        assert_eq!(eval_intensity(&path, &k, &psi, 1.0), 1.0);
    }

    #[test]
    fn intensity_hand_sum() {
        let k = Kernel::exponential(0.5, 2.0, 5.0).unwrap();
        let psi = JumpRate::relu(0.3);
        let m = MarkModel::new(
            MarkDistribution::PointMass { value: 2.0 },
            Modulation::AbsoluteValue,
        )
        .unwrap();
        let mut atoms =
            PoissonAtoms::from_atoms(5.0, 10.0, &m, vec![(0.5, 0.01, 2.0), (1.25, 0.02, 2.0)])
                .unwrap();
        let path = simulate_continuous(&k, &psi, &mut atoms, &SimOptions::default()).unwrap();
        assert_eq!(path.count(), 2);
        let t = 2.0;
        let hand = 0.3 + 2.0 * 0.5 * (-2.0f64 * 1.5).exp() + 2.0 * 0.5 * (-2.0f64 * 0.75).exp();
        assert!((eval_intensity(&path, &k, &psi, t) - hand).abs() < 1e-12);
        let empty = ContinuousPath {
            events: Vec::new(),
            horizon: 5.0,
            ceiling: 1.0,
            rescans: 0,
        };
        assert_eq!(eval_intensity(&empty, &k, &psi, 1.0), 0.3);
    }

    #[test]
    fn discrete_hand_recursion() {
        let k = Kernel::exponential(0.5, 1.0, 1.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let step = 0.25;
        let mut atoms = PoissonAtoms::from_atoms(
            1.0,
            4.0,
            &m,
            vec![(0.1, 0.5, 1.0), (0.3, 0.5, 1.0), (0.45, 0.2, 1.0)],
        )
        .unwrap();
        let tr = simulate_discrete(&k, &psi, step, 4, &mut atoms, &SimOptions::default()).unwrap();
        assert_eq!(tr.mass[1], 1.0);
        assert_eq!(tr.mass[2], 2.0);
        let h = |j: f64| 0.5 * (-j * step).exp();
        assert!((tr.intensity[3] - (1.0 + h(2.0) * 1.0 + h(1.0) * 2.0)).abs() < 1e-15);
        assert_eq!(tr.intensity[0], 1.0);
        assert_eq!(tr.intensity[1], 1.0);
        assert_eq!(tr.recompute_intensity(&k, &psi).unwrap(), tr.intensity);
    }

    #[test]
    fn discrete_without_atoms() {
        let k = Kernel::exponential(0.5, 1.0, 2.0).unwrap();
        let psi = JumpRate::relu(1.5);
        let m = MarkModel::unit();
        let mut atoms = PoissonAtoms::from_atoms(2.0, 4.0, &m, vec![]).unwrap();
        let tr = simulate_discrete(&k, &psi, 0.5, 4, &mut atoms, &SimOptions::default()).unwrap();
        assert!(tr.intensity.iter().all(|&l| l == 1.5));
        assert!(tr.mass.iter().all(|&x| x == 0.0));
        assert!(tr.risk.iter().all(|&r| r == 0.0));
        assert_eq!(tr.step(Field::Intensity).unwrap().values(), &[1.5]);
        let c = ContinuousPath {
            events: vec![],
            horizon: 2.0,
            ceiling: 1.0,
            rescans: 0,
        };
        assert_eq!(c.step(Field::Risk).unwrap().values(), &[0.0]);
    }

    #[test]
    fn bin_membership_is_right_closed() {
        let k = Kernel::zero(1.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let mut atoms = PoissonAtoms::from_atoms(1.0, 2.0, &m, vec![(0.5, 0.5, 1.0)]).unwrap();
        let tr = simulate_discrete(&k, &psi, 0.5, 2, &mut atoms, &SimOptions::default()).unwrap();
        assert_eq!(tr.events, vec![0, 1, 0]);
    }

    #[test]
    fn step_embeddings() {
        let tr = DiscreteTrace {
            step: 0.25,
            count: 4,
            horizon: 1.0,
            intensity: vec![1.0; 5],
            mass: vec![0.0, 0.0, 2.0, 0.0, 1.0],
            events: vec![0, 0, 2, 0, 1],
            risk: vec![0.0, 0.0, 2.0, 2.0, 3.0],
            marks: vec![vec![]; 5],
            ceiling: 4.0,
        };
        let xi = tr.step(Field::Modulated).unwrap();
        assert_eq!(xi.breaks(), &[0.0, 0.5, 1.0]);
        assert_eq!(xi.values(), &[0.0, 2.0, 3.0]);

        let events = [0.3, 0.7]
            .map(|tau| Event {
                tau,
                theta: 0.0,
                y: 1.0,
                b: 1.0,
                intensity: 1.0,
            })
            .to_vec();
        let c = ContinuousPath {
            events,
            horizon: 1.0,
            ceiling: 1.0,
            rescans: 0,
        };
        let n = c.step(Field::Count).unwrap();
        assert_eq!(n.breaks(), &[0.0, 0.3, 0.7]);
        assert_eq!(n.values(), &[0.0, 1.0, 2.0]);
        assert!(c.step(Field::Intensity).is_err());
    }

    #[test]
    fn rescan_matches_a_run_on_the_final_ladder() {
        let k = Kernel::exponential(0.9, 1.2, 8.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let mut extended = 0;
        for seed in 0..30 {
            let mut atoms = PoissonAtoms::sample(8.0, 0.5, &m, seed).unwrap();
            let first = simulate_continuous(&k, &psi, &mut atoms, &SimOptions::default()).unwrap();
            if atoms.strips().len() > 1 {
                extended += 1;
            }
            let mut again = atoms.clone();
            let second = simulate_continuous(&k, &psi, &mut again, &SimOptions::default()).unwrap();
            assert_eq!(first.events, second.events);
            assert_eq!(second.rescans, 0);
            // The accepted intensity never exceeds the final ceiling.
            for i in 0..=800 {
                let t = 8.0 * i as f64 / 800.0;
                assert!(eval_intensity(&first, &k, &psi, t) <= atoms.ceiling());
            }
        }
        assert!(extended > 20);
    }

    #[test]
    fn runaway_intensity_is_reported() {
        let k = Kernel::exponential(3.0, 0.01, 10.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let opts = SimOptions {
            initial_ceiling: Some(1.0),
            cap_factor: 64.0,
            allow_unstable: true,
            ..SimOptions::default()
        };
        let model = unit_model(&k, &psi, &m, 10.0);
        let err = couple(&model, 0.5, 1, &opts).unwrap_err();
        assert!(matches!(err, Error::RunawayIntensity(_)));
        let strict = SimOptions::default();
        assert!(matches!(
            couple(&model, 0.5, 1, &strict),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn coupling_is_deterministic() {
        let k = Kernel::cosine_decay(0.6, 1.0, 5.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let model = unit_model(&k, &psi, &m, 5.0);
        let a = couple(&model, 0.05, 42, &SimOptions::default()).unwrap();
        let b = couple(&model, 0.05, 42, &SimOptions::default()).unwrap();
        assert_eq!(a.continuous, b.continuous);
        assert_eq!(a.discrete, b.discrete);
        assert_eq!(a.atoms.strips(), b.atoms.strips());
    }

    #[test]
    fn ladder_matches_single_step_runs() {
        let k = Kernel::exponential(0.6, 1.0, 5.0).unwrap();
        let psi = JumpRate::relu(1.0);
        let m = MarkModel::unit();
        let model = unit_model(&k, &psi, &m, 5.0);
        let steps = [0.5, 0.1, 0.05];
        let ladder = couple_ladder(&model, &steps, 9, &[], &SimOptions::default()).unwrap();
        for (i, &s) in steps.iter().enumerate() {
            let single = couple(&model, s, 9, &SimOptions::default()).unwrap();
            assert_eq!(single.continuous, ladder.continuous);
            assert_eq!(single.discrete, ladder.discrete[i]);
        }
    }

    #[test]
    fn fast_sampler_zero_rate() {
        let k = Kernel::exponential(0.5, 1.0, 1.0).unwrap();
        let psi = JumpRate::relu(0.0);
        let m = MarkModel::unit();
        let mut rng = stream_rng(1, &[]);
        let tr = simulate_discrete_fast(&k, &psi, &m, 0.1, 10, &mut rng).unwrap();
        assert_eq!(tr.total_events(), 0);
        assert!(tr.risk.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn grid_count_requires_integral_ratio() {
        assert_eq!(grid_count(5.0, 0.0125).unwrap(), 400);
        assert!(grid_count(5.0, 0.3).is_err());
        assert!(grid_count(5.0, 6.0).is_err());
    }

    #[test]
    fn intensity_integral_closed_form() {
        // One event at 1 with h = a e^{-bt}, relu with mu > 0: the integral is
        // mu T + a (1 - e^{-b (T - 1)}) / b.
        let (a, b, mu, t) = (0.7, 1.3, 0.5, 4.0);
        let k = Kernel::exponential(a, b, t).unwrap();
        let psi = JumpRate::relu(mu);
        let path = ContinuousPath {
            events: vec![Event {
                tau: 1.0,
                theta: 0.1,
                y: 1.0,
                b: 1.0,
                intensity: mu,
            }],
            horizon: t,
            ceiling: 4.0,
            rescans: 0,
        };
        let v = path.intensity_integral(&k, &psi).unwrap();
        let exact = mu * t + a * (1.0 - (-b * (t - 1.0)).exp()) / b;
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }
}
