//! The shared Poisson measure on `[0,T] x (0, ceiling] x R` and the mark
//! model `(nu, b)`.
//!
//! Atoms are materialized in horizontal strips. Raising the ceiling appends
//! a strip drawn from its own random stream and never touches the existing
//! ones, so every process thinned from the same [`PoissonAtoms`] sees the
//! same measure no matter who triggered the extension.

use std::fmt;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Poisson};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Generator used for every stream in the crate (256-bit key, 64-bit stream).
pub type StreamRng = ChaCha12Rng;

/// Largest Poisson mean accepted by the samplers.
pub const MAX_POISSON_MEAN: f64 = 1e9;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible generator keyed by a master seed and a path of stream
/// indices, e.g. `[trial]` or `[trial, strip]`.
pub fn stream_rng(master: u64, path: &[u64]) -> StreamRng {
    let mut state = master;
    let mut mix = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(mix);
        mix = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    StreamRng::from_seed(seed)
}

/// Draw from `Poisson(mean)`; zero mean yields zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::RunawayIntensity(format!(
            "invalid Poisson mean {mean}"
        )));
    }
    if mean > MAX_POISSON_MEAN {
        return Err(Error::RunawayIntensity(format!(
            "Poisson mean {mean:e} exceeds {MAX_POISSON_MEAN:e}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::RunawayIntensity(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}

type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;
type MarkMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Claim size distribution `nu`.
#[derive(Clone)]
pub enum MarkDistribution {
    PointMass {
        value: f64,
    },
    Exponential {
        rate: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// User sampler. `finite_variance = false` declares a heavy tail, for
    /// which second moments are refused.
    Custom {
        sampler: Sampler,
        finite_variance: bool,
    },
}

impl fmt::Debug for MarkDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PointMass { value } => write!(f, "PointMass({value})"),
            Self::Exponential { rate } => write!(f, "Exponential({rate})"),
            Self::LogNormal { mu, sigma } => write!(f, "LogNormal({mu}, {sigma})"),
            Self::Gaussian { mean, std } => write!(f, "Gaussian({mean}, {std})"),
            Self::Custom {
                finite_variance, ..
            } => write!(f, "Custom(finite_variance={finite_variance})"),
        }
    }
}

/// Mark modulation `b`, a nonnegative map of the mark.
#[derive(Clone)]
pub enum Modulation {
    ConstantOne,
    /// `b(y) = 1{y >= threshold}`
    Indicator {
        threshold: f64,
    },
    AbsoluteValue,
    Custom(MarkMap),
}

impl fmt::Debug for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantOne => write!(f, "ConstantOne"),
            Self::Indicator { threshold } => write!(f, "Indicator({threshold})"),
            Self::AbsoluteValue => write!(f, "AbsoluteValue"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Modulation {
    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            Self::ConstantOne => 1.0,
            Self::Indicator { threshold } => {
                if y >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Self::AbsoluteValue => y.abs(),
            Self::Custom(f) => f(y),
        }
    }
}

/// First and second moments of `|Y|` and `b(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MarkMoments {
    pub mean_abs: f64,
    /// `E Y^2`; `None` when the distribution is declared heavy-tailed.
    pub second: Option<f64>,
    pub mean_b: f64,
    /// `E b(Y)^2`; `None` when it cannot be finite.
    pub second_b: Option<f64>,
    /// Set when any entry was estimated by Monte Carlo.
    pub monte_carlo: Option<MonteCarloInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MonteCarloInfo {
    pub samples: usize,
    pub stderr_mean_abs: f64,
    pub stderr_mean_b: f64,
}

/// Samples used by the Monte Carlo moment fallback.
pub const MOMENT_SAMPLES: usize = 1_000_000;

/// The mark model `(nu, b)`.
#[derive(Clone, Debug)]
pub struct MarkModel {
    pub distribution: MarkDistribution,
    pub modulation: Modulation,
    moments: Arc<OnceLock<std::result::Result<MarkMoments, String>>>,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

impl MarkModel {
    pub fn new(distribution: MarkDistribution, modulation: Modulation) -> Result<Self> {
        let valid = match &distribution {
            MarkDistribution::PointMass { value } => value.is_finite(),
            MarkDistribution::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            MarkDistribution::LogNormal { mu, sigma } => mu.is_finite() && *sigma >= 0.0,
            MarkDistribution::Gaussian { mean, std } => mean.is_finite() && *std >= 0.0,
            MarkDistribution::Custom { .. } => true,
        };
        if !valid {
            return Err(Error::param(format!(
                "invalid mark distribution {distribution:?}"
            )));
        }
        Ok(MarkModel {
            distribution,
            modulation,
            moments: Arc::new(OnceLock::new()),
        })
    }

    /// `Y = 1`, `b = 1`: the unmarked counting process.
    pub fn unit() -> Self {
        Self::new(
            MarkDistribution::PointMass { value: 1.0 },
            Modulation::ConstantOne,
        )
        .expect("unit marks are valid")
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        match &self.distribution {
            MarkDistribution::PointMass { value } => *value,
            MarkDistribution::Exponential { rate } => {
                Exp::new(*rate).expect("validated rate").sample(rng)
            }
            MarkDistribution::LogNormal { mu, sigma } => {
                LogNormal::new(*mu, *sigma).expect("validated").sample(rng)
            }
            MarkDistribution::Gaussian { mean, std } => {
                Normal::new(*mean, *std).expect("validated").sample(rng)
            }
            MarkDistribution::Custom { sampler, .. } => sampler(rng),
        }
    }

    #[inline]
    pub fn modulate(&self, y: f64) -> f64 {
        self.modulation.apply(y)
    }

    /// `(E|Y|, E Y^2, E b(Y), E b(Y)^2)`, erroring on unavailable second moments.
    pub fn moments_tuple(&self) -> Result<(f64, f64, f64, f64)> {
        let m = self.moments()?;
        Ok((
            m.mean_abs,
            self.second_moment()?,
            m.mean_b,
            self.second_b()?,
        ))
    }

    pub fn mean_abs(&self) -> Result<f64> {
        Ok(self.moments()?.mean_abs)
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(match &self.distribution {
            MarkDistribution::PointMass { value } => *value,
            MarkDistribution::Exponential { rate } => 1.0 / rate,
            MarkDistribution::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            MarkDistribution::Gaussian { mean, .. } => *mean,
            MarkDistribution::Custom { sampler, .. } => {
                let mut rng = stream_rng(0x6d61_726b, &[1]);
                (0..MOMENT_SAMPLES).map(|_| sampler(&mut rng)).sum::<f64>() / MOMENT_SAMPLES as f64
            }
        })
    }

    pub fn mean_b(&self) -> Result<f64> {
        Ok(self.moments()?.mean_b)
    }

    pub fn second_moment(&self) -> Result<f64> {
        self.moments()?.second.ok_or_else(|| {
            Error::UnsupportedMoment("E Y^2 requested for a heavy-tailed mark distribution".into())
        })
    }

    pub fn second_b(&self) -> Result<f64> {
        self.moments()?.second_b.ok_or_else(|| {
            Error::UnsupportedMoment("E b(Y)^2 requested but not finite for this model".into())
        })
    }

    pub fn moments(&self) -> Result<MarkMoments> {
        self.moments
            .get_or_init(|| self.compute_moments())
            .clone()
            .map_err(Error::UnsupportedMoment)
    }

    fn compute_moments(&self) -> std::result::Result<MarkMoments, String> {
        use MarkDistribution as D;
        let (mean_abs, second) = match &self.distribution {
            D::PointMass { value } => (Some(value.abs()), Some(Some(value * value))),
            D::Exponential { rate } => (Some(1.0 / rate), Some(Some(2.0 / (rate * rate)))),
            D::LogNormal { mu, sigma } => (
                Some((mu + 0.5 * sigma * sigma).exp()),
                Some(Some((2.0 * mu + 2.0 * sigma * sigma).exp())),
            ),
            D::Gaussian { mean, std } => {
                let abs = if *std == 0.0 {
                    mean.abs()
                } else {
                    std * (2.0 / std::f64::consts::PI).sqrt()
                        * (-mean * mean / (2.0 * std * std)).exp()
                        + mean * (1.0 - 2.0 * std_normal_cdf(-mean / std))
                };
                (Some(abs), Some(Some(mean * mean + std * std)))
            }
            D::Custom {
                finite_variance, ..
            } => (None, if *finite_variance { None } else { Some(None) }),
        };

        let closed_b = match (&self.modulation, &self.distribution) {
            (Modulation::ConstantOne, _) => Some((1.0, Some(1.0))),
            (Modulation::AbsoluteValue, D::Custom { .. }) => None,
            (Modulation::AbsoluteValue, _) => {
                Some((mean_abs.expect("closed form"), second.flatten()))
            }
            (Modulation::Indicator { threshold }, d) => {
                let a = *threshold;
                let prob = match d {
                    D::PointMass { value } => Some(if *value >= a { 1.0 } else { 0.0 }),
                    D::Exponential { rate } => Some(if a <= 0.0 { 1.0 } else { (-rate * a).exp() }),
                    D::LogNormal { mu, sigma } => Some(if a <= 0.0 {
                        1.0
                    } else if *sigma == 0.0 {
                        if mu.exp() >= a {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        1.0 - std_normal_cdf((a.ln() - mu) / sigma)
                    }),
                    D::Gaussian { mean, std } => Some(if *std == 0.0 {
                        if *mean >= a {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        1.0 - std_normal_cdf((a - mean) / std)
                    }),
                    D::Custom { .. } => None,
                };
                prob.map(|p| (p, Some(p)))
            }
            (Modulation::Custom(_), _) => None,
        };

        if let (Some(mean_abs), Some(second), Some((mean_b, second_b))) =
            (mean_abs, second, closed_b)
        {
            return Ok(MarkMoments {
                mean_abs,
                second,
                mean_b,
                second_b,
                monte_carlo: None,
            });
        }

        // Monte Carlo fallback on a fixed stream.
        let mut rng = stream_rng(0x6d61_726b, &[0]);
        let n = MOMENT_SAMPLES;
        let (mut sa, mut sa2, mut s2, mut sb, mut sb2, mut sb4) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let y = self.sample(&mut rng);
            let b = self.modulate(y);
            if !(b >= 0.0) {
                return Err(format!("modulation returned {b} for mark {y}"));
            }
            sa += y.abs();
            sa2 += y * y;
            s2 += y * y;
            sb += b;
            sb2 += b * b;
            sb4 += b * b * b * b;
        }
        let nf = n as f64;
        let mc_abs = sa / nf;
        let mc_b = sb / nf;
        let se_abs = ((sa2 / nf - mc_abs * mc_abs).max(0.0) / nf).sqrt();
        let se_b = ((sb2 / nf - mc_b * mc_b).max(0.0) / nf).sqrt();
        let _ = sb4;
        let (mean_abs, second) = match (mean_abs, second) {
            (Some(a), Some(s)) => (a, s),
            (_, Some(None)) => (mc_abs, None),
            _ => (mc_abs, Some(s2 / nf)),
        };
        let (mean_b, second_b) = match closed_b {
            Some(v) => v,
            None => {
                let heavy = second.is_none();
                let b_unbounded = matches!(self.modulation, Modulation::AbsoluteValue);
                (
                    mc_b,
                    if heavy && b_unbounded {
                        None
                    } else {
                        Some(sb2 / nf)
                    },
                )
            }
        };
        Ok(MarkMoments {
            mean_abs,
            second,
            mean_b,
            second_b,
            monte_carlo: Some(MonteCarloInfo {
                samples: n,
                stderr_mean_abs: se_abs,
                stderr_mean_b: se_b,
            }),
        })
    }
}

/// One atom `(tau, theta, y)` of the Poisson measure; `b` caches `b(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub tau: f64,
    pub theta: f64,
    pub y: f64,
    pub b: f64,
    pub strip: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub theta_low: f64,
    pub theta_high: f64,
    /// Sorted by `tau`.
    pub atoms: Vec<Atom>,
}

/// Materialized Poisson measure with intensity `dt x dtheta x nu(dy)`.
#[derive(Debug, Clone)]
pub struct PoissonAtoms {
    horizon: f64,
    strips: Vec<Strip>,
    marks: MarkModel,
    master_seed: u64,
    stream: Vec<u64>,
}

impl PoissonAtoms {
    /// One strip `(0, ceiling]` on `(0, horizon]`.
    pub fn sample(horizon: f64, ceiling: f64, marks: &MarkModel, seed: u64) -> Result<Self> {
        Self::sample_on_stream(horizon, ceiling, marks, seed, &[])
    }

    /// As [`PoissonAtoms::sample`], on the sub-stream `path` of `seed`
    /// (the harness uses `[trial index]`).
    pub fn sample_on_stream(
        horizon: f64,
        ceiling: f64,
        marks: &MarkModel,
        seed: u64,
        path: &[u64],
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(ceiling > 0.0 && ceiling.is_finite()) {
            return Err(Error::param(format!(
                "ceiling must be positive, got {ceiling}"
            )));
        }
        let mut atoms = PoissonAtoms {
            horizon,
            strips: Vec::new(),
            marks: marks.clone(),
            master_seed: seed,
            stream: path.to_vec(),
        };
        atoms.push_strip(0.0, ceiling)?;
        Ok(atoms)
    }

    /// Build from explicit strips (tests, replay of a dump).
    pub fn from_atoms(
        horizon: f64,
        ceiling: f64,
        marks: &MarkModel,
        atoms: Vec<(f64, f64, f64)>,
    ) -> Result<Self> {
        let mut list: Vec<Atom> = atoms
            .into_iter()
            .map(|(tau, theta, y)| Atom {
                tau,
                theta,
                y,
                b: marks.modulate(y),
                strip: 0,
            })
            .collect();
        if list
            .iter()
            .any(|a| !(a.tau > 0.0 && a.tau <= horizon && a.theta > 0.0 && a.theta <= ceiling))
        {
            return Err(Error::param("atom outside (0, T] x (0, ceiling]"));
        }
        list.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.theta.total_cmp(&b.theta)));
        Ok(PoissonAtoms {
            horizon,
            strips: vec![Strip {
                theta_low: 0.0,
                theta_high: ceiling,
                atoms: list,
            }],
            marks: marks.clone(),
            master_seed: 0,
            stream: vec![u64::MAX],
        })
    }

    fn push_strip(&mut self, low: f64, high: f64) -> Result<()> {
        let index = self.strips.len() as u64;
        let mut path = self.stream.clone();
        path.push(index);
        let mut rng = stream_rng(self.master_seed, &path);
        let count = poisson_count(self.horizon * (high - low), &mut rng)?;
        let width = high - low;
        let mut atoms: Vec<Atom> = (0..count)
            .map(|_| {
                // (0, T]: 1 - U with U in [0, 1)
                let tau = self.horizon * (1.0 - rng.random::<f64>());
                let theta = high - width * rng.random::<f64>();
                let y = self.marks.sample(&mut rng);
                Atom {
                    tau,
                    theta,
                    y,
                    b: self.marks.modulate(y),
                    strip: index as u32,
                }
            })
            .collect();
        atoms.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.theta.total_cmp(&b.theta)));
        self.strips.push(Strip {
            theta_low: low,
            theta_high: high,
            atoms,
        });
        Ok(())
    }

    /// Append the strip `(ceiling, new_ceiling]`.
    pub fn extend_ceiling(&mut self, new_ceiling: f64) -> Result<()> {
        let current = self.ceiling();
        if !(new_ceiling > current) || !new_ceiling.is_finite() {
            return Err(Error::param(format!(
                "new ceiling {new_ceiling} must exceed current ceiling {current}"
            )));
        }
        self.push_strip(current, new_ceiling)
    }

    pub fn ceiling(&self) -> f64 {
        self.strips.last().map_or(0.0, |s| s.theta_high)
    }

    /// Ceiling of the first strip.
    pub fn initial_ceiling(&self) -> f64 {
        self.strips.first().map_or(0.0, |s| s.theta_high)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn strips(&self) -> &[Strip] {
        &self.strips
    }

    pub fn marks(&self) -> &MarkModel {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.strips.iter().map(|s| s.atoms.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All atoms with `tau >= from`, ordered by `(tau, theta)`.
    pub fn merged_from(&self, from: f64) -> Vec<Atom> {
        let mut all: Vec<Atom> = self
            .strips
            .iter()
            .flat_map(|s| {
                let start = s.atoms.partition_point(|a| a.tau < from);
                s.atoms[start..].iter().copied()
            })
            .collect();
        all.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.theta.total_cmp(&b.theta)));
        all
    }

    /// All atoms ordered by `(tau, theta)`.
    pub fn merged(&self) -> Vec<Atom> {
        self.merged_from(f64::NEG_INFINITY)
    }

    /// Number of atoms with `theta <= level`.
    pub fn count_below(&self, level: f64) -> usize {
        self.strips
            .iter()
            .flat_map(|s| s.atoms.iter())
            .filter(|a| a.theta <= level)
            .count()
    }

    /// CSV dump with header `tau,theta,y,strip`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "theta", "y", "strip"])?;
        for a in self.merged() {
            w.write_record(&[
                a.tau.to_string(),
                a.theta.to_string(),
                a.y.to_string(),
                a.strip.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_identical_atoms() {
        let m = MarkModel::new(
            MarkDistribution::Exponential { rate: 1.0 },
            Modulation::ConstantOne,
        )
        .unwrap();
        let a = PoissonAtoms::sample(10.0, 3.0, &m, 7).unwrap();
        let b = PoissonAtoms::sample(10.0, 3.0, &m, 7).unwrap();
        assert_eq!(a.strips(), b.strips());
        let c = PoissonAtoms::sample(10.0, 3.0, &m, 8).unwrap();
        assert_ne!(a.strips(), c.strips());
    }

    #[test]
    fn empty_draw_is_valid() {
        // Tiny region: the count is almost surely zero for some seed.
        let m = MarkModel::unit();
        let empty = (0..100)
            .map(|s| PoissonAtoms::sample(1e-6, 1e-6, &m, s).unwrap())
            .find(|a| a.is_empty())
            .expect("an empty draw");
        assert_eq!(empty.merged().len(), 0);
    }

    #[test]
    fn atoms_are_in_range_and_sorted() {
        let m = MarkModel::unit();
        let a = PoissonAtoms::sample(10.0, 3.0, &m, 1).unwrap();
        for s in a.strips() {
            assert!(s.atoms.windows(2).all(|w| w[0].tau <= w[1].tau));
            for x in &s.atoms {
                assert!(x.tau > 0.0 && x.tau <= 10.0);
                assert!(x.theta > 0.0 && x.theta <= 3.0);
            }
        }
    }

    #[test]
    fn extension_preserves_existing_strips() {
        let m = MarkModel::unit();
        let mut a = PoissonAtoms::sample(10.0, 3.0, &m, 11).unwrap();
        let before = a.strips()[0].clone();
        assert!(a.extend_ceiling(3.0).is_err());
        a.extend_ceiling(5.0).unwrap();
        assert_eq!(a.strips()[0], before);
        assert_eq!(a.ceiling(), 5.0);
        for x in &a.strips()[1].atoms {
            assert!(x.theta > 3.0 && x.theta <= 5.0);
        }
    }

    #[test]
    fn moments_closed_form() {
        let unit = MarkModel::unit();
        assert_eq!(unit.moments_tuple().unwrap(), (1.0, 1.0, 1.0, 1.0));

        let e = MarkModel::new(
            MarkDistribution::Exponential { rate: 1.0 },
            Modulation::ConstantOne,
        )
        .unwrap();
        let (a, s, b, b2) = e.moments_tuple().unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (s - 2.0).abs() < 1e-15);
        assert_eq!((b, b2), (1.0, 1.0));

        let g = MarkModel::new(
            MarkDistribution::Gaussian {
                mean: 0.0,
                std: 1.0,
            },
            Modulation::Indicator { threshold: 0.0 },
        )
        .unwrap();
        assert!((g.mean_b().unwrap() - 0.5).abs() < 1e-15);
        assert!((g.mean_abs().unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_agree_with_sampling() {
        let models = [
            MarkModel::new(
                MarkDistribution::Gaussian {
                    mean: 0.4,
                    std: 1.3,
                },
                Modulation::AbsoluteValue,
            )
            .unwrap(),
            MarkModel::new(
                MarkDistribution::LogNormal {
                    mu: -0.2,
                    sigma: 0.5,
                },
                Modulation::Indicator { threshold: 1.0 },
            )
            .unwrap(),
        ];
        for m in models {
            let mut rng = stream_rng(99, &[]);
            let n = 400_000;
            let (mut sa, mut sb) = (0.0, 0.0);
            for _ in 0..n {
                let y = m.sample(&mut rng);
                sa += y.abs();
                sb += m.modulate(y);
            }
            let mm = m.moments().unwrap();
            assert!((sa / n as f64 - mm.mean_abs).abs() < 0.01, "{m:?}");
            assert!((sb / n as f64 - mm.mean_b).abs() < 0.01, "{m:?}");
        }
    }

    #[test]
    fn heavy_tail_refuses_second_moment() {
        // Pareto(1, 1.5): finite mean, infinite variance.
        let pareto: Sampler = Arc::new(|rng: &mut dyn RngCore| {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(-1.0 / 1.5)
        });
        let m = MarkModel::new(
            MarkDistribution::Custom {
                sampler: pareto,
                finite_variance: false,
            },
            Modulation::ConstantOne,
        )
        .unwrap();
        assert!(m.mean_abs().unwrap() > 2.5);
        assert!(matches!(
            m.second_moment(),
            Err(Error::UnsupportedMoment(_))
        ));
        assert_eq!(m.mean_b().unwrap(), 1.0);
        assert!(m.moments().unwrap().monte_carlo.is_some());
    }

    #[test]
    fn custom_modulation_uses_monte_carlo() {
        let m = MarkModel::new(
            MarkDistribution::Exponential { rate: 2.0 },
            Modulation::Custom(Arc::new(|y| y.min(1.0))),
        )
        .unwrap();
        let mm = m.moments().unwrap();
        // E min(Y,1) = (1 - e^{-2}) / 2
        let exact = (1.0 - (-2f64).exp()) / 2.0;
        let info = mm.monte_carlo.unwrap();
        assert!((mm.mean_b - exact).abs() < 4.0 * info.stderr_mean_b);
    }

    #[test]
    fn csv_dump_has_header() {
        let a = PoissonAtoms::sample(1.0, 2.0, &MarkModel::unit(), 3).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau,theta,y,strip\n"));
        assert_eq!(text.lines().count(), a.len() + 1);
    }
}
