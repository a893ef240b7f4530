use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::randomness::{MarkDistribution, MarkModel, Modulation};
use crate::simulate::{grid_count, JumpRate, Model, SimOptions};

/// Kernel description in a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    Exponential {
        alpha: f64,
        beta: f64,
    },
    Erlang {
        alpha: f64,
        beta: f64,
        order: u32,
    },
    CosineDecay {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// Either the scale `c` or a target `rho_h`.
    InverseSqrt {
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        rho: Option<f64>,
    },
    CompactSupport {
        alpha: f64,
        support: f64,
    },
    /// Piecewise-linear through `[t, h(t)]` pairs.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

fn default_amplitude() -> f64 {
    0.6
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn build(&self, horizon: f64, psi: &JumpRate, marks: &MarkModel) -> Result<Kernel> {
        match *self {
            KernelSpec::Zero => Kernel::zero(horizon),
            KernelSpec::Exponential { alpha, beta } => Kernel::exponential(alpha, beta, horizon),
            KernelSpec::Erlang { alpha, beta, order } => {
                Kernel::erlang(alpha, beta, order, horizon)
            }
            KernelSpec::CosineDecay {
                amplitude,
                frequency,
            } => Kernel::cosine_decay(amplitude, frequency, horizon),
            KernelSpec::InverseSqrt { c, rho } => match (c, rho) {
                (Some(c), None) => Kernel::inverse_sqrt(c, horizon),
                (None, Some(rho)) => {
                    Kernel::inverse_sqrt_for_rho(rho, psi.lipschitz(), marks.mean_b()?, horizon)
                }
                _ => Err(Error::Config(
                    "inverse-sqrt kernel needs exactly one of c, rho".into(),
                )),
            },
            KernelSpec::CompactSupport { alpha, support } => {
                Kernel::compact_support(alpha, support, horizon)
            }
            KernelSpec::Tabulated { ref points } => Kernel::tabulated(points, horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    PointMass { value: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModulationSpec {
    ConstantOne,
    Indicator { threshold: f64 },
    AbsoluteValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkSpec {
    pub distribution: DistributionSpec,
    #[serde(default = "constant_one")]
    pub modulation: ModulationSpec,
}

fn constant_one() -> ModulationSpec {
    ModulationSpec::ConstantOne
}

impl Default for MarkSpec {
    fn default() -> Self {
        MarkSpec {
            distribution: DistributionSpec::PointMass { value: 1.0 },
            modulation: ModulationSpec::ConstantOne,
        }
    }
}

impl MarkSpec {
    pub fn build(&self) -> Result<MarkModel> {
        let dist = match self.distribution {
            DistributionSpec::PointMass { value } => MarkDistribution::PointMass { value },
            DistributionSpec::Exponential { rate } => MarkDistribution::Exponential { rate },
            DistributionSpec::LogNormal { mu, sigma } => MarkDistribution::LogNormal { mu, sigma },
            DistributionSpec::Gaussian { mean, std } => MarkDistribution::Gaussian { mean, std },
        };
        let modulation = match self.modulation {
            ModulationSpec::ConstantOne => Modulation::ConstantOne,
            ModulationSpec::Indicator { threshold } => Modulation::Indicator { threshold },
            ModulationSpec::AbsoluteValue => Modulation::AbsoluteValue,
        };
        MarkModel::new(dist, modulation)
    }
}

/// Pathwise error measured between the continuous and the discrete risk
/// process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `|N_T - N^Delta_T|`
    TerminalCount,
    /// `|R_T - R^Delta_T|`
    TerminalRisk,
    /// `||R - R^Delta||_{W^{eta,1}}`
    Sobolev,
    /// `d_S(R, R^Delta)`, replaced by the surrogate above the jump cap.
    SkorokhodExact,
    /// `Delta + w'_R(Delta) + max_k |R_{k Delta} - R^Delta_{k Delta}|`
    SkorokhodUpper,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::TerminalCount => "terminal_count",
            MetricKind::TerminalRisk => "terminal_risk",
            MetricKind::Sobolev => "sobolev",
            MetricKind::SkorokhodExact => "skorokhod_exact",
            MetricKind::SkorokhodUpper => "skorokhod_upper",
        }
    }
}

/// Settings of the `verify` suite; unset fields fall back to the
/// experiment-level values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: Option<usize>,
    /// Number of equally spaced times at which mean intensities are checked.
    pub time_points: Option<usize>,
    /// Rate of the compound Poisson ensemble for the modulus check;
    /// defaults to `psi(0)`.
    pub modulus_rate: Option<f64>,
    /// Defaults to the first ladder step.
    pub modulus_delta: Option<f64>,
    /// `(s, t)` for the increment check; defaults to `(T/4, 3T/4)`.
    pub increment_window: Option<(f64, f64)>,
    /// Allowed shortfall of a fitted slope below the predicted one.
    pub slope_slack: Option<f64>,
}

/// One experiment: model, `Delta` ladder, Monte Carlo size and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub jump_rate: JumpRate,
    #[serde(default)]
    pub marks: MarkSpec,
    pub horizon: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Exponent of the p-variation bound shape.
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_unstable: bool,
    #[serde(default)]
    pub initial_ceiling: Option<f64>,
    /// Trial index used by `simulate` and `couple`.
    #[serde(default)]
    pub trial: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Directory for every output file; the CLI flag takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_deltas() -> Vec<f64> {
    (0..6).map(|k| 0.5 / f64::from(1u32 << k)).collect()
}

fn default_trials() -> usize {
    2000
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::TerminalCount]
}

fn default_eta() -> f64 {
    0.25
}

/// Model objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Built {
    pub kernel: Kernel,
    pub psi: JumpRate,
    pub marks: MarkModel,
    pub horizon: f64,
    /// `M` for each ladder step.
    pub counts: Vec<usize>,
}

impl Built {
    pub fn model(&self) -> Model<'_> {
        Model {
            kernel: &self.kernel,
            psi: &self.psi,
            marks: &self.marks,
            horizon: self.horizon,
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Unstable { .. } => e,
        other => Error::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            initial_ceiling: self.initial_ceiling,
            allow_unstable: self.allow_unstable,
            ..SimOptions::default()
        }
    }

    /// Check every invariant and build the model. Errors are reported as
    /// configuration errors.
    pub fn build(&self) -> Result<Built> {
        self.validate_fields()?;
        let psi = self.jump_rate;
        psi.validate().map_err(config_err)?;
        let marks = self.marks.build().map_err(config_err)?;
        let kernel = self
            .kernel
            .build(self.horizon, &psi, &marks)
            .map_err(config_err)?;
        let counts = self
            .deltas
            .iter()
            .map(|&d| grid_count(self.horizon, d))
            .collect::<Result<Vec<_>>>()
            .map_err(config_err)?;
        // Moments are needed by every run; surface failures now.
        marks.mean_b().map_err(config_err)?;
        Ok(Built {
            kernel,
            psi,
            marks,
            horizon: self.horizon,
            counts,
        })
    }

    fn validate_fields(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.deltas.is_empty() {
            return bad("the delta ladder is empty".into());
        }
        if self.deltas.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("the delta ladder must be strictly decreasing".into());
        }
        if let Some(&d) = self
            .deltas
            .iter()
            .find(|&&d| !(d > 0.0 && d < self.horizon))
        {
            return bad(format!("every delta must lie in (0, T), got {d}"));
        }
        if self.trials < 2 {
            return bad(format!("need at least 2 trials, got {}", self.trials));
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.p >= 1.0) {
            return bad(format!("p must be at least 1, got {}", self.p));
        }
        if let Some(c) = self.initial_ceiling {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("initial ceiling must be positive, got {c}"));
            }
        }
        let v = &self.verify;
        if v.trials.is_some_and(|n| n < 2) {
            return bad("verify.trials must be at least 2".into());
        }
        if v.time_points == Some(0) {
            return bad("verify.time_points must be positive".into());
        }
        if let Some(r) = v.modulus_rate {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("verify.modulus_rate must be positive, got {r}"));
            }
        }
        if let Some(d) = v.modulus_delta {
            if !(d > 0.0 && d < self.horizon) {
                return bad(format!("verify.modulus_delta must lie in (0, T), got {d}"));
            }
        }
        if let Some((s, t)) = v.increment_window {
            if !(0.0 <= s && s < t && t <= self.horizon) {
                return bad(format!(
                    "verify.increment_window must satisfy 0 <= s < t <= T, got ({s}, {t})"
                ));
            }
        }
        Ok(())
    }
}
