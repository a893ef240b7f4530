use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative Lipschitz jump rate `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum JumpRate {
    /// `max(mu + x, 0)`
    ReluAffine { mu: f64 },
    /// `min(max(mu + x, 0), cap)`
    ClippedAffine { mu: f64, cap: f64 },
    /// `scale / (1 + exp(-x))`
    Sigmoid { scale: f64 },
}

impl JumpRate {
    pub fn relu(mu: f64) -> Self {
        JumpRate::ReluAffine { mu }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpRate::ReluAffine { mu } => mu.is_finite(),
            JumpRate::ClippedAffine { mu, cap } => mu.is_finite() && cap >= 0.0 && cap.is_finite(),
            JumpRate::Sigmoid { scale } => scale >= 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid jump rate {self:?}")))
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            JumpRate::ReluAffine { mu } => (mu + x).max(0.0),
            JumpRate::ClippedAffine { mu, cap } => (mu + x).max(0.0).min(cap),
            JumpRate::Sigmoid { scale } => scale / (1.0 + (-x).exp()),
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            JumpRate::ReluAffine { .. } => 1.0,
            JumpRate::ClippedAffine { cap, .. } => {
                if cap > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            JumpRate::Sigmoid { scale } => scale / 4.0,
        }
    }

    /// `||psi||_inf`, infinite for the unbounded family.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            JumpRate::ReluAffine { .. } => f64::INFINITY,
            JumpRate::ClippedAffine { cap, .. } => cap,
            JumpRate::Sigmoid { scale } => scale,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_norm().is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn families() {
        assert_eq!(JumpRate::relu(1.0).eval(-3.0), 0.0);
        assert_eq!(JumpRate::relu(1.0).eval(0.5), 1.5);
        let c = JumpRate::ClippedAffine { mu: 1.0, cap: 2.0 };
        assert_eq!(c.eval(5.0), 2.0);
        assert_eq!(c.sup_norm(), 2.0);
        let s = JumpRate::Sigmoid { scale: 4.0 };
        assert_eq!(s.at_zero(), 2.0);
        assert_eq!(s.lipschitz(), 1.0);
        assert!(JumpRate::relu(0.0).sup_norm().is_infinite());
    }

    #[test]
    fn serde_shape() {
        let j: JumpRate = serde_json::from_str(r#"{"family":"relu-affine","mu":1.0}"#).unwrap();
        assert_eq!(j, JumpRate::relu(1.0));
    }

    proptest! {
        #[test]
        fn nonnegative_and_lipschitz(
            x in -50.0..50.0f64,
            y in -50.0..50.0f64,
            mu in -3.0..3.0f64,
            cap in 0.0..5.0f64,
            scale in 0.0..5.0f64,
        ) {
            for psi in [
                JumpRate::relu(mu),
                JumpRate::ClippedAffine { mu, cap },
                JumpRate::Sigmoid { scale },
            ] {
                prop_assert!(psi.eval(x) >= 0.0);
                let lhs = (psi.eval(x) - psi.eval(y)).abs();
                prop_assert!(lhs <= psi.lipschitz() * (x - y).abs() + 1e-12);
            }
        }
    }
}
