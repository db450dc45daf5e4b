//! Force-reproduction bias model.
//!
//! When a person reproduces a force `r` they do not apply `r` exactly: the
//! reproduced force carries a systematic, level-dependent bias
//!
//! ```text
//! h = [1 + U(r)] r,      U(r) = delta(r) * sgn(gamma - r),
//! delta(r) = |1 - alpha * r^beta|,   gamma = (1/alpha)^(1/beta),
//! ```
//!
//! with `alpha > 0` and `beta < 0`. `gamma` is the implicit equilibrium
//! point, the force level at which the bias changes sign, and `delta` is
//! the implicit gain, the bias magnitude. Below `gamma` forces are
//! over-reproduced, above it under-reproduced, and `1 + U(r) = alpha r^beta`
//! holds identically for every `r > 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::float::{sgn, Float};

/// A strictly positive interaction force, in newtons (or any fixed unit).
///
/// The interaction model is only defined for positive forces; zero or
/// negative values are rejected at construction rather than clamped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ForceLevel<T>(T);

impl<T: Float> ForceLevel<T> {
    /// Validates `value > 0` and finite.
    pub fn new(value: T) -> Result<Self> {
        if value.is_finite() && value > T::zero() {
            Ok(Self(value))
        } else {
            Err(Error::NonPositiveForce(value.as_f64()))
        }
    }

    /// Wraps a value that is positive by construction (e.g. a product of
    /// positive factors). Debug builds still check.
    pub(crate) fn new_unchecked(value: T) -> Self {
        debug_assert!(value > T::zero(), "unchecked force must be positive");
        Self(value)
    }

    /// The raw force value.
    pub fn value(self) -> T {
        self.0
    }
}

/// Parameters of the power-law reproduction model `h/r = alpha * r^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasParameters<T> {
    alpha: T,
    beta: T,
}

impl<T: Float> BiasParameters<T> {
    /// Validates `alpha > 0` and `beta < 0`.
    ///
    /// `beta = 0` (a level-independent bias) is rejected: the equilibrium
    /// point `(1/alpha)^(1/beta)` is undefined there.
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(Error::InvalidAlpha(alpha.as_f64()));
        }
        if !(beta.is_finite() && beta < T::zero()) {
            return Err(Error::InvalidBeta(beta.as_f64()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// The implicit equilibrium point `gamma = (1/alpha)^(1/beta)`.
    ///
    /// `gamma` is the unique fixed point of the reproduction map:
    /// `reproduce(gamma) = gamma`.
    pub fn implicit_equilibrium(&self) -> ForceLevel<T> {
        ForceLevel::new_unchecked((T::one() / self.alpha).powf(T::one() / self.beta))
    }

    /// The implicit gain `delta(r) = |1 - alpha * r^beta|`.
    ///
    /// Vanishes exactly at `r = gamma` and grows with distance from it.
    pub fn implicit_gain(&self, r: ForceLevel<T>) -> T {
        (T::one() - self.alpha * r.value().powf(self.beta)).abs()
    }

    /// The signed bias `U(r) = delta(r) * sgn(gamma - r)`.
    ///
    /// Satisfies the closed-form identity `1 + U(r) = alpha * r^beta`.
    pub fn bias(&self, r: ForceLevel<T>) -> T {
        self.implicit_gain(r) * sgn(self.implicit_equilibrium().value() - r.value())
    }

    /// One human reproduction: `h = [1 + U(r)] r`.
    ///
    /// Equal to `alpha * r^(1+beta)` by the identity above, hence positive
    /// for every positive `r`.
    pub fn reproduce(&self, r: ForceLevel<T>) -> ForceLevel<T> {
        ForceLevel::new_unchecked((T::one() + self.bias(r)) * r.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(alpha: f64, beta: f64) -> BiasParameters<f64> {
        BiasParameters::new(alpha, beta).unwrap()
    }

    fn force(v: f64) -> ForceLevel<f64> {
        ForceLevel::new(v).unwrap()
    }

    #[test]
    fn construction_rejects_invalid_values() {
        assert!(ForceLevel::new(0.0f64).is_err());
        assert!(ForceLevel::new(-1.0f64).is_err());
        assert!(ForceLevel::new(f64::NAN).is_err());
        assert!(ForceLevel::new(f64::INFINITY).is_err());
        assert!(ForceLevel::new(1e-300f64).is_ok());

        assert!(BiasParameters::new(0.0f64, -0.5).is_err());
        assert!(BiasParameters::new(-1.0f64, -0.5).is_err());
        assert!(BiasParameters::new(1.0f64, 0.0).is_err());
        assert!(BiasParameters::new(1.0f64, 0.3).is_err());
        assert!(BiasParameters::new(f64::NAN, -0.5).is_err());
        assert!(BiasParameters::new(1.0f64, f64::NAN).is_err());
        assert!(BiasParameters::new(1.0f64, -0.5).is_ok());
    }

    #[test]
    fn equilibrium_matches_closed_forms() {
        // (1/1.006)^(1/-0.625); the fitted cohort value rounds to 1.009.
        let g = params(1.006, -0.625).implicit_equilibrium().value();
        assert_relative_eq!(g, 1.009_617_266_204_947, max_relative = 1e-14);
        assert_abs_diff_eq!(g, 1.009, epsilon = 1e-3);

        // alpha = 1 pins gamma at 1 for any beta.
        assert_eq!(params(1.0, -0.5).implicit_equilibrium().value(), 1.0);
        assert_eq!(params(1.0, -1.7).implicit_equilibrium().value(), 1.0);

        // alpha=2, beta=-1: solve 2 gamma^-1 = 1 by hand.
        assert_relative_eq!(
            params(2.0, -1.0).implicit_equilibrium().value(),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        for (a, b) in [(1.006, -0.625), (0.7, -1.2), (1.9, -0.05), (1.3, -1.9)] {
            let p = params(a, b);
            let g = p.implicit_equilibrium();
            assert_relative_eq!(p.reproduce(g).value(), g.value(), max_relative = 1e-12);
        }
    }

    #[test]
    fn implicit_gain_values() {
        let p = params(1.006, -0.625);
        // At gamma the gain vanishes (to rounding).
        let g = p.implicit_equilibrium();
        assert!(p.implicit_gain(g) < 1e-14);
        // |1 - 1.006 * 0.5^-0.625|, high-precision reference.
        assert_relative_eq!(
            p.implicit_gain(force(0.5)),
            0.551_464_090_360_388_5,
            max_relative = 1e-14
        );
        // |1 - 4^-0.5| = 0.5 exactly.
        assert_eq!(params(1.0, -0.5).implicit_gain(force(4.0)), 0.5);
    }

    #[test]
    fn bias_sign_and_values() {
        let p = params(1.0, -0.5);
        assert_eq!(p.bias(p.implicit_equilibrium()), 0.0);
        assert_eq!(p.bias(force(4.0)), -0.5);
        assert_eq!(p.bias(force(0.25)), 1.0);
    }

    #[test]
    fn reproduce_values() {
        let p = params(1.0, -0.5);
        // 1 * 4^(1-0.5) = 2.
        assert_relative_eq!(p.reproduce(force(4.0)).value(), 2.0, max_relative = 1e-15);

        // Fixed-point consistency at the fitted cohort equilibrium.
        let p = params(1.006, -0.625);
        assert_relative_eq!(
            p.reproduce(force(1.009)).value(),
            1.009,
            max_relative = 1e-2
        );
    }

    #[test]
    fn over_under_reproduction_straddles_equilibrium() {
        let p = params(1.4, -0.8);
        let g = p.implicit_equilibrium().value();
        for f in [0.01 * g, 0.3 * g, 0.999 * g] {
            assert!(p.reproduce(force(f)).value() > f);
        }
        for f in [1.001 * g, 3.0 * g, 100.0 * g] {
            assert!(p.reproduce(force(f)).value() < f);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_params() -> impl Strategy<Value = BiasParameters<f64>> {
            (0.5f64..2.0, -1.9f64..-0.05).prop_map(|(a, b)| BiasParameters::new(a, b).unwrap())
        }

        proptest! {
            // 1 + U(r) = alpha r^beta for all r > 0.
            #[test]
            fn closed_form_identity(p in arb_params(), x in 0.01f64..100.0) {
                let r = ForceLevel::new(x * p.implicit_equilibrium().value()).unwrap();
                let lhs = 1.0 + p.bias(r);
                let rhs = p.alpha() * r.value().powf(p.beta());
                prop_assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
            }

            // sgn(U(r)) = sgn(gamma - r) exactly.
            #[test]
            fn bias_sign_tracks_equilibrium(p in arb_params(), x in 0.01f64..100.0) {
                let g = p.implicit_equilibrium().value();
                let r = ForceLevel::new(x * g).unwrap();
                prop_assert_eq!(sgn(p.bias(r)), sgn(g - r.value()));
            }

            // reproduce is monotone increasing in r when 1 + beta > 0.
            #[test]
            fn reproduce_monotone_for_contractive_exponent(
                a in 0.5f64..2.0,
                b in -0.95f64..-0.05,
                x in 0.01f64..10.0,
                step in 1e-3f64..1.0,
            ) {
                let p = BiasParameters::new(a, b).unwrap();
                let lo = ForceLevel::new(x).unwrap();
                let hi = ForceLevel::new(x + step).unwrap();
                prop_assert!(p.reproduce(hi).value() > p.reproduce(lo).value());
            }
        }
    }
}
