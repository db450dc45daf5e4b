//! Lyapunov-style stability analysis of the interaction map.
//!
//! For the error `e = gamma - r` and the candidate function `V = e^2`, one
//! interaction cycle changes `V` by
//!
//! ```text
//! dV = (gamma - h')^2 - (gamma - r)^2
//!    = -2 delta |gamma - r| r + delta^2 sgn^2(gamma - r) r^2,
//! ```
//!
//! and the evaluation value
//!
//! ```text
//! E = [r delta - 2 |gamma - r|] delta
//! ```
//!
//! is exactly `dV / r`, so `E < 0` at a sample certifies a strict one-step
//! decrease of the squared error. Per-trial `E` samples grouped by force
//! level feed a one-sided t test; the band around the equilibrium where the
//! test fails to reject is the unstable region.

use serde::Serialize;

use crate::bias_model::{BiasParameters, ForceLevel};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::stats;

/// Sign of `gamma - r`, kept explicit because `sgn(0) = 0` matters: the
/// quadratic term of the closed form vanishes exactly at the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of<T: Float>(x: T) -> Self {
        if x > T::zero() {
            Sign::Positive
        } else if x < T::zero() {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    fn squared<T: Float>(self) -> T {
        match self {
            Sign::Zero => T::zero(),
            _ => T::one(),
        }
    }
}

/// The evaluation value `E = [r delta - 2 |gamma - r|] delta`.
///
/// `delta` may be the model gain or a per-trial empirical estimate.
pub fn evaluation_value<T: Float>(gamma: ForceLevel<T>, r: ForceLevel<T>, delta: T) -> T {
    debug_assert!(delta >= T::zero(), "implicit gain is a magnitude");
    let two = T::cast(2.0);
    (r.value() * delta - two * (gamma.value() - r.value()).abs()) * delta
}

/// Per-trial empirical gain `delta_hat = |h/r - 1|`.
///
/// The reproduction data give one `(r, h)` pair per trial; this is the
/// magnitude of the observed multiplicative bias for that trial.
pub fn empirical_gain<T: Float>(r: ForceLevel<T>, h: ForceLevel<T>) -> T {
    (h.value() / r.value() - T::one()).abs()
}

/// One-step change of the squared error, with the error eliminated:
/// `dV = -2 delta |gamma - r| r + delta^2 sgn^2(gamma - r) r^2`.
pub fn delta_v_closed_form<T: Float>(
    gamma: ForceLevel<T>,
    r: ForceLevel<T>,
    delta: T,
    sign_e: Sign,
) -> T {
    debug_assert_eq!(sign_e, Sign::of(gamma.value() - r.value()), "sign_e must be sgn(gamma - r)");
    let two = T::cast(2.0);
    let r = r.value();
    -two * delta * (gamma.value() - r).abs() * r + delta * delta * sign_e.squared::<T>() * r * r
}

/// One-step change of the squared error, computed directly from the next
/// human force: `dV = (gamma - h')^2 - (gamma - r)^2`.
pub fn delta_v_direct<T: Float>(gamma: ForceLevel<T>, r: ForceLevel<T>, h_next: ForceLevel<T>) -> T {
    let eg = gamma.value() - h_next.value();
    let er = gamma.value() - r.value();
    eg * eg - er * er
}

/// Checks that the direct and closed-form routes through the derivation
/// agree to 1e-9 relative at `r` for the given model.
pub fn lyapunov_chain_check<T: Float>(params: &BiasParameters<T>, r: ForceLevel<T>) -> bool {
    let gamma = params.implicit_equilibrium();
    let direct = delta_v_direct(gamma, r, params.reproduce(r));
    let closed = delta_v_closed_form(
        gamma,
        r,
        params.implicit_gain(r),
        Sign::of(gamma.value() - r.value()),
    );
    let scale = direct.abs().max(closed.abs());
    if scale == T::zero() {
        return true;
    }
    (direct - closed).abs() <= T::cast(1e-9) * scale
}

/// One per-trial evaluation sample at a normalized force level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationSample<T> {
    /// Normalized force `r / gamma` of the trial's stimulus.
    pub normalized_force: T,
    /// The evaluation value `E` for the trial.
    pub e_value: T,
    /// Participant or synthetic-agent identifier.
    pub source: u32,
    /// Trial index within the source.
    pub trial: u32,
}

/// All evaluation samples of one `(source, normalized force)` group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationLevel<T> {
    pub normalized_force: T,
    pub e_values: Vec<T>,
}

/// Groups samples by source and bit-identical normalized force, ordered by
/// normalized force (sources interleave along the force axis since each is
/// normalized by its own equilibrium).
pub fn group_samples<T: Float>(samples: &[EvaluationSample<T>]) -> Vec<EvaluationLevel<T>> {
    let mut keyed: Vec<(u32, T, Vec<T>)> = Vec::new();
    for s in samples {
        match keyed
            .iter_mut()
            .find(|(src, f, _)| *src == s.source && *f == s.normalized_force)
        {
            Some((_, _, es)) => es.push(s.e_value),
            None => keyed.push((s.source, s.normalized_force, vec![s.e_value])),
        }
    }
    keyed.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    keyed
        .into_iter()
        .map(|(_, normalized_force, e_values)| EvaluationLevel {
            normalized_force,
            e_values,
        })
        .collect()
}

/// Band of normalized force around 1 where the stability condition is not
/// statistically satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnstableRegion<T> {
    /// Lower boundary (normalized force, below 1).
    pub lower: T,
    /// Upper boundary (normalized force, above 1).
    pub upper: T,
    /// Radius in normalized absolute error: `0.5 (|1-lower| + |1-upper|)`.
    pub error_radius: T,
}

impl<T: Float> UnstableRegion<T> {
    /// The radius formula applied to a boundary pair.
    pub fn radius_from_boundaries(lower: T, upper: T) -> T {
        T::cast(0.5) * ((T::one() - lower).abs() + (T::one() - upper).abs())
    }

    fn new(lower: T, upper: T) -> Self {
        Self {
            lower,
            upper,
            error_radius: Self::radius_from_boundaries(lower, upper),
        }
    }

    /// Whether a normalized absolute error lies inside the region.
    pub fn contains_error(&self, normalized_abs_error: T) -> bool {
        normalized_abs_error < self.error_radius
    }
}

/// Significance of one level under H1 "mean E < 0", with the zero-variance
/// limit (all samples identical) resolved to the sign of the mean.
fn level_significant<T: Float>(e_values: &[T], significance: T) -> Result<bool> {
    match stats::one_sample_t_less(e_values) {
        Ok(test) => Ok(test.p_value < significance),
        Err(Error::ZeroVariance) => Ok(e_values[0] < T::zero()),
        Err(e) => Err(e),
    }
}

/// Estimates the unstable region from grouped per-level evaluation samples.
///
/// On each side of normalized force 1, levels are scanned from the outside
/// toward 1 and the first significant-to-non-significant transition marks
/// the boundary: the boundary is the mean of the two adjacent level forces.
/// Later re-entrant significance closer to 1 is ignored. Returns `None`
/// when a side shows no such transition (no detectable unstable region).
pub fn estimate_unstable_region<T: Float>(
    levels: &[EvaluationLevel<T>],
    significance: T,
) -> Result<Option<UnstableRegion<T>>> {
    let mut below: Vec<&EvaluationLevel<T>> = Vec::new();
    let mut above: Vec<&EvaluationLevel<T>> = Vec::new();
    for level in levels {
        if level.e_values.len() < 2 {
            return Err(Error::InsufficientData {
                what: "evaluation samples per level",
                needed: 2,
                got: level.e_values.len(),
            });
        }
        if level.normalized_force < T::one() {
            below.push(level);
        } else if level.normalized_force > T::one() {
            above.push(level);
        }
    }
    for side in [&below, &above] {
        if side.len() < 2 {
            return Err(Error::InsufficientData {
                what: "force levels per side of the equilibrium",
                needed: 2,
                got: side.len(),
            });
        }
    }
    // Outside-in scan order: ascending below 1, descending above 1.
    below.sort_by(|a, b| a.normalized_force.partial_cmp(&b.normalized_force).unwrap());
    above.sort_by(|a, b| b.normalized_force.partial_cmp(&a.normalized_force).unwrap());

    let boundary = |side: &[&EvaluationLevel<T>]| -> Result<Option<T>> {
        for pair in side.windows(2) {
            let outer_sig = level_significant(&pair[0].e_values, significance)?;
            let inner_sig = level_significant(&pair[1].e_values, significance)?;
            if outer_sig && !inner_sig {
                let mid = T::cast(0.5) * (pair[0].normalized_force + pair[1].normalized_force);
                return Ok(Some(mid));
            }
        }
        Ok(None)
    };

    let (lower, upper) = match (boundary(&below)?, boundary(&above)?) {
        (Some(l), Some(u)) => (l, u),
        _ => return Ok(None),
    };
    Ok(Some(UnstableRegion::new(lower, upper)))
}
