//! Discrete-event interaction dynamics.
//!
//! One interaction cycle alternates a robot phase and a human phase: the
//! robot replays the human's previous force exactly, the human reproduces
//! the robot's force with the bias of [`crate::bias_model`]:
//!
//! ```text
//! h[k+1] = [1 + U(r[k])] r[k],     r[k] = h[k].
//! ```
//!
//! Without bias the loop is marginally stable (every force is a fixed
//! point); with the bias it has the single fixed point `gamma`. In log
//! space the deterministic map contracts geometrically:
//! `ln(r[k+1]/gamma) = (1+beta) ln(r[k]/gamma)`, so the equilibrium is
//! globally attracting whenever `|1+beta| < 1`.
//!
//! The general interaction of the discussion section adds voluntary gains
//! `H` (human) and `R` (robot) around the same implicit input
//! `u(r) = U(r) r = K(r) (gamma - r)`, which acts as a variable-gain
//! feedback controller with `K` in `[0, 1]` for `-1 <= beta < 0`.

use serde::Serialize;

use crate::bias_model::{BiasParameters, ForceLevel};
use crate::error::{Error, Result};
use crate::float::Float;

/// One robot/human phase pair of an interaction.
///
/// The robot reproduces exactly, so within an entry the robot force equals
/// the human force it replays; the bias acts between consecutive entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry<T> {
    /// Phase-pair index `k`.
    pub index: usize,
    /// Robot-phase force `r[k]`.
    pub robot: T,
    /// Human-phase force `h[k]` (`= r[k]` when the robot replays exactly).
    pub human: T,
}

/// An ordered record of interaction forces `(k, r[k], h[k])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionTrace<T> {
    entries: Vec<TraceEntry<T>>,
}

impl<T: Float> InteractionTrace<T> {
    pub(crate) fn from_forces(forces: Vec<T>) -> Self {
        let entries = forces
            .into_iter()
            .enumerate()
            .map(|(index, f)| TraceEntry {
                index,
                robot: f,
                human: f,
            })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[TraceEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The initial robot force `r[0]`.
    pub fn initial_robot(&self) -> T {
        self.entries[0].robot
    }

    /// The final human force (e.g. `h[20]` for a 20-pair interaction).
    pub fn final_human(&self) -> T {
        self.entries[self.entries.len() - 1].human
    }
}

/// Advances the marginally-stable interaction one cycle:
/// `r[k+1] = h[k+1] = [1 + U(r[k])] r[k]`.
pub fn step<T: Float>(params: &BiasParameters<T>, r: ForceLevel<T>) -> ForceLevel<T> {
    params.reproduce(r)
}

/// Runs the deterministic interaction for `n_phases` phase pairs.
///
/// The trace holds `n_phases + 1` entries: the initial force plus one entry
/// per human reproduction, so entry `k` is `r[k] = h[k]`.
pub fn simulate<T: Float>(
    params: &BiasParameters<T>,
    r0: ForceLevel<T>,
    n_phases: usize,
) -> Result<InteractionTrace<T>> {
    if n_phases == 0 {
        return Err(Error::InvalidConfig("n_phases must be at least 1"));
    }
    let mut forces = Vec::with_capacity(n_phases + 1);
    let mut r = r0;
    forces.push(r.value());
    for _ in 0..n_phases {
        r = step(params, r);
        forces.push(r.value());
    }
    Ok(InteractionTrace::from_forces(forces))
}

/// The bias-free baseline: every force is a fixed point, so the trace is
/// constant at `r0`.
pub fn simulate_unbiased<T: Float>(r0: ForceLevel<T>, n_phases: usize) -> Result<InteractionTrace<T>> {
    if n_phases == 0 {
        return Err(Error::InvalidConfig("n_phases must be at least 1"));
    }
    Ok(InteractionTrace::from_forces(vec![r0.value(); n_phases + 1]))
}

/// The variable feedback gain `K(r) = delta(r) r / |gamma - r|`.
///
/// `K` is continuously extended by its limit `|beta|` at `r = gamma`. For
/// `-1 < beta < 0` it satisfies `K(0+) = 0`, `K -> 1` as `r -> inf`, and
/// stays in `[0, 1)` away from the equilibrium; for `beta <= -1` the value
/// near `gamma` exceeds 1.
pub fn variable_gain<T: Float>(params: &BiasParameters<T>, r: ForceLevel<T>) -> T {
    let gamma = params.implicit_equilibrium().value();
    if r.value() == gamma {
        return params.beta().abs();
    }
    params.implicit_gain(r) * r.value() / (gamma - r.value()).abs()
}

/// The implicit input `u(r) = U(r) r`, identically `K(r) (gamma - r)`.
pub fn implicit_input<T: Float>(params: &BiasParameters<T>, r: ForceLevel<T>) -> T {
    let u = params.bias(r) * r.value();
    debug_assert!({
        let gamma = params.implicit_equilibrium().value();
        let via_gain = variable_gain(params, r) * (gamma - r.value());
        (u - via_gain).abs() <= T::cast(1e-12) * u.abs().max(via_gain.abs()).max(T::one())
    });
    u
}

/// Positive voluntary gains of the general interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralInteractionParams<T> {
    human_gain: T,
    robot_gain: T,
}

impl<T: Float> GeneralInteractionParams<T> {
    /// Validates `H > 0` and `R > 0`.
    pub fn new(human_gain: T, robot_gain: T) -> Result<Self> {
        for g in [human_gain, robot_gain] {
            if !(g.is_finite() && g > T::zero()) {
                return Err(Error::InvalidVoluntaryGain(g.as_f64()));
            }
        }
        Ok(Self {
            human_gain,
            robot_gain,
        })
    }

    pub fn human_gain(&self) -> T {
        self.human_gain
    }

    pub fn robot_gain(&self) -> T {
        self.robot_gain
    }
}

/// One cycle of the general interaction:
///
/// ```text
/// h[k+1] = H r[k] + u(r[k]),    r[k+1] = R h[k+1].
/// ```
///
/// With `H = R = 1` this reduces exactly to [`step`]. Fails if the human
/// force leaves the positive domain the model is defined on; positivity is
/// a model assumption, not a saturation, so no clamping is applied.
pub fn general_step<T: Float>(
    gains: &GeneralInteractionParams<T>,
    params: &BiasParameters<T>,
    r: ForceLevel<T>,
) -> Result<(ForceLevel<T>, ForceLevel<T>)> {
    let h_next = gains.human_gain * r.value() + implicit_input(params, r);
    let in_domain = h_next.is_finite() && h_next > T::zero();
    if !in_domain {
        return Err(Error::DomainExit {
            phase: 0,
            value: h_next.as_f64(),
        });
    }
    let h_next = ForceLevel::new_unchecked(h_next);
    let r_next = ForceLevel::new_unchecked(gains.robot_gain * h_next.value());
    Ok((h_next, r_next))
}

/// The error-transition magnitude `|R (H - K)|` of the general interaction.
///
/// For `K` in `[0, 1]` it is bounded by `R H` when `K <= H` and by `R`
/// otherwise, which is the stabilizing effect of the implicit feedback:
/// the bias can only shrink the voluntary loop gain.
pub fn transition_bound<T: Float>(gains: &GeneralInteractionParams<T>, k_gain: T) -> Result<T> {
    if !(k_gain.is_finite() && k_gain >= T::zero() && k_gain <= T::one()) {
        return Err(Error::GainOutOfRange(k_gain.as_f64()));
    }
    Ok((gains.robot_gain * (gains.human_gain - k_gain)).abs())
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
    fn step_follows_closed_form() {
        // r[k] = r0^((1+beta)^k) for alpha = 1.
        let p = params(1.0, -0.5);
        let mut r = force(4.0);
        for k in 1..=3 {
            r = step(&p, r);
            let expected = 4.0f64.powf(0.5f64.powi(k));
            assert_relative_eq!(r.value(), expected, max_relative = 1e-13);
        }
        assert_relative_eq!(step(&p, force(4.0)).value(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn equilibrium_start_stays_constant() {
        let p = params(1.3, -0.7);
        let g = p.implicit_equilibrium();
        let trace = simulate(&p, g, 25).unwrap();
        for e in trace.entries() {
            assert_relative_eq!(e.robot, g.value(), max_relative = 1e-12);
            assert_eq!(e.robot, e.human);
        }
    }

    #[test]
    fn unbiased_baseline_is_marginally_stable() {
        let trace = simulate_unbiased(force(3.7), 40).unwrap();
        assert_eq!(trace.len(), 41);
        assert!(trace.entries().iter().all(|e| e.robot == 3.7 && e.human == 3.7));
    }

    #[test]
    fn simulate_converges_to_equilibrium() {
        // Closed form after 20 reproductions: 4^(0.5^20) = 1 + 1.322e-6.
        let p = params(1.0, -0.5);
        let trace = simulate(&p, force(4.0), 20).unwrap();
        assert_eq!(trace.len(), 21);
        let expected = 4.0f64.powf(0.5f64.powi(20));
        assert_relative_eq!(trace.final_human(), expected, max_relative = 1e-12);
        assert_abs_diff_eq!(trace.final_human(), 1.0, epsilon = 1.4e-6);

        // The fitted cohort map from half the equilibrium: well within 1%
        // after 40 pairs.
        let p = params(1.006, -0.625);
        let g = p.implicit_equilibrium().value();
        let trace = simulate(&p, force(0.5 * g), 40).unwrap();
        assert!((trace.final_human() / g - 1.0).abs() < 1e-2);
    }

    #[test]
    fn simulate_rejects_zero_phases() {
        let p = params(1.0, -0.5);
        assert!(simulate(&p, force(1.0), 0).is_err());
        assert!(simulate_unbiased(force(1.0), 0).is_err());
    }

    #[test]
    fn variable_gain_values_and_limits() {
        let p = params(1.0, -0.5);
        // delta(4) * 4 / |1 - 4| = 0.5 * 4 / 3.
        assert_relative_eq!(variable_gain(&p, force(4.0)), 2.0 / 3.0, max_relative = 1e-15);
        // Removable singularity at gamma, extended by |beta|.
        assert_eq!(variable_gain(&p, p.implicit_equilibrium()), 0.5);
        // K(0+) -> 0 and K(inf) -> 1 for -1 < beta < 0.
        assert!(variable_gain(&p, force(1e-9)) < 1e-4);
        assert_abs_diff_eq!(variable_gain(&p, force(1e12)), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn implicit_input_values() {
        let p = params(1.0, -0.5);
        assert_eq!(implicit_input(&p, p.implicit_equilibrium()), 0.0);
        assert_relative_eq!(implicit_input(&p, force(4.0)), -2.0, max_relative = 1e-15);
        assert_relative_eq!(implicit_input(&p, force(0.25)), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn general_step_reduces_to_step_at_unit_gains() {
        let p = params(1.2, -0.8);
        let gains = GeneralInteractionParams::new(1.0, 1.0).unwrap();
        for r in [0.3, 1.0, 2.0, 7.5] {
            let r = force(r);
            let (h, rn) = general_step(&gains, &p, r).unwrap();
            let plain = step(&p, r).value();
            assert_relative_eq!(h.value(), plain, max_relative = 1e-12);
            assert_relative_eq!(rn.value(), plain, max_relative = 1e-12);
        }
        let g = p.implicit_equilibrium();
        let (h, rn) = general_step(&gains, &p, g).unwrap();
        assert_relative_eq!(h.value(), g.value(), max_relative = 1e-12);
        assert_relative_eq!(rn.value(), g.value(), max_relative = 1e-12);
    }

    #[test]
    fn general_step_values_and_domain_exit() {
        let p = params(1.0, -0.5);
        let gains = GeneralInteractionParams::new(0.9, 1.0).unwrap();
        // h = 0.9 * 4 + (-2) = 1.6.
        let (h, rn) = general_step(&gains, &p, force(4.0)).unwrap();
        assert_relative_eq!(h.value(), 1.6, max_relative = 1e-14);
        assert_relative_eq!(rn.value(), 1.6, max_relative = 1e-14);

        // A small human gain pushes the next force non-positive: error, not clamp.
        let gains = GeneralInteractionParams::new(0.4, 1.0).unwrap();
        assert!(matches!(
            general_step(&gains, &p, force(4.0)),
            Err(Error::DomainExit { .. })
        ));
    }

    #[test]
    fn transition_bound_branches() {
        let unit = GeneralInteractionParams::new(1.0, 1.0).unwrap();
        assert_eq!(transition_bound(&unit, 0.0).unwrap(), 1.0);
        assert_relative_eq!(transition_bound(&unit, 0.625).unwrap(), 0.375);

        // H < K branch: bounded by R.
        let gains = GeneralInteractionParams::new(0.5, 1.0).unwrap();
        let b = transition_bound(&gains, 1.0).unwrap();
        assert_eq!(b, 0.5);
        assert!(b <= gains.robot_gain());

        assert!(transition_bound(&unit, -0.1).is_err());
        assert!(transition_bound(&unit, 1.1).is_err());
    }

    #[test]
    fn error_recursion_identity() {
        // One general step satisfies the exact error recursion
        // e' = gamma (1 - RH) + R (H - K) e; with RH = 1 the affine term
        // vanishes and the transition reduces to R(H - K).
        let p = params(1.1, -0.55);
        let g = p.implicit_equilibrium().value();
        for (hg, rg) in [(0.9, 1.0), (1.2, 0.85), (0.8, 1.25)] {
            let gains = GeneralInteractionParams::new(hg, rg).unwrap();
            for x in [0.4, 0.9, 1.3, 2.5] {
                let r = force(x * g);
                let e = g - r.value();
                let k = variable_gain(&p, r);
                let Ok((_, r_next)) = general_step(&gains, &p, r) else {
                    continue;
                };
                let e_next = g - r_next.value();
                let predicted = g * (1.0 - rg * hg) + rg * (hg - k) * e;
                assert_relative_eq!(e_next, predicted, max_relative = 1e-10);
                if (rg * hg - 1.0).abs() < 1e-12 {
                    assert_relative_eq!(e_next, rg * (hg - k) * e, max_relative = 1e-10);
                }
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_params() -> impl Strategy<Value = BiasParameters<f64>> {
            (0.5f64..2.0, -1.9f64..-0.05).prop_map(|(a, b)| BiasParameters::new(a, b).unwrap())
        }

        proptest! {
            // |ln(r[k+1]/gamma)| = |1+beta| |ln(r[k]/gamma)| for the whole map.
            #[test]
            fn log_space_contraction(p in arb_params(), x in 0.01f64..100.0) {
                let g = p.implicit_equilibrium().value();
                let r = ForceLevel::new(x * g).unwrap();
                let before = (r.value() / g).ln();
                prop_assume!(before.abs() > 1e-6);
                let after = (step(&p, r).value() / g).ln();
                let factor = (1.0 + p.beta()).abs();
                prop_assert!((after.abs() - factor * before.abs()).abs() < 1e-9 * before.abs().max(1.0));
            }

            // gamma is a fixed point for every valid parameter set.
            #[test]
            fn equilibrium_fixed_point(p in arb_params()) {
                let g = p.implicit_equilibrium();
                let next = step(&p, g).value();
                prop_assert!((next - g.value()).abs() <= 1e-12 * g.value());
            }

            // Eq-26-style bound: |R(H-K)| <= RH if K <= H, else <= R.
            #[test]
            fn transition_bound_is_bounded(
                h in 0.05f64..3.0,
                r in 0.05f64..3.0,
                k in 0.0f64..=1.0,
            ) {
                let gains = GeneralInteractionParams::new(h, r).unwrap();
                let b = transition_bound(&gains, k).unwrap();
                if k <= h {
                    prop_assert!(b <= r * h + 1e-12);
                } else {
                    prop_assert!(b <= r + 1e-12);
                }
            }

            // u = K(r)(gamma - r) away from the equilibrium.
            #[test]
            fn implicit_input_matches_gain_form(p in arb_params(), x in 0.01f64..100.0) {
                let g = p.implicit_equilibrium().value();
                let r = ForceLevel::new(x * g).unwrap();
                prop_assume!(r.value() != g);
                let u = implicit_input(&p, r);
                let via = variable_gain(&p, r) * (g - r.value());
                prop_assert!((u - via).abs() <= 1e-12 * u.abs().max(via.abs()).max(1e-30));
            }

            // The exact affine error recursion holds for every valid step.
            #[test]
            fn general_error_recursion(
                p in arb_params(),
                hg in 0.5f64..1.5,
                rg in 0.5f64..1.5,
                x in 0.1f64..10.0,
            ) {
                let gains = GeneralInteractionParams::new(hg, rg).unwrap();
                let g = p.implicit_equilibrium().value();
                let r = ForceLevel::new(x * g).unwrap();
                prop_assume!(r.value() != g);
                if let Ok((_, r_next)) = general_step(&gains, &p, r) {
                    let e = g - r.value();
                    let e_next = g - r_next.value();
                    let predicted = g * (1.0 - rg * hg) + rg * (hg - variable_gain(&p, r)) * e;
                    let scale = e_next.abs().max(predicted.abs()).max(g * 1e-12);
                    prop_assert!((e_next - predicted).abs() <= 1e-9 * scale);
                }
            }
        }
    }
}
