//! One-axis motor simulation of the interaction robot's controllers.
//!
//! The robot phase runs a force controller
//!
//! ```text
//! I_a = (J_n / K_tn) C_f (T_cmd - T_res) + I_cmp,
//! ```
//!
//! where `T_res` comes from a reaction-torque observer and `I_cmp` from a
//! disturbance observer fed by the commanded current and the twice
//! pseudo-differentiated angle:
//!
//! ```text
//! I_cmp = (1 / K_tn) * lpf_g[ K_tn I_a - J_n * pd(pd(theta)) ].
//! ```
//!
//! The human phase runs zero-command PD position control with the same
//! compensation:
//!
//! ```text
//! I_a = (J_n / K_tn) [K_p + K_v pd](0 - theta) + I_cmp.
//! ```
//!
//! All first-order filters `g/(s+g)` share one Tustin discretization with
//! exact unit DC gain; the plant integrates semi-implicit Euler at the
//! controller rate. The reaction observer is the disturbance-observer
//! structure minus a configurable friction model; it cannot separate an
//! externally applied torque from a torque disturbance injected at the
//! plant, so both appear in `T_res`.
//!
//! Gains and cutoffs are engineering choices tuned for closed-loop
//! stability at `dt = 0.1 ms`; nothing pins them physically.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bias_model::ForceLevel;
use crate::error::{Error, Result};
use crate::experiments::{reproduce_noisy, NoisyHumanConfig};
use crate::float::Float;

/// True plant parameters plus the external torque currently applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantParams<T> {
    /// True inertia `J` (kg m^2).
    pub inertia: T,
    /// True torque constant `K_t` (N m / A).
    pub torque_constant: T,
    /// Viscous friction `b` (N m s / rad).
    pub viscous_friction: T,
    /// External (human or load) torque (N m) for the current step.
    pub external_torque: T,
}

impl<T: Float> PlantParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia.is_finite() && self.inertia > T::zero()) {
            return Err(Error::InvalidConfig("plant inertia must be positive"));
        }
        if !(self.torque_constant.is_finite() && self.torque_constant > T::zero()) {
            return Err(Error::InvalidConfig("plant torque constant must be positive"));
        }
        if !(self.viscous_friction.is_finite() && self.viscous_friction >= T::zero()) {
            return Err(Error::InvalidConfig("plant friction must be non-negative"));
        }
        if !self.external_torque.is_finite() {
            return Err(Error::InvalidConfig("external torque must be finite"));
        }
        Ok(())
    }

    /// Returns a copy with the external torque replaced.
    pub fn with_external_torque(mut self, torque: T) -> Self {
        self.external_torque = torque;
        self
    }
}

/// Controller and observer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerParams<T> {
    /// Nominal inertia `J_n`.
    pub nominal_inertia: T,
    /// Nominal torque constant `K_tn`.
    pub nominal_torque_constant: T,
    /// Force gain `C_f`.
    pub force_gain: T,
    /// Position gain `K_p`.
    pub position_gain: T,
    /// Velocity gain `K_v`.
    pub velocity_gain: T,
    /// Disturbance-observer cutoff `g` (rad/s).
    pub dob_cutoff: T,
    /// Pseudo-differentiation cutoff `g_pd` (rad/s).
    pub diff_cutoff: T,
    /// Reaction-observer cutoff `g_r` (rad/s).
    pub reaction_cutoff: T,
    /// Friction model subtracted inside the reaction observer.
    pub observer_friction: T,
    /// Sample time (s), at most 1 ms.
    pub dt: T,
}

impl<T: Float> ControllerParams<T> {
    /// Stable tuning for the default plant at `dt = 0.1 ms`.
    pub fn default_tuning() -> Self {
        Self {
            nominal_inertia: T::cast(0.01),
            nominal_torque_constant: T::cast(1.0),
            force_gain: T::cast(60.0),
            position_gain: T::cast(400.0),
            velocity_gain: T::cast(40.0),
            dob_cutoff: T::cast(400.0),
            diff_cutoff: T::cast(800.0),
            reaction_cutoff: T::cast(400.0),
            observer_friction: T::cast(0.02),
            dt: T::cast(1e-4),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            self.nominal_inertia,
            self.nominal_torque_constant,
            self.force_gain,
            self.position_gain,
            self.velocity_gain,
            self.dob_cutoff,
            self.diff_cutoff,
            self.reaction_cutoff,
            self.dt,
        ];
        if positives.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(Error::InvalidConfig("controller parameters must be positive"));
        }
        if !(self.observer_friction.is_finite() && self.observer_friction >= T::zero()) {
            return Err(Error::InvalidConfig("observer friction must be non-negative"));
        }
        if self.dt > T::cast(1e-3) {
            return Err(Error::InvalidConfig("sample time must be at most 1 ms"));
        }
        Ok(())
    }
}

/// First-order low pass `g/(s+g)`, Tustin-discretized. DC gain is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct LowPass<T> {
    prev_in: T,
    prev_out: T,
}

impl<T: Float> LowPass<T> {
    fn zeroed() -> Self {
        Self {
            prev_in: T::zero(),
            prev_out: T::zero(),
        }
    }

    fn update(&mut self, x: T, cutoff: T, dt: T) -> T {
        let two = T::cast(2.0);
        let gd = cutoff * dt;
        let a = gd / (two + gd);
        let c = (two - gd) / (two + gd);
        let y = a * (x + self.prev_in) + c * self.prev_out;
        self.prev_in = x;
        self.prev_out = y;
        y
    }
}

/// Pseudo-differentiator `g s/(s+g)`, realized as `g (x - lpf(x))` so it
/// shares the low-pass discretization exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct PseudoDiff<T> {
    lpf: LowPass<T>,
}

impl<T: Float> PseudoDiff<T> {
    fn zeroed() -> Self {
        Self {
            lpf: LowPass::zeroed(),
        }
    }

    fn update(&mut self, x: T, cutoff: T, dt: T) -> T {
        cutoff * (x - self.lpf.update(x, cutoff, dt))
    }
}

/// Plant and observer state of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServoState<T> {
    /// Motor angle (rad).
    pub angle: T,
    /// Motor angular velocity (rad/s).
    pub velocity: T,
    diff_velocity: PseudoDiff<T>,
    diff_accel: PseudoDiff<T>,
    lpf_dob: LowPass<T>,
    lpf_reaction: LowPass<T>,
    prev_current: T,
    steps: usize,
}

impl<T: Float> ServoState<T> {
    pub fn at_rest() -> Self {
        Self {
            angle: T::zero(),
            velocity: T::zero(),
            diff_velocity: PseudoDiff::zeroed(),
            diff_accel: PseudoDiff::zeroed(),
            lpf_dob: LowPass::zeroed(),
            lpf_reaction: LowPass::zeroed(),
            prev_current: T::zero(),
            steps: 0,
        }
    }

    pub fn with_velocity(velocity: T) -> Self {
        Self {
            velocity,
            ..Self::at_rest()
        }
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> usize {
        self.steps
    }

    /// Observer pass shared by both controllers. Uses the previous sample's
    /// current, which breaks the algebraic loop between `I_a` and `I_cmp`.
    fn observe(&mut self, ctrl: &ControllerParams<T>) -> Observers<T> {
        let dt = ctrl.dt;
        let velocity_est = self.diff_velocity.update(self.angle, ctrl.diff_cutoff, dt);
        let accel_est = self.diff_accel.update(velocity_est, ctrl.diff_cutoff, dt);
        let raw = ctrl.nominal_torque_constant * self.prev_current - ctrl.nominal_inertia * accel_est;
        let disturbance_est = self.lpf_dob.update(raw, ctrl.dob_cutoff, dt);
        let compensation_current = disturbance_est / ctrl.nominal_torque_constant;
        let lumped = self.lpf_reaction.update(raw, ctrl.reaction_cutoff, dt);
        let reaction_est = lumped - ctrl.observer_friction * velocity_est;
        Observers {
            velocity_est,
            compensation_current,
            reaction_est,
        }
    }

    fn advance_plant(&mut self, plant: &PlantParams<T>, current: T, dt: T) -> Result<()> {
        let torque = plant.torque_constant * current
            - plant.viscous_friction * self.velocity
            - plant.external_torque;
        self.velocity += dt * torque / plant.inertia;
        self.angle += dt * self.velocity;
        self.prev_current = current;
        self.steps += 1;
        if !(self.angle.is_finite() && self.velocity.is_finite()) {
            return Err(Error::NonFiniteState(self.steps));
        }
        Ok(())
    }
}

struct Observers<T> {
    velocity_est: T,
    compensation_current: T,
    reaction_est: T,
}

/// Output of one controller step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutput<T> {
    /// Commanded motor current `I_a` (A).
    pub current: T,
    /// Estimated reaction torque `T_res` (N m).
    pub reaction_torque: T,
}

/// One force-control step: torque command in, plant advanced one `dt`.
pub fn force_control_step<T: Float>(
    state: &mut ServoState<T>,
    ctrl: &ControllerParams<T>,
    plant: &PlantParams<T>,
    torque_cmd: T,
) -> Result<StepOutput<T>> {
    let obs = state.observe(ctrl);
    let current = ctrl.nominal_inertia / ctrl.nominal_torque_constant
        * ctrl.force_gain
        * (torque_cmd - obs.reaction_est)
        + obs.compensation_current;
    state.advance_plant(plant, current, ctrl.dt)?;
    Ok(StepOutput {
        current,
        reaction_torque: obs.reaction_est,
    })
}

/// One zero-command position-control step.
pub fn position_control_step<T: Float>(
    state: &mut ServoState<T>,
    ctrl: &ControllerParams<T>,
    plant: &PlantParams<T>,
) -> Result<StepOutput<T>> {
    let obs = state.observe(ctrl);
    let current = ctrl.nominal_inertia / ctrl.nominal_torque_constant
        * (ctrl.position_gain * (T::zero() - state.angle)
            + ctrl.velocity_gain * (T::zero() - obs.velocity_est))
        + obs.compensation_current;
    state.advance_plant(plant, current, ctrl.dt)?;
    Ok(StepOutput {
        current,
        reaction_torque: obs.reaction_est,
    })
}

/// Coupling between the joint and the human: a fixed lever arm maps force
/// to torque, and a passive spring-damper stands in for the limb while the
/// robot pushes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanCoupling<T> {
    /// Lever arm (m) converting contact force to joint torque.
    pub lever_arm: T,
    /// Passive limb stiffness during the robot phase (N m / rad).
    pub stiffness: T,
    /// Passive limb damping during the robot phase (N m s / rad).
    pub damping: T,
}

impl<T: Float> HumanCoupling<T> {
    /// Soft default impedance: the instruction is to perceive the force
    /// without pushing back.
    pub fn default_soft() -> Self {
        Self {
            lever_arm: T::cast(0.1),
            stiffness: T::cast(100.0),
            damping: T::cast(2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lever_arm.is_finite() && self.lever_arm > T::zero()) {
            return Err(Error::InvalidConfig("lever arm must be positive"));
        }
        if !(self.stiffness.is_finite() && self.stiffness >= T::zero())
            || !(self.damping.is_finite() && self.damping >= T::zero())
        {
            return Err(Error::InvalidConfig("impedance must be non-negative"));
        }
        Ok(())
    }
}

/// Simulates one robot/human phase pair through the servo layer.
///
/// The robot phase force-controls to `r_cmd` against the passive limb and
/// reports the mean estimated contact force over the trailing window; the
/// human phase reproduces that force (with the agent's noise) against the
/// position controller, reported the same way. Returns
/// `(r_measured, h_measured)` in force units.
#[allow(clippy::too_many_arguments)]
pub fn simulate_phase_pair<T, R>(
    ctrl: &ControllerParams<T>,
    plant: &PlantParams<T>,
    coupling: &HumanCoupling<T>,
    human: &NoisyHumanConfig<T>,
    rng: &mut R,
    r_cmd: ForceLevel<T>,
    phase_seconds: T,
    steady_window_seconds: T,
) -> Result<(T, T)>
where
    T: Float,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    ctrl.validate()?;
    plant.validate()?;
    coupling.validate()?;
    if !(steady_window_seconds > T::zero() && phase_seconds > steady_window_seconds) {
        return Err(Error::InvalidConfig(
            "phase length must exceed the positive steady window",
        ));
    }

    let steps_per_phase = (phase_seconds / ctrl.dt).round().as_f64() as usize;
    let window_steps = (steady_window_seconds / ctrl.dt).round().as_f64() as usize;
    let mut state = ServoState::at_rest();

    // Robot phase: force control against the passive limb.
    let torque_cmd = r_cmd.value() * coupling.lever_arm;
    let mut window_sum = T::zero();
    for k in 0..steps_per_phase {
        let tau_ext = coupling.stiffness * state.angle + coupling.damping * state.velocity;
        let out = force_control_step(&mut state, ctrl, &plant.with_external_torque(tau_ext), torque_cmd)?;
        if k + window_steps >= steps_per_phase {
            window_sum += out.reaction_torque;
        }
    }
    let r_measured = window_sum / T::of_usize(window_steps) / coupling.lever_arm;
    let r_level = ForceLevel::new(r_measured)?;

    // Human phase: the agent reproduces the measured force and applies it
    // while the robot holds position.
    let applied = reproduce_noisy(human, r_level, rng).value() * coupling.lever_arm;
    let mut window_sum = T::zero();
    for k in 0..steps_per_phase {
        let out = position_control_step(&mut state, ctrl, &plant.with_external_torque(applied))?;
        if k + window_steps >= steps_per_phase {
            window_sum += out.reaction_torque;
        }
    }
    let h_measured = window_sum / T::of_usize(window_steps) / coupling.lever_arm;
    Ok((r_measured, h_measured))
}
