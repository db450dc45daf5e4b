//! Nonlinear least-squares fit of the reproduction model.
//!
//! The transfer model casts one reproduction as a ratio,
//! `h/r = alpha * r^beta`, and the fit minimizes
//!
//! ```text
//! sum_i (h_i/r_i - alpha * r_i^beta)^2
//! ```
//!
//! over `alpha > 0`, `beta < 0`. Internally the parameters are
//! `(ln alpha, beta)`, which keeps `alpha` positive without constraints;
//! `beta` is clipped to `[-10, -1e-6]` and a fit that ends pinned at either
//! end is reported as not converged. The starting point is the ordinary
//! least-squares line through `(ln r, ln h/r)`, the exact solution of the
//! log-space problem.

use serde::Serialize;

use crate::bias_model::{BiasParameters, ForceLevel};
use crate::error::{Error, Result};
use crate::float::Float;

/// One stimulus/response pair from a force-reproduction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproductionTrial<T> {
    /// Force presented by the robot (`r`).
    pub stimulus: ForceLevel<T>,
    /// Force reproduced by the human (`h`).
    pub response: ForceLevel<T>,
}

impl<T: Float> ReproductionTrial<T> {
    pub fn new(stimulus: ForceLevel<T>, response: ForceLevel<T>) -> Self {
        Self { stimulus, response }
    }

    /// The observed reproduction ratio `h/r`.
    pub fn ratio(&self) -> T {
        self.response.value() / self.stimulus.value()
    }
}

/// Result of a power-law fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub params: BiasParameters<T>,
    /// Root mean square of the ratio residuals.
    pub rmse: T,
    pub n_trials: usize,
    /// False when the iteration cap was hit or `beta` ended on a clip
    /// boundary (flat or otherwise unidentifiable data).
    pub converged: bool,
    /// Accepted Gauss-Newton iterations.
    pub iterations: usize,
}

const BETA_MIN: f64 = -10.0;
const BETA_MAX: f64 = -1e-6;
const MAX_ITERATIONS: usize = 500;
const OBJECTIVE_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-10;

fn objective<T: Float>(trials: &[ReproductionTrial<T>], ln_alpha: T, beta: T) -> T {
    trials
        .iter()
        .map(|t| {
            let m = (ln_alpha + beta * t.stimulus.value().ln()).exp();
            let e = t.ratio() - m;
            e * e
        })
        .sum()
}

fn validate<T: Float>(trials: &[ReproductionTrial<T>]) -> Result<()> {
    if trials.len() < 3 {
        return Err(Error::InsufficientData {
            what: "trials",
            needed: 3,
            got: trials.len(),
        });
    }
    let first = trials[0].stimulus.value();
    if trials.iter().all(|t| t.stimulus.value() == first) {
        return Err(Error::DegenerateData(
            "a single stimulus level cannot identify beta",
        ));
    }
    Ok(())
}

/// Log-linear initialization: OLS of `ln(h/r)` on `ln r`.
fn log_linear_init<T: Float>(trials: &[ReproductionTrial<T>]) -> (T, T) {
    let n = T::of_usize(trials.len());
    let mut sx = T::zero();
    let mut sy = T::zero();
    for t in trials {
        sx += t.stimulus.value().ln();
        sy += t.ratio().ln();
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for t in trials {
        let dx = t.stimulus.value().ln() - mx;
        let dy = t.ratio().ln() - my;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    (intercept, slope)
}

/// Fits the power law with the default log-linear initialization.
pub fn fit_power_law<T: Float>(trials: &[ReproductionTrial<T>]) -> Result<FitResult<T>> {
    validate(trials)?;
    let (ln_alpha, beta) = log_linear_init(trials);
    let beta = beta.min(T::cast(BETA_MAX)).max(T::cast(BETA_MIN));
    gauss_newton(trials, ln_alpha, beta)
}

/// Fits the power law starting from existing parameters.
pub fn fit_power_law_with_init<T: Float>(
    trials: &[ReproductionTrial<T>],
    init: &BiasParameters<T>,
) -> Result<FitResult<T>> {
    validate(trials)?;
    let beta = init.beta().min(T::cast(BETA_MAX)).max(T::cast(BETA_MIN));
    gauss_newton(trials, init.alpha().ln(), beta)
}

fn gauss_newton<T: Float>(
    trials: &[ReproductionTrial<T>],
    mut ln_alpha: T,
    mut beta: T,
) -> Result<FitResult<T>> {
    let beta_min = T::cast(BETA_MIN);
    let beta_max = T::cast(BETA_MAX);
    let mut obj = objective(trials, ln_alpha, beta);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        // Residuals e_i = y_i - m_i with m_i = exp(ln_alpha) r_i^beta;
        // d m_i / d ln_alpha = m_i, d m_i / d beta = m_i ln r_i.
        let mut g11 = T::zero();
        let mut g12 = T::zero();
        let mut g22 = T::zero();
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        for t in trials {
            let lr = t.stimulus.value().ln();
            let m = (ln_alpha + beta * lr).exp();
            let e = t.ratio() - m;
            g11 += m * m;
            g12 += m * m * lr;
            g22 += m * m * lr * lr;
            b1 += e * m;
            b2 += e * m * lr;
        }
        // Gradient of the objective is -2 (b1, b2).
        let grad_norm = T::cast(2.0) * (b1 * b1 + b2 * b2).sqrt();
        if grad_norm < T::cast(GRADIENT_TOL) {
            converged = true;
            break;
        }
        let det = g11 * g22 - g12 * g12;
        if det.abs() <= T::epsilon() * g11 * g22 {
            return Err(Error::DegenerateData(
                "stimulus spread too small to identify beta",
            ));
        }
        let da = (b1 * g22 - b2 * g12) / det;
        let db = (b2 * g11 - b1 * g12) / det;

        // Step-halving line search; never accept an increase.
        let mut scale = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let la = ln_alpha + scale * da;
            let bb = (beta + scale * db).min(beta_max).max(beta_min);
            let new_obj = objective(trials, la, bb);
            if new_obj < obj {
                let decrease = obj - new_obj;
                ln_alpha = la;
                beta = bb;
                obj = new_obj;
                iterations += 1;
                accepted = true;
                if decrease <= T::cast(OBJECTIVE_TOL) * obj.max(T::cast(1e-300)) {
                    converged = true;
                }
                break;
            }
            scale *= T::cast(0.5);
        }
        if !accepted {
            // No step at any halved scale decreases the objective: the
            // achievable relative decrease is below tolerance.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // A fit pinned to the beta clip boundary has no interior optimum.
    if beta >= beta_max || beta <= beta_min {
        converged = false;
    }

    let params = BiasParameters::new(ln_alpha.exp(), beta)?;
    let rmse = rmse(trials, &params)?;
    Ok(FitResult {
        params,
        rmse,
        n_trials: trials.len(),
        converged,
        iterations,
    })
}

/// Root mean square error of the ratio residuals:
/// `sqrt(mean((h_i/r_i - alpha r_i^beta)^2))`.
pub fn rmse<T: Float>(trials: &[ReproductionTrial<T>], params: &BiasParameters<T>) -> Result<T> {
    if trials.is_empty() {
        return Err(Error::InsufficientData {
            what: "trials",
            needed: 1,
            got: 0,
        });
    }
    let ss = trials
        .iter()
        .map(|t| {
            let e = t.ratio() - params.alpha() * t.stimulus.value().powf(params.beta());
            e * e
        })
        .sum::<T>();
    Ok((ss / T::of_usize(trials.len())).sqrt())
}

/// Divides stimuli and responses by an equilibrium point, making agents
/// with different equilibria comparable on one axis.
pub fn normalize_trials<T: Float>(
    trials: &[ReproductionTrial<T>],
    gamma: ForceLevel<T>,
) -> Vec<ReproductionTrial<T>> {
    trials
        .iter()
        .map(|t| ReproductionTrial {
            stimulus: ForceLevel::new(t.stimulus.value() / gamma.value())
                .expect("positive over positive stays positive"),
            response: ForceLevel::new(t.response.value() / gamma.value())
                .expect("positive over positive stays positive"),
        })
        .collect()
}
