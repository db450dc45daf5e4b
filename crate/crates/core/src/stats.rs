//! One-sided hypothesis tests and the outlier rule used by the analysis
//! pipeline.
//!
//! Everything reduces to the Student t CDF, computed through the
//! regularized incomplete beta function. All tests are one-sided; the
//! caller picks the alternative through [`Direction`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::float::Float;

/// Default significance level for every test in the pipeline.
pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

/// The alternative hypothesis of a one-sided test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// H1: the (difference of) means is below the null value.
    Less,
    /// H1: the (difference of) means is above the null value.
    Greater,
}

/// Outcome of a one-sided t test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult<T> {
    /// The t statistic.
    pub statistic: T,
    /// Degrees of freedom (non-integer for Welch).
    pub dof: T,
    /// One-sided p-value in `[0, 1]`.
    pub p_value: T,
    /// The alternative that was tested.
    pub direction: Direction,
}

impl<T: Float> TestResult<T> {
    /// Whether the null is rejected at the given significance level.
    pub fn significant_at(&self, significance: T) -> bool {
        self.p_value < significance
    }
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-13 in f64.
const LANCZOS: [f64; 8] = [
    676.5203681218851,
    -1259.1392167224028,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507343278686905,
    -0.13857109526572012,
    9.984_369_578_019_572e-6,
    1.5056327351493116e-7,
];

/// Natural log of the gamma function for `z > 0`.
pub fn ln_gamma<T: Float>(z: T) -> T {
    let half = T::cast(0.5);
    if z < half {
        // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
        let pi = T::cast(core::f64::consts::PI);
        return (pi / (pi * z).sin()).ln() - ln_gamma(T::one() - z);
    }
    let z = z - T::one();
    let mut x = T::cast(0.999_999_999_999_809_9);
    for (i, &c) in LANCZOS.iter().enumerate() {
        x += T::cast(c) / (z + T::of_usize(i + 1));
    }
    let t = z + T::cast(7.5);
    T::cast(0.918_938_533_204_672_7) // 0.5 ln(2 pi)
        + (z + half) * t.ln()
        - t
        + x.ln()
}

/// Continued-fraction kernel of the incomplete beta function
/// (modified Lentz algorithm).
fn beta_cf<T: Float>(a: T, b: T, x: T) -> T {
    let tiny = T::cast(1e-300);
    let eps = T::epsilon();
    let one = T::one();
    let two = T::cast(2.0);

    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=300 {
        let m_t = T::of_usize(m);
        let m2 = two * m_t;
        // Even step.
        let aa = m_t * (b - m_t) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;
        // Odd step.
        let aa = -(a + m_t) * (qab + m_t) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).abs() < eps {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`.
pub fn beta_reg<T: Float>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (T::one() - x).ln();
    let front = ln_front.exp();
    // Continued fraction converges fast on one side of the mean; use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) for the other.
    if x < (a + T::one()) / (a + b + T::cast(2.0)) {
        front * beta_cf(a, b, x) / a
    } else {
        T::one() - front * beta_cf(b, a, T::one() - x) / b
    }
}

/// Student t cumulative distribution function.
///
/// `P(T <= t)` for `dof > 0` degrees of freedom, via
/// `I_x(dof/2, 1/2)` with `x = dof / (dof + t^2)`.
pub fn t_cdf<T: Float>(t: T, dof: T) -> T {
    debug_assert!(dof > T::zero(), "degrees of freedom must be positive");
    if t == T::zero() {
        return T::cast(0.5);
    }
    let x = dof / (dof + t * t);
    let half_tail = T::cast(0.5) * beta_reg(T::cast(0.5) * dof, T::cast(0.5), x);
    if t < T::zero() {
        half_tail
    } else {
        T::one() - half_tail
    }
}

fn one_sided_p<T: Float>(t: T, dof: T, direction: Direction) -> T {
    match direction {
        Direction::Less => t_cdf(t, dof),
        Direction::Greater => T::one() - t_cdf(t, dof),
    }
}

// ---------------------------------------------------------------------------
// Sample statistics
// ---------------------------------------------------------------------------

pub(crate) fn mean<T: Float>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
}

/// Unbiased (n-1) sample variance.
pub(crate) fn sample_variance<T: Float>(xs: &[T], mean: T) -> T {
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>();
    ss / T::of_usize(xs.len() - 1)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

/// One-sample one-sided t test of H0: `mean >= 0` against H1: `mean < 0`.
///
/// This is the stability test applied to evaluation values: a significantly
/// negative mean certifies the contraction condition at that force level.
pub fn one_sample_t_less<T: Float>(samples: &[T]) -> Result<TestResult<T>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            what: "samples",
            needed: 2,
            got: samples.len(),
        });
    }
    let n = T::of_usize(samples.len());
    let m = mean(samples);
    let var = sample_variance(samples, m);
    if var <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    let t = m / (var / n).sqrt();
    let dof = n - T::one();
    Ok(TestResult {
        statistic: t,
        dof,
        p_value: one_sided_p(t, dof, Direction::Less),
        direction: Direction::Less,
    })
}

/// One-sided paired t test on the differences `x - y`.
///
/// Used to compare initial against final normalized errors per interaction
/// group: `Greater` asks whether the error shrank, `Less` whether it grew.
pub fn paired_t_one_sided<T: Float>(
    x: &[T],
    y: &[T],
    direction: Direction,
) -> Result<TestResult<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            what: "pairs",
            needed: 2,
            got: x.len(),
        });
    }
    let diffs: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let n = T::of_usize(diffs.len());
    let m = mean(&diffs);
    let var = sample_variance(&diffs, m);
    if var <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    let t = m / (var / n).sqrt();
    let dof = n - T::one();
    Ok(TestResult {
        statistic: t,
        dof,
        p_value: one_sided_p(t, dof, direction),
        direction,
    })
}

/// One-sided Welch t test for two samples with unequal variances.
pub fn welch_t_one_sided<T: Float>(
    x: &[T],
    y: &[T],
    direction: Direction,
) -> Result<TestResult<T>> {
    for (s, name) in [(x, "first-sample values"), (y, "second-sample values")] {
        if s.len() < 2 {
            return Err(Error::InsufficientData {
                what: name,
                needed: 2,
                got: s.len(),
            });
        }
    }
    let mx = mean(x);
    let my = mean(y);
    welch_from_moments(
        mx,
        sample_variance(x, mx),
        x.len(),
        my,
        sample_variance(y, my),
        y.len(),
        direction,
    )
}

/// Welch test from summary statistics `(mean, SD, n)`.
///
/// Needed when only summary statistics are available for a sample.
pub fn welch_t_from_summary<T: Float>(
    mean_x: T,
    sd_x: T,
    n_x: usize,
    mean_y: T,
    sd_y: T,
    n_y: usize,
    direction: Direction,
) -> Result<TestResult<T>> {
    if n_x < 2 || n_y < 2 {
        return Err(Error::InsufficientData {
            what: "observations per sample",
            needed: 2,
            got: n_x.min(n_y),
        });
    }
    welch_from_moments(mean_x, sd_x * sd_x, n_x, mean_y, sd_y * sd_y, n_y, direction)
}

fn welch_from_moments<T: Float>(
    mean_x: T,
    var_x: T,
    n_x: usize,
    mean_y: T,
    var_y: T,
    n_y: usize,
    direction: Direction,
) -> Result<TestResult<T>> {
    let vx = var_x / T::of_usize(n_x);
    let vy = var_y / T::of_usize(n_y);
    let pooled = vx + vy;
    if pooled <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    let t = (mean_x - mean_y) / pooled.sqrt();
    // Welch-Satterthwaite degrees of freedom.
    let dof = pooled * pooled
        / (vx * vx / T::of_usize(n_x - 1) + vy * vy / T::of_usize(n_y - 1));
    Ok(TestResult {
        statistic: t,
        dof,
        p_value: one_sided_p(t, dof, direction),
        direction,
    })
}

/// Flags participants whose mean final error is an outlier.
///
/// A participant is flagged when their mean exceeds the other participants'
/// mean plus ten times the others' sample SD (strict inequality, leave-one-out).
/// Returns the flagged indices in ascending order.
pub fn outlier_flag<T: Float>(final_errors_by_participant: &[Vec<T>]) -> Result<Vec<usize>> {
    let n = final_errors_by_participant.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "participants",
            needed: 3,
            got: n,
        });
    }
    let mut means = Vec::with_capacity(n);
    for errors in final_errors_by_participant {
        if errors.is_empty() {
            return Err(Error::InsufficientData {
                what: "final errors per participant",
                needed: 1,
                got: 0,
            });
        }
        means.push(mean(errors));
    }
    let ten = T::cast(10.0);
    let mut flagged = Vec::new();
    for i in 0..n {
        let others: Vec<T> = means
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &m)| m)
            .collect();
        let om = mean(&others);
        let osd = sample_variance(&others, om).sqrt();
        if means[i] > om + ten * osd {
            flagged.push(i);
        }
    }
    Ok(flagged)
}
