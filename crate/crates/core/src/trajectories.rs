//! Extremal solutions of `x' = sgn(x)|x|^γ` started at the origin.
//!
//! Every solution of the unperturbed ODE has the form `±H_γ(t - t0)` with
//!
//! ```text
//! H_γ(s) = [(1 - γ) s⁺]^{1/(1-γ)}
//! ```
//!
//! This module evaluates `H_γ`, its time shifts, and the comparison
//! envelopes `t ↦ H_γ(t - R)` that bracket any nonnegative function obeying
//! `f(t) ≥ δ + ∫_{t̄}^t f^γ` (or the reverse inequality).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The drift exponent γ, restricted to `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GammaExponent(f64);

impl GammaExponent {
    pub fn new(gamma: f64) -> Result<Self> {
        if (0.0..1.0).contains(&gamma) {
            Ok(Self(gamma))
        } else {
            Err(Error::GammaOutOfRange(gamma))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for GammaExponent {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GammaExponent> for f64 {
    fn from(g: GammaExponent) -> f64 {
        g.0
    }
}

/// Time shift `R` of an envelope `t ↦ H_γ(t - R)`. May be negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnvelopeShift {
    pub r: f64,
}

impl EnvelopeShift {
    pub const ZERO: Self = Self { r: 0.0 };

    pub fn new(r: f64) -> Self {
        Self { r }
    }
}

/// `H_γ(s) = [(1-γ) s⁺]^{1/(1-γ)}`.
#[inline]
pub fn extremal_value(gamma: GammaExponent, s: f64) -> f64 {
    let g = gamma.value();
    let s = s.max(0.0);
    if g == 0.0 {
        return s;
    }
    ((1.0 - g) * s).powf(1.0 / (1.0 - g))
}

/// `sign · H_γ(t - t0)`; `sign` is `+1` or `-1`.
#[inline]
pub fn extremal_shifted(gamma: GammaExponent, t: f64, t0: f64, sign: f64) -> f64 {
    sign.signum() * extremal_value(gamma, t - t0)
}

/// Shift `R(t̄, δ) = t̄ - δ^{1-γ}/(1-γ)`, the unique `R` for which
/// `t ↦ H_γ(t - R)` solves `x(t) = δ + ∫_{t̄}^t x^γ ds`.
///
/// Panics in debug builds if `delta <= 0`.
pub fn shift_r(gamma: GammaExponent, t_bar: f64, delta: f64) -> EnvelopeShift {
    debug_assert!(delta > 0.0, "shift_r needs delta > 0");
    let g = gamma.value();
    EnvelopeShift::new(t_bar - delta.powf(1.0 - g) / (1.0 - g))
}

/// The shift with exponent `1 + γ` instead of `1 - γ`. Kept only so reports
/// can show how far it is from [`shift_r`]; it does not anchor the envelope.
pub fn shift_r_alt_exponent(gamma: GammaExponent, t_bar: f64, delta: f64) -> EnvelopeShift {
    let g = gamma.value();
    EnvelopeShift::new(t_bar - delta.powf(1.0 + g) / (1.0 - g))
}

#[inline]
pub fn envelope_value(gamma: GammaExponent, shift: EnvelopeShift, t: f64) -> f64 {
    extremal_value(gamma, t - shift.r)
}

/// Allowed `|H_γ(t̄ - r) - δ|`: relative `1e-12` plus the error of storing
/// `r` in `f64`. When `δ^{1-γ}/(1-γ) ≪ t̄` the difference `t̄ - r` cancels and
/// its rounding, amplified by `H' = H^γ = δ^γ`, dominates.
pub fn anchoring_tolerance(gamma: GammaExponent, t_bar: f64, shift: EnvelopeShift, delta: f64) -> f64 {
    let scale = t_bar.abs().max(shift.r.abs());
    1e-12 * delta + 2.0 * f64::EPSILON * scale * delta.powf(gamma.value())
}

/// Which of the two integral inequalities a sample satisfies at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Inequality {
    Both,
    Lower,
    Upper,
    Neither,
}

impl Inequality {
    pub fn satisfies_lower(self) -> bool {
        matches!(self, Self::Both | Self::Lower)
    }

    pub fn satisfies_upper(self) -> bool {
        matches!(self, Self::Both | Self::Upper)
    }
}

/// Result of checking `f(t) ≥ δ + ∫_{t̄}^t f^γ` (lower) and `≤` (upper) on a grid.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Quadrature tolerance, `step · (max f^γ + TV(f^γ))`.
    pub tolerance: f64,
    /// `f(t_k) - δ - I_k` where `I_k` is the trapezoid integral up to `t_k`.
    pub residuals: Vec<f64>,
    pub verdicts: Vec<Inequality>,
}

impl ComparisonReport {
    pub fn all_lower(&self) -> bool {
        self.verdicts.iter().all(|v| v.satisfies_lower())
    }

    pub fn all_upper(&self) -> bool {
        self.verdicts.iter().all(|v| v.satisfies_upper())
    }
}

/// Brute-force check of the comparison inequalities for a function sampled
/// on the uniform grid `t_k = t̄ + k·step`.
///
/// The running integral of `f^γ` is accumulated with the trapezoid rule. Its
/// error on a grid of step `h` is at most `h·TV(f^γ)/2` for piecewise-monotone
/// integrands, and the piecewise-linear interpolant can leave the inequality
/// between nodes by at most `h·max f^γ`; the tolerance is the sum of both
/// with the constant rounded up.
pub fn comparison_oracle(
    gamma: GammaExponent,
    delta: f64,
    step: f64,
    f: &[f64],
) -> Result<ComparisonReport> {
    if f.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
    }
    if let Some(i) = f.iter().position(|&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeSample(i));
    }

    let g = gamma.value();
    let pow: Vec<f64> = f.iter().map(|&v| if g == 0.0 { 1.0 } else { v.powf(g) }).collect();
    let max_pow = pow.iter().copied().fold(0.0, f64::max);
    let tv: f64 = pow.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let tolerance = step * (max_pow + tv);

    let mut integral = 0.0;
    let mut residuals = Vec::with_capacity(f.len());
    let mut verdicts = Vec::with_capacity(f.len());
    for k in 0..f.len() {
        if k > 0 {
            integral += 0.5 * step * (pow[k - 1] + pow[k]);
        }
        let res = f[k] - delta - integral;
        let lower = res >= -tolerance;
        let upper = res <= tolerance;
        residuals.push(res);
        verdicts.push(match (lower, upper) {
            (true, true) => Inequality::Both,
            (true, false) => Inequality::Lower,
            (false, true) => Inequality::Upper,
            (false, false) => Inequality::Neither,
        });
    }

    Ok(ComparisonReport { tolerance, residuals, verdicts })
}
