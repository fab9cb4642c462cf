//! Mollified absolute value `|x|_δ = ∫ ρ(u) |x - δu| du`.
//!
//! The kernel is `ρ = ψ / Z` where `ψ = 1` on `[-1/2, 1/2]`, decays to zero
//! on the shoulders `1/2 ≤ |u| ≤ 3/4` through a quintic smoothstep, and
//! vanishes beyond. `ψ` is C², which is all Itô's formula needs, and every
//! antiderivative is a polynomial, so `|x|_δ` and its two derivatives have
//! exact closed forms:
//!
//! ```text
//! |x|_δ   = δ · A(x/δ),   A(y) = ∫ ρ(u)|y - u| du
//! |x|_δ'  = 2F(x/δ) - 1,  F    = CDF of ρ
//! |x|_δ'' = 2ρ(x/δ) / δ
//! ```
//!
//! With shoulder width 1/4 the normalization is `Z = 5/4`, so the plateau
//! value is `4/5 ≥ 3/4`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const PLATEAU: f64 = 0.5;
const SHOULDER: f64 = 0.25;
const SUPPORT: f64 = PLATEAU + SHOULDER;

// ∫_0^1 S = 1/2 and ∫_0^1 v·S(v) dv = 5/14 for S(v) = 6v⁵ - 15v⁴ + 10v³.
const SMOOTHSTEP_MASS: f64 = 0.5;
const SMOOTHSTEP_FIRST_MOMENT: f64 = 5.0 / 14.0;

/// Quintic smoothstep on `[0, 1]`: `S(0)=0, S(1)=1`, first and second
/// derivatives vanish at both ends.
#[inline]
fn smoothstep(v: f64) -> f64 {
    v * v * v * (10.0 + v * (-15.0 + 6.0 * v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MollifierKernel {
    pub plateau_half_width: f64,
    pub support_half_width: f64,
    pub normalization: f64,
    /// `∫ |u| ρ(u) du`, i.e. `A(0)`.
    pub abs_moment: f64,
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::standard()
    }
}

impl MollifierKernel {
    pub const fn standard() -> Self {
        // Z = 2·(1/2 + w·(1 - ∫S))
        let z = 2.0 * (PLATEAU + SHOULDER * (1.0 - SMOOTHSTEP_MASS));
        Self {
            plateau_half_width: PLATEAU,
            support_half_width: SUPPORT,
            normalization: z,
            abs_moment: 2.0 * Self::half_moment_unnormalized(SUPPORT) / z,
        }
    }

    /// `∫_0^a ψ` for `a ≥ 0`.
    #[inline]
    const fn half_mass_unnormalized(a: f64) -> f64 {
        if a <= PLATEAU {
            a
        } else if a < SUPPORT {
            let v = (a - PLATEAU) / SHOULDER;
            PLATEAU + SHOULDER * (v - smoothstep_int(v))
        } else {
            PLATEAU + SHOULDER * (1.0 - SMOOTHSTEP_MASS)
        }
    }

    /// `∫_0^a u ψ(u) du` for `a ≥ 0`.
    #[inline]
    const fn half_moment_unnormalized(a: f64) -> f64 {
        let a = if a > SUPPORT { SUPPORT } else { a };
        if a <= PLATEAU {
            0.5 * a * a
        } else {
            let v = (a - PLATEAU) / SHOULDER;
            if a >= SUPPORT {
                0.5 * PLATEAU * PLATEAU
                    + SHOULDER
                        * (PLATEAU * (1.0 - SMOOTHSTEP_MASS)
                            + SHOULDER * (0.5 - SMOOTHSTEP_FIRST_MOMENT))
            } else {
                0.5 * PLATEAU * PLATEAU
                    + SHOULDER
                        * (PLATEAU * (v - smoothstep_int(v))
                            + SHOULDER * (0.5 * v * v - smoothstep_moment(v)))
            }
        }
    }

    /// `ρ(u)`.
    #[inline]
    pub fn density(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= PLATEAU {
            1.0 / self.normalization
        } else if a < SUPPORT {
            (1.0 - smoothstep((a - PLATEAU) / SHOULDER)) / self.normalization
        } else {
            0.0
        }
    }

    /// `F(u) = ∫_{-∞}^u ρ`.
    #[inline]
    pub fn cdf(&self, u: f64) -> f64 {
        let a = u.abs();
        if a >= SUPPORT {
            return if u > 0.0 { 1.0 } else { 0.0 };
        }
        let half = Self::half_mass_unnormalized(a) / self.normalization;
        if u >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    /// `A(y) = ∫ ρ(u)|y - u| du`, the mollified absolute value at `δ = 1`.
    #[inline]
    pub fn smoothed_abs_unit(&self, y: f64) -> f64 {
        let a = y.abs();
        if a >= SUPPORT {
            return a;
        }
        let slope = 2.0 * Self::half_mass_unnormalized(a) / self.normalization;
        a * slope + self.abs_moment - 2.0 * Self::half_moment_unnormalized(a) / self.normalization
    }

    /// `A'(y) = 2F(y) - 1`.
    #[inline]
    pub fn smoothed_abs_unit_d1(&self, y: f64) -> f64 {
        let a = y.abs();
        if a >= SUPPORT {
            return y.signum();
        }
        let s = 2.0 * Self::half_mass_unnormalized(a) / self.normalization;
        if y >= 0.0 {
            s
        } else {
            -s
        }
    }
}

/// `∫_0^v S`.
const fn smoothstep_int(v: f64) -> f64 {
    let v2 = v * v;
    v2 * v2 * (2.5 + v * (-3.0 + v))
}

/// `∫_0^v s·S(s) ds`.
const fn smoothstep_moment(v: f64) -> f64 {
    let v2 = v * v;
    v2 * v2 * v * (2.0 + v * (-2.5 + v * 6.0 / 7.0))
}

pub const STANDARD_KERNEL: MollifierKernel = MollifierKernel::standard();

#[inline]
pub fn kernel_density(u: f64) -> f64 {
    STANDARD_KERNEL.density(u)
}

#[inline]
pub fn kernel_cdf(u: f64) -> f64 {
    STANDARD_KERNEL.cdf(u)
}

/// `|x|_δ`.
#[inline]
pub fn smoothed_abs(x: f64, delta: f64) -> f64 {
    delta * STANDARD_KERNEL.smoothed_abs_unit(x / delta)
}

/// `|x|_δ' = 2F(x/δ) - 1`.
#[inline]
pub fn smoothed_abs_d1(x: f64, delta: f64) -> f64 {
    STANDARD_KERNEL.smoothed_abs_unit_d1(x / delta)
}

/// `|x|_δ'' = 2ρ(x/δ)/δ`.
#[inline]
pub fn smoothed_abs_d2(x: f64, delta: f64) -> f64 {
    2.0 * STANDARD_KERNEL.density(x / delta) / delta
}

/// `|·|_δ` bound to a fixed radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedAbs {
    pub delta: f64,
    pub kernel: MollifierKernel,
}

impl SmoothedAbs {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0, "mollification radius must be positive");
        Self { delta, kernel: STANDARD_KERNEL }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.delta * self.kernel.smoothed_abs_unit(x / self.delta)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        self.kernel.smoothed_abs_unit_d1(x / self.delta)
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        2.0 * self.kernel.density(x / self.delta) / self.delta
    }
}

/// Worst margin of each inequality over the sampled points. Every margin is
/// `bound side - checked side`, so nonnegative means the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MollifierBoundReport {
    pub delta: f64,
    pub points: usize,
    /// `δ - ||x| - |x|_δ|`
    pub gap: f64,
    /// `1 - ||x|_δ'|`
    pub slope: f64,
    /// `|x|_δ''`
    pub convexity: f64,
    /// `|x|_δ' sgn(x) - 1/2` over `|x| ≥ δ/2`
    pub signed_half: f64,
    /// `|x|_δ' sgn(x) - 1` over `|x| ≥ δ`
    pub signed_full: f64,
    /// `|x|_δ'' - 3/(4δ)` over `|x| ≤ δ/2`
    pub plateau_curvature: f64,
    /// Point where `||x| - |x|_δ|` is largest.
    pub gap_argmax: f64,
}

impl MollifierBoundReport {
    pub fn worst(&self) -> f64 {
        [
            self.gap,
            self.slope,
            self.convexity,
            self.signed_half,
            self.signed_full,
            self.plateau_curvature,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst() >= -tol
    }
}

/// Evaluates every inequality on a uniform grid over `[-2δ, 2δ]` plus the
/// same number of seeded uniform random points in that interval.
pub fn verify_mollifier_bounds(delta: f64, grid_points: usize) -> MollifierBoundReport {
    assert!(grid_points >= 100, "need at least 100 grid points");
    let sa = SmoothedAbs::new(delta);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6c6c);
    let grid = (0..grid_points).map(|i| -2.0 * delta + 4.0 * delta * i as f64 / (grid_points - 1) as f64);
    let random: Vec<f64> = (0..grid_points).map(|_| rng.random_range(-2.0 * delta..=2.0 * delta)).collect();

    let mut rep = MollifierBoundReport {
        delta,
        points: 2 * grid_points,
        gap: f64::INFINITY,
        slope: f64::INFINITY,
        convexity: f64::INFINITY,
        signed_half: f64::INFINITY,
        signed_full: f64::INFINITY,
        plateau_curvature: f64::INFINITY,
        gap_argmax: f64::NAN,
    };
    let mut largest_gap = -1.0;
    for x in grid.chain(random) {
        let v = sa.value(x);
        let d1 = sa.d1(x);
        let d2 = sa.d2(x);
        let gap = (x.abs() - v).abs();
        if gap > largest_gap {
            largest_gap = gap;
            rep.gap_argmax = x;
        }
        rep.gap = rep.gap.min(delta - gap);
        rep.slope = rep.slope.min(1.0 - d1.abs());
        rep.convexity = rep.convexity.min(d2);
        let signed = d1 * x.signum();
        if x.abs() >= 0.5 * delta {
            rep.signed_half = rep.signed_half.min(signed - 0.5);
        }
        if x.abs() >= delta {
            rep.signed_full = rep.signed_full.min(signed - 1.0);
        }
        if x.abs() <= 0.5 * delta {
            rep.plateau_curvature = rep.plateau_curvature.min(d2 - 0.75 / delta);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    // Midpoint quadrature of the unnormalized profile, independent of the
    // closed-form antiderivatives.
    fn quad<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    fn psi(u: f64) -> f64 {
        let a = u.abs();
        if a <= 0.5 {
            1.0
        } else if a < 0.75 {
            let v = (a - 0.5) / 0.25;
            1.0 - (6.0 * v.powi(5) - 15.0 * v.powi(4) + 10.0 * v.powi(3))
        } else {
            0.0
        }
    }

    #[test]
    fn normalization_matches_quadrature() {
        let z = quad(psi, -1.0, 1.0, 400_000);
        assert!((z - 1.25).abs() < 1e-10, "{z}");
        assert_eq!(STANDARD_KERNEL.normalization, 1.25);
        let mass = quad(kernel_density, -1.0, 1.0, 400_000);
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_examples() {
        assert_eq!(kernel_density(2.0), 0.0);
        assert_eq!(kernel_density(0.0), 0.8);
        assert!(kernel_density(0.0) >= 0.75);
        for &u in &[0.1, 0.49, 0.55, 0.6, 0.7, 0.74, 0.9] {
            assert_eq!(kernel_density(u), kernel_density(-u));
        }
        assert_eq!(kernel_density(0.75), 0.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(kernel_cdf(-1.0), 0.0);
        assert_eq!(kernel_cdf(1.0), 1.0);
        assert_eq!(kernel_cdf(0.0), 0.5);
        // tail per side = (Z - 1)/(2Z) = 0.1
        let f_half = kernel_cdf(0.5);
        assert!((f_half - 0.9).abs() < 1e-15);
        assert!(f_half >= 7.0 / 8.0);
        let tail = quad(kernel_density, 0.5, 1.0, 200_000);
        assert!((1.0 - f_half - tail).abs() < 1e-10);
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &u in &[-0.7, -0.6, -0.3, 0.2, 0.52, 0.66, 0.749] {
            let q = quad(kernel_density, -1.0, u, 200_000);
            assert!((kernel_cdf(u) - q).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn abs_moment_matches_quadrature() {
        let m = quad(|u| u.abs() * kernel_density(u), -1.0, 1.0, 400_000);
        assert!((STANDARD_KERNEL.abs_moment - m).abs() < 1e-10);
        assert!((STANDARD_KERNEL.abs_moment - 11.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn smoothed_abs_examples() {
        let d = 0.3;
        assert_eq!(smoothed_abs(2.0 * d, d), 2.0 * d);
        assert_eq!(smoothed_abs(-2.0 * d, d), 2.0 * d);
        let at0 = smoothed_abs(0.0, d);
        assert!(at0 > 0.0 && at0 <= d);
        assert!((at0 - d * 11.0 / 35.0).abs() < 1e-15);
        for &x in &[0.01, 0.1, 0.17, 0.2, 0.25] {
            assert_eq!(smoothed_abs(x, d), smoothed_abs(-x, d));
        }
    }

    #[test]
    fn smoothed_abs_matches_convolution() {
        let d = 0.7;
        for &x in &[-1.0, -0.5, -0.3, 0.0, 0.1, 0.33, 0.5, 0.6] {
            let conv = quad(|u| kernel_density(u) * (x - d * u).abs(), -1.0, 1.0, 400_000);
            assert!((smoothed_abs(x, d) - conv).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn d1_examples() {
        let d = 0.01;
        assert_eq!(smoothed_abs_d1(0.0, d), 0.0);
        assert_eq!(smoothed_abs_d1(d, d), 1.0);
        assert_eq!(smoothed_abs_d1(-d, d), -1.0);
        let half = smoothed_abs_d1(0.5 * d, d);
        assert!(half >= 0.75 && (half - 0.8).abs() < 1e-14);
    }

    #[test]
    fn d2_examples() {
        let d = 0.01;
        assert_eq!(smoothed_abs_d2(2.0 * d, d), 0.0);
        let at0 = smoothed_abs_d2(0.0, d);
        assert!((at0 - 2.0 / (1.25 * d)).abs() < 1e-10);
        assert!(at0 * d >= 1.5);
    }

    fn away_from_knots(y: f64) -> bool {
        [0.5, 0.75].iter().all(|k| (y.abs() - k).abs() > 1e-3)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = 1.0;
        let h = 1e-5;
        let mut y = -1.2;
        while y < 1.2 {
            if away_from_knots(y) {
                let fd1 = (smoothed_abs(y + h, d) - smoothed_abs(y - h, d)) / (2.0 * h);
                let e1 = smoothed_abs_d1(y, d);
                assert!((fd1 - e1).abs() <= 1e-6 * (1.0 + e1.abs()), "d1 at {y}: {fd1} vs {e1}");
                let fd2 = (smoothed_abs_d1(y + h, d) - smoothed_abs_d1(y - h, d)) / (2.0 * h);
                let e2 = smoothed_abs_d2(y, d);
                assert!((fd2 - e2).abs() <= 1e-6 * (1.0 + e2.abs()), "d2 at {y}: {fd2} vs {e2}");
            }
            y += 0.0137;
        }
    }

    #[test]
    fn scale_homogeneity_is_exact() {
        for &d in &[1e-6, 1e-3, 0.5, 7.0] {
            for &u in &[-0.9, -0.6, -0.2, 0.0, 0.3, 0.55, 0.8] {
                let x = u * d;
                assert_eq!(smoothed_abs(x, d), d * smoothed_abs(x / d, 1.0));
                assert_eq!(smoothed_abs_d1(x, d), smoothed_abs_d1(x / d, 1.0));
                assert_eq!(smoothed_abs_d2(x, d), smoothed_abs_d2(x / d, 1.0) / d);
            }
        }
    }

    #[test]
    fn bound_suite() {
        for &d in &[1.0, 1e-3, 1e-6] {
            let rep = verify_mollifier_bounds(d, 10_000);
            assert!(rep.holds(1e-12), "{rep:?}");
            assert!(rep.gap_argmax.abs() <= 4.0 * d / 9_999.0, "{rep:?}");
        }
    }
}
