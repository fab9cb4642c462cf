//! Small statistics helpers with reproducible floating-point results.

use serde::Serialize;

use crate::trajectories::{extremal_value, GammaExponent};

/// Pairwise summation with a fixed split at the midpoint. The result depends
/// only on the order of `xs`, never on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (denominator `n - 1`).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

/// Type-7 (linear interpolation) quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn sort_floats(xs: &mut [f64]) {
    xs.sort_by(f64::total_cmp);
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `sqrt(p(1-p)/n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Empirical frequency with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub count: u64,
    pub n: u64,
    pub freq: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Frequency {
    pub fn new(count: u64, n: u64) -> Self {
        let (lo, hi) = wilson_interval(count, n, 1.959_963_984_540_054);
        let freq = if n == 0 { 0.0 } else { count as f64 / n as f64 };
        Self { count, n, freq, wilson_low: lo.min(freq), wilson_high: hi.max(freq) }
    }
}

/// 1-Wasserstein distance between the empirical law of `final_values` and
/// `½δ_{-H_γ(T)} + ½δ_{H_γ(T)}`.
///
/// On the line `W₁ = ∫_0^1 |F⁻¹(u) - G⁻¹(u)| du`. Sorted sample point `i`
/// owns the quantile interval `[i/n, (i+1)/n)`; the target quantile function
/// is `-H` on `[0, ½)` and `+H` on `[½, 1)`.
pub fn wasserstein_to_limit(final_values: &[f64], gamma: GammaExponent, horizon_t: f64) -> f64 {
    assert!(!final_values.is_empty(), "need at least one sample");
    let target = extremal_value(gamma, horizon_t);
    let mut xs = final_values.to_vec();
    sort_floats(&mut xs);
    let n = xs.len() as f64;
    let terms: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            let below = (hi.min(0.5) - lo).max(0.0);
            let above = (hi - lo.max(0.5)).max(0.0);
            below * (x + target).abs() + above * (x - target).abs()
        })
        .collect();
    pairwise_sum(&terms)
}
