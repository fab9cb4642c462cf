//! Explicit constants of the selection theorem.
//!
//! For `γ = 0`: `η = h = ε^a`, `t̄ = 2h`, `α = 2ε^{2(1-a)}T`.
//!
//! For `γ ∈ (0,1)` and `a ∈ (2γ/(1+γ), 1)`:
//!
//! ```text
//! δ  = c₁ ε^{2/(1+γ)},  c₁ = 2^{(γ-2)/(1+γ)}
//! t̄  = 2^{γ+1} (2δ + 2ε^a) / δ^γ
//! R₋ = R(t̄, δ),  R₊ = R(0, ε^a),  R(t̄, δ) = t̄ - δ^{1-γ}/(1-γ)
//! h  = max_{t ≤ T} { |H(t) - H(t - R₋)|, |H(t) - H(t - R₊)| }
//! α  = 2T ε^{2(1-a)}
//! ```
//!
//! Parameter sets where `t̄ > T`, `α ≥ 1` or `h ≥ H_γ(T)` are reported as
//! vacuous rather than rejected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sde::SimConfig;
use crate::trajectories::{extremal_value, shift_r, shift_r_alt_exponent, EnvelopeShift, GammaExponent};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremParams {
    pub gamma: GammaExponent,
    pub epsilon: f64,
    #[serde(rename = "a")]
    pub a_exponent: f64,
    #[serde(rename = "T")]
    pub horizon_t: f64,
    /// Deviation threshold `ε^a`.
    pub eta: f64,
    /// Mollification radius; 0 when `γ = 0`.
    pub delta: f64,
    /// Balance constant, `None` when `γ = 0`.
    pub c1: Option<f64>,
    pub t_bar: f64,
    pub alpha: f64,
    /// `2T ε^{2-a}`, the competing form for `γ > 0`; equals `alpha` when `γ = 0`.
    pub alpha_paper_variant: f64,
    pub h: f64,
    pub r_lower: EnvelopeShift,
    pub r_upper: EnvelopeShift,
    /// `R(t̄, δ)` with exponent `1 + γ` in place of `1 - γ`; `r_lower` when `γ = 0`.
    pub r_lower_alt_exponent: EnvelopeShift,
    pub informative_t_bar: bool,
    pub informative_alpha: bool,
    pub informative_h: bool,
    pub discrepancies: Vec<String>,
}

impl TheoremParams {
    pub fn informative(&self) -> bool {
        self.informative_t_bar && self.informative_alpha && self.informative_h
    }

    /// Drift lower bound rate `δ^γ / 2^{γ+1}` of the mollified running inequality.
    pub fn running_bound_rate(&self) -> f64 {
        let g = self.gamma.value();
        self.delta.powf(g) / 2f64.powf(g + 1.0)
    }

    /// Level `|X|` must reach for a path to count as having left the origin
    /// in the empirical selection-time diagnostic: `2δ` for `γ > 0`, `h` for `γ = 0`.
    pub fn selection_level(&self) -> f64 {
        if self.gamma.is_zero() {
            self.h
        } else {
            2.0 * self.delta
        }
    }

    pub fn lower_envelope(&self, t: f64) -> f64 {
        extremal_value(self.gamma, t - self.r_lower.r)
    }

    pub fn upper_envelope(&self, t: f64) -> f64 {
        extremal_value(self.gamma, t - self.r_upper.r)
    }

    /// Flat `key=value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("gamma", self.gamma.value().to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("a", self.a_exponent.to_string());
        kv("T", self.horizon_t.to_string());
        kv("eta", self.eta.to_string());
        kv("delta", self.delta.to_string());
        kv("c1", opt(self.c1));
        kv("t_bar", self.t_bar.to_string());
        kv("alpha", self.alpha.to_string());
        kv("alpha_paper_variant", self.alpha_paper_variant.to_string());
        kv("h", self.h.to_string());
        kv("r_lower", self.r_lower.r.to_string());
        kv("r_upper", self.r_upper.r.to_string());
        kv("r_lower_alt_exponent", self.r_lower_alt_exponent.r.to_string());
        kv("informative_t_bar", self.informative_t_bar.to_string());
        kv("informative_alpha", self.informative_alpha.to_string());
        kv("informative_h", self.informative_h.to_string());
        for d in &self.discrepancies {
            kv("discrepancy", d.clone());
        }
        s
    }
}

/// Union bound `2ε²T/η²` with `η = ε^a` on the two deviation events.
pub fn doob_event_bound(epsilon: f64, a_exponent: f64, horizon_t: f64) -> f64 {
    2.0 * horizon_t * epsilon.powf(2.0 * (1.0 - a_exponent))
}

/// Closed-form `δ = 2^{(γ-2)/(1+γ)} ε^{2/(1+γ)}` balancing
/// `3ε²/(8δ) - δ^γ/2^γ = δ^γ/2^{γ+1}`.
pub fn balance_delta(gamma: GammaExponent, epsilon: f64) -> (f64, f64) {
    let g = gamma.value();
    let c1 = 2f64.powf((g - 2.0) / (1.0 + g));
    (c1, c1 * epsilon.powf(2.0 / (1.0 + g)))
}

/// `max_{0≤t≤T}` of the two envelope gaps. Both gaps are nondecreasing in
/// `t` because `H_γ` is convex and nondecreasing, so the maximum sits at `T`.
pub fn tube_halfwidth(
    gamma: GammaExponent,
    r_lower: EnvelopeShift,
    r_upper: EnvelopeShift,
    horizon_t: f64,
) -> f64 {
    let ht = extremal_value(gamma, horizon_t);
    let lo = (ht - extremal_value(gamma, horizon_t - r_lower.r)).abs();
    let hi = (ht - extremal_value(gamma, horizon_t - r_upper.r)).abs();
    lo.max(hi)
}

fn check_common(epsilon: f64, horizon_t: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(horizon_t > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon and T must be positive, got epsilon={epsilon}, T={horizon_t}"
        )));
    }
    Ok(())
}

pub fn params_gamma0(epsilon: f64, a_exponent: f64, horizon_t: f64) -> Result<TheoremParams> {
    check_common(epsilon, horizon_t)?;
    if !(a_exponent > 0.0 && a_exponent < 1.0) {
        return Err(Error::ExponentOutOfRange { a: a_exponent, lo: 0.0 });
    }
    let gamma = GammaExponent::new(0.0)?;
    let h = epsilon.powf(a_exponent);
    let t_bar = 2.0 * h;
    let alpha = doob_event_bound(epsilon, a_exponent, horizon_t);
    // tube | |X_t| - t | ≤ h written as envelopes t - h ≤ |X_t| ≤ t + h
    let r_lower = EnvelopeShift::new(h);
    let r_upper = EnvelopeShift::new(-h);
    Ok(TheoremParams {
        gamma,
        epsilon,
        a_exponent,
        horizon_t,
        eta: h,
        delta: 0.0,
        c1: None,
        t_bar,
        alpha,
        alpha_paper_variant: alpha,
        h,
        r_lower,
        r_upper,
        r_lower_alt_exponent: r_lower,
        informative_t_bar: t_bar <= horizon_t,
        informative_alpha: alpha < 1.0,
        informative_h: h < extremal_value(gamma, horizon_t),
        discrepancies: Vec::new(),
    })
}

pub fn params_gamma_pos(
    gamma: GammaExponent,
    epsilon: f64,
    a_exponent: f64,
    horizon_t: f64,
) -> Result<TheoremParams> {
    if gamma.is_zero() {
        return Err(Error::RequiresGammaPositive);
    }
    check_common(epsilon, horizon_t)?;
    let lo = SimConfig::min_a_exponent(gamma);
    if !(a_exponent > lo && a_exponent < 1.0) {
        return Err(Error::ExponentOutOfRange { a: a_exponent, lo });
    }
    let g = gamma.value();
    let eta = epsilon.powf(a_exponent);
    let (c1, delta) = balance_delta(gamma, epsilon);
    let t_bar = 2f64.powf(g + 1.0) * (2.0 * delta + 2.0 * eta) / delta.powf(g);
    let r_lower = shift_r(gamma, t_bar, delta);
    let r_upper = shift_r(gamma, 0.0, eta);
    let h = tube_halfwidth(gamma, r_lower, r_upper, horizon_t);
    let alpha = doob_event_bound(epsilon, a_exponent, horizon_t);
    let alpha_alt = 2.0 * horizon_t * epsilon.powf(2.0 - a_exponent);
    let r_alt = shift_r_alt_exponent(gamma, t_bar, delta);
    let discrepancies = vec![
        format!(
            "alpha uses 2*T*eps^(2(1-a)) = {alpha} from the Doob bound; the form 2*T*eps^(2-a) would give = {alpha_alt}"
        ),
        format!(
            "R(t_bar, delta) uses exponent 1-gamma (r_lower = {}), anchoring H(t_bar - R) = delta; exponent 1+gamma would give {}",
            r_lower.r, r_alt.r
        ),
    ];
    Ok(TheoremParams {
        gamma,
        epsilon,
        a_exponent,
        horizon_t,
        eta,
        delta,
        c1: Some(c1),
        t_bar,
        alpha,
        alpha_paper_variant: alpha_alt,
        h,
        r_lower,
        r_upper,
        r_lower_alt_exponent: r_alt,
        informative_t_bar: t_bar <= horizon_t,
        informative_alpha: alpha < 1.0,
        informative_h: h < extremal_value(gamma, horizon_t),
        discrepancies,
    })
}

pub fn params_for(
    gamma: GammaExponent,
    epsilon: f64,
    a_exponent: f64,
    horizon_t: f64,
) -> Result<TheoremParams> {
    if gamma.is_zero() {
        params_gamma0(epsilon, a_exponent, horizon_t)
    } else {
        params_gamma_pos(gamma, epsilon, a_exponent, horizon_t)
    }
}

pub fn params_for_config(config: &SimConfig) -> Result<TheoremParams> {
    params_for(config.gamma, config.epsilon, config.a_exponent, config.horizon_t)
}

/// Where the explicit constants stop being vacuous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VacuityReport {
    pub gamma: GammaExponent,
    #[serde(rename = "a")]
    pub a_exponent: f64,
    #[serde(rename = "T")]
    pub horizon_t: f64,
    /// Smallest step the caller is willing to simulate with.
    pub dt_floor: f64,
    /// Smallest `ε` whose recommended step is still `≥ dt_floor`.
    pub min_reachable_epsilon: f64,
    pub t_bar_at_min: f64,
    pub alpha_at_min: f64,
    pub informative_at_min: bool,
    /// Largest `ε` at which every informative flag holds, if any above `1e-60`.
    pub informative_epsilon_max: Option<f64>,
}

fn recommended_dt_for(gamma: GammaExponent, epsilon: f64) -> f64 {
    let delta = if gamma.is_zero() { 0.0 } else { balance_delta(gamma, epsilon).1 };
    SimConfig::recommended_dt(epsilon, delta)
}

/// Smallest `ε` for which the step-size rule still allows `dt ≥ dt_floor`.
/// The recommended step is increasing in `ε`, so this is a bisection.
pub fn min_reachable_epsilon(gamma: GammaExponent, dt_floor: f64) -> f64 {
    let (mut lo, mut hi) = (-300.0f64, 10.0f64); // log10 bracket
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if recommended_dt_for(gamma, 10f64.powf(mid)) >= dt_floor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    10f64.powf(hi)
}

pub fn vacuity_report(
    gamma: GammaExponent,
    a_exponent: f64,
    horizon_t: f64,
    dt_floor: f64,
) -> Result<VacuityReport> {
    let eps_min = min_reachable_epsilon(gamma, dt_floor);
    let at_min = params_for(gamma, eps_min, a_exponent, horizon_t)?;
    let informative_at = |e: f64| params_for(gamma, e, a_exponent, horizon_t).map(|p| p.informative());

    // scan down in log10 space for the first informative ε, then bisect
    let step = 0.01;
    let mut informative_epsilon_max = None;
    if informative_at(1.0)? {
        informative_epsilon_max = Some(1.0);
    } else {
        let mut le = -step;
        while le > -60.0 {
            if informative_at(10f64.powf(le))? {
                let (mut good, mut bad) = (le, le + step);
                for _ in 0..100 {
                    let mid = 0.5 * (good + bad);
                    if informative_at(10f64.powf(mid))? {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                informative_epsilon_max = Some(10f64.powf(good));
                break;
            }
            le -= step;
        }
    }

    Ok(VacuityReport {
        gamma,
        a_exponent,
        horizon_t,
        dt_floor,
        min_reachable_epsilon: eps_min,
        t_bar_at_min: at_min.t_bar,
        alpha_at_min: at_min.alpha,
        informative_at_min: at_min.informative(),
        informative_epsilon_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: f64) -> GammaExponent {
        GammaExponent::new(v).unwrap()
    }

    #[test]
    fn gamma0_examples() {
        let p = params_gamma0(0.01, 0.5, 1.0).unwrap();
        assert_eq!(p.h, 0.1);
        assert_eq!(p.t_bar, 0.2);
        assert_eq!(p.alpha, 0.02);
        assert!(p.informative());
        let p = params_gamma0(0.25, 0.5, 1.0).unwrap();
        assert_eq!(p.alpha, 0.5);
        assert!(p.informative_alpha);
        assert!(params_gamma0(0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn gamma0_monotone_in_epsilon() {
        let a = params_gamma0(0.1, 0.4, 2.0).unwrap();
        let b = params_gamma0(0.05, 0.4, 2.0).unwrap();
        assert!(b.h < a.h && b.t_bar < a.t_bar && b.alpha < a.alpha);
    }

    #[test]
    fn gamma_pos_examples() {
        let p = params_gamma_pos(g(0.5), 0.05, 0.8, 1.0).unwrap();
        assert!((p.c1.unwrap() - 0.5).abs() < 1e-15);
        assert!((p.delta - 9.21e-3).abs() < 5e-6, "{}", p.delta);
        let tb = 2f64.powf(1.5) * (2.0 * p.delta + 2.0 * 0.05f64.powf(0.8)) / p.delta.sqrt();
        assert!((p.t_bar - tb).abs() < 1e-12);
        assert!(p.t_bar > 1.0);
        assert!(!p.informative_t_bar);
        assert_eq!(p.discrepancies.len(), 2);
        assert!(params_gamma_pos(g(0.5), 0.05, 0.6, 1.0).is_err());
    }

    #[test]
    fn envelope_anchoring() {
        let p = params_gamma_pos(g(0.3), 0.01, 0.7, 5.0).unwrap();
        let v = p.lower_envelope(p.t_bar);
        assert!(((v - p.delta) / p.delta).abs() < 1e-12);
        let u = p.upper_envelope(0.0);
        assert!(((u - p.eta) / p.eta).abs() < 1e-12);
    }

    #[test]
    fn tube_halfwidth_examples() {
        assert_eq!(tube_halfwidth(g(0.5), EnvelopeShift::ZERO, EnvelopeShift::ZERO, 1.0), 0.0);
        let h = tube_halfwidth(g(0.0), EnvelopeShift::new(0.2), EnvelopeShift::new(-0.05), 1.0);
        assert!((h - 0.2).abs() < 1e-15);
        let h = tube_halfwidth(g(0.0), EnvelopeShift::new(0.02), EnvelopeShift::new(-0.3), 1.0);
        assert!((h - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tube_halfwidth_matches_grid_maximum() {
        for &(gamma, eps, a, t) in &[(0.3, 1e-6, 0.6, 2.0), (0.5, 1e-9, 0.8, 1.0), (0.75, 1e-12, 0.9, 3.0)] {
            let p = params_gamma_pos(g(gamma), eps, a, t).unwrap();
            let grid_max = (0..=10_000)
                .map(|k| {
                    let s = t * k as f64 / 10_000.0;
                    let hs = extremal_value(p.gamma, s);
                    (hs - extremal_value(p.gamma, s - p.r_lower.r))
                        .abs()
                        .max((hs - extremal_value(p.gamma, s - p.r_upper.r)).abs())
                })
                .fold(0.0, f64::max);
            assert!((grid_max - p.h).abs() <= 1e-12 * (1.0 + p.h), "γ={gamma}: {grid_max} vs {}", p.h);
        }
    }

    #[test]
    fn doob_examples() {
        assert!((doob_event_bound(0.1, 0.5, 1.0) - 0.2).abs() < 1e-15);
        assert!((doob_event_bound(0.1, 1.0 - 1e-12, 1.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn text_block_has_expected_lines() {
        let t = params_gamma0(0.01, 0.5, 1.0).unwrap().to_text();
        assert!(t.contains("h=0.1\n"));
        assert!(t.contains("t_bar=0.2\n"));
        assert!(t.contains("alpha=0.02\n"));
        assert!(t.contains("c1=none\n"));
    }

    #[test]
    fn reachable_epsilon_matches_step_rule() {
        let e = min_reachable_epsilon(g(0.0), 1e-6);
        assert!((e - 1e-3).abs() < 1e-12);
        let gm = g(0.5);
        let e = min_reachable_epsilon(gm, 1e-7);
        assert!((recommended_dt_for(gm, e) - 1e-7).abs() < 1e-15);
    }

    #[test]
    fn vacuity_at_fixed_a() {
        let r = vacuity_report(g(0.5), 0.8, 1.0, 1e-7).unwrap();
        assert!(!r.informative_at_min);
        assert!(r.t_bar_at_min > 1.0);
        let emax = r.informative_epsilon_max.unwrap();
        assert!(emax < r.min_reachable_epsilon);
        assert!(params_gamma_pos(g(0.5), emax * 0.999, 0.8, 1.0).unwrap().informative());
        assert!(!params_gamma_pos(g(0.5), emax * 1.001, 0.8, 1.0).unwrap().informative());
    }
}
