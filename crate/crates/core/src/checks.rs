//! Assertion suites behind the `selftest` and `verify` commands.
//!
//! `selftest` runs only deterministic oracles (mollifier inequalities,
//! comparison envelopes, the balance equation, degenerate Tanaka paths).
//! `verify` adds Monte Carlo: a quantitative suite for `γ = 0` and a
//! property suite for `γ > 0`, one of them on the requested configuration
//! and the other on a companion configuration sharing `ε`, `T` and the seed.

use serde::Serialize;

use crate::bounds::{balance_delta, vacuity_report, VacuityReport};
use crate::error::Result;
use crate::experiments::{
    event_frequency_check, run_experiment, sweep_dt, EventBoundCheck, ExperimentOptions, ExperimentReport,
};
use crate::mollifier::verify_mollifier_bounds;
use crate::sde::{simulate_path_with, tanaka_residual, PathOptions, SimConfig};
use crate::stats::binomial_sigma;
use crate::trajectories::{
    anchoring_tolerance, comparison_oracle, envelope_value, extremal_value, shift_r, GammaExponent,
};

pub const VERIFY_SCHEMA_VERSION: u32 = 1;

/// Companion exponents used when the requested configuration has the other
/// regime of `γ`.
pub const COMPANION_GAMMA: f64 = 0.5;
pub const COMPANION_A_POSITIVE: f64 = 0.8;
pub const COMPANION_A_ZERO: f64 = 0.5;
/// Smallest step considered reachable when reporting vacuity.
pub const DT_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    /// Observed quantity and the limit it was compared with.
    pub value: f64,
    pub limit: f64,
}

impl Assertion {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value <= limit, value, limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value >= limit, value, limit }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), passed: ok, value: f64::from(u8::from(ok)), limit: 1.0 }
    }
}

fn all_passed(a: &[Assertion]) -> bool {
    a.iter().all(|x| x.passed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

/// Root of `3ε²/(8δ) - δ^γ/2^γ - δ^γ/2^{γ+1}` by bisection on `log δ`. The
/// left side is strictly decreasing in `δ`, so the root is unique.
pub fn balance_delta_by_bisection(gamma: GammaExponent, epsilon: f64) -> f64 {
    let g = gamma.value();
    let f = |d: f64| 3.0 * epsilon * epsilon / (8.0 * d) - d.powf(g) / 2f64.powf(g) - d.powf(g) / 2f64.powf(g + 1.0);
    let (mut lo, mut hi) = (-700.0f64, 700.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

pub fn selftest() -> SelftestReport {
    let mut out = Vec::new();

    for delta in [1.0, 1e-3, 1e-6] {
        let r = verify_mollifier_bounds(delta, 10_000);
        out.push(Assertion::at_least(&format!("mollifier_bounds_delta_{delta:e}"), r.worst(), -1e-12));
    }

    for gamma in [0.0, 0.3, 0.5, 0.8] {
        let g = GammaExponent::new(gamma).expect("fixed exponent");
        let (t_bar, delta, step) = (0.3, 0.05, 1e-3);
        let r = shift_r(g, t_bar, delta);
        let anchor = (envelope_value(g, r, t_bar) - delta).abs();
        out.push(Assertion::at_most(
            &format!("envelope_anchoring_gamma_{gamma}"),
            anchor,
            anchoring_tolerance(g, t_bar, r, delta),
        ));
        let ts: Vec<f64> = (0..=2000).map(|k| t_bar + k as f64 * step).collect();
        let exact: Vec<f64> = ts.iter().map(|&t| envelope_value(g, r, t)).collect();
        let doubled: Vec<f64> = ts.iter().map(|&t| 2.0 * extremal_value(g, t - r.r) + delta).collect();
        let flat = vec![delta; ts.len()];
        let ok_exact = comparison_oracle(g, delta, step, &exact).map(|c| c.all_lower() && c.all_upper());
        let ok_doubled = comparison_oracle(g, delta, step, &doubled).map(|c| c.all_lower());
        let flat_fails = comparison_oracle(g, delta, step, &flat).map(|c| !c.all_lower());
        out.push(Assertion::flag(&format!("comparison_envelope_gamma_{gamma}"), ok_exact == Ok(true)));
        out.push(Assertion::flag(&format!("comparison_lower_solution_gamma_{gamma}"), ok_doubled == Ok(true)));
        out.push(Assertion::flag(&format!("comparison_rejects_constant_gamma_{gamma}"), flat_fails == Ok(true)));
    }

    let mut worst_rel: f64 = 0.0;
    for gamma in [0.1, 0.25, 0.5, 0.75, 0.9] {
        for eps in [1e-4, 1e-2, 0.3] {
            let g = GammaExponent::new(gamma).expect("fixed exponent");
            let closed = balance_delta(g, eps).1;
            worst_rel = worst_rel.max(((closed - balance_delta_by_bisection(g, eps)) / closed).abs());
        }
    }
    out.push(Assertion::at_most("balance_closed_form_vs_bisection", worst_rel, 1e-12));

    // ε = 0: from 0 the scheme stays at 0; from x0 > 0 the residual is |x0|
    let cfg = SimConfig {
        gamma: GammaExponent::new(0.0).expect("zero"),
        epsilon: 0.0,
        a_exponent: 0.5,
        horizon_t: 1.0,
        dt: 1.0 / 1024.0,
        n_paths: 1,
        master_seed: 0,
    };
    for x0 in [0.0, 0.25] {
        let dev = simulate_path_with(&cfg, 0.0, 0, PathOptions { x0, ..Default::default() })
            .and_then(|p| tanaka_residual(&p, &cfg))
            .map(|l| l.iter().map(|v| (v - x0).abs()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY);
        out.push(Assertion::at_most(&format!("tanaka_degenerate_x0_{x0}"), dev, 1e-12));
    }

    let passed = all_passed(&out);
    SelftestReport { assertions: out, passed }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub label: String,
    pub report: ExperimentReport,
    pub event_check: EventBoundCheck,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub gamma_zero: SuiteReport,
    pub gamma_positive: SuiteReport,
    pub vacuity: VacuityReport,
    pub selftest: SelftestReport,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> Vec<String> {
        let suites = [
            ("gamma_zero", &self.gamma_zero.assertions),
            ("gamma_positive", &self.gamma_positive.assertions),
            ("selftest", &self.selftest.assertions),
        ];
        suites
            .iter()
            .flat_map(|(s, a)| {
                a.iter().filter(|x| !x.passed).map(move |x| format!("{s}/{}: {} vs {}", x.name, x.value, x.limit))
            })
            .collect()
    }
}

fn common_assertions(r: &ExperimentReport, check: &EventBoundCheck) -> Vec<Assertion> {
    vec![
        Assertion::flag("union_event_within_doob_bound_or_vacuous", check.passed),
        Assertion::at_most("martingale_terminal_mean_abs_z", check.martingale_z.abs(), 3.0),
        Assertion::at_most("dichotomy_violations", r.dichotomy_violations as f64, 0.0),
        Assertion::at_most("aborted_paths", r.aborted_paths as f64, r.n_paths as f64 / 1000.0),
    ]
}

/// Quantitative suite for `γ = 0`.
pub fn gamma_zero_assertions(r: &ExperimentReport) -> (EventBoundCheck, Vec<Assertion>) {
    let check = event_frequency_check(r);
    let mut a = common_assertions(r, &check);
    let alpha = r.alpha_bound;
    let n = r.tube_violation.n;
    if alpha < 1.0 {
        a.push(Assertion::at_most(
            "tube_violation_within_alpha",
            r.tube_violation.freq,
            alpha + 3.0 * binomial_sigma(alpha, n),
        ));
    }
    let half_band = 3.0 * binomial_sigma(0.5, n);
    a.push(Assertion::at_most("final_sign_plus_minus_half", (r.final_sign.plus as f64 / n as f64 - 0.5).abs(), half_band));
    a.push(Assertion::at_most("lower_pathwise_bound_failures", r.pathwise.lower_bound_failures as f64, 0.0));
    a.push(Assertion::at_most("upper_pathwise_bound_failures", r.pathwise.upper_bound_failures as f64, 0.0));
    a.push(Assertion::at_least(
        "tanaka_min_residual",
        r.pathwise.tanaka_min_residual.unwrap_or(f64::NEG_INFINITY),
        -r.tolerance_calibration.tol.max(1e-12),
    ));
    (check, a)
}

/// Property suite for `γ > 0`.
pub fn gamma_positive_assertions(r: &ExperimentReport, antithetic: &ExperimentReport) -> (EventBoundCheck, Vec<Assertion>) {
    let check = event_frequency_check(r);
    let mut a = common_assertions(r, &check);
    if let Some(l) = r.pathwise.running_bound {
        a.push(Assertion::at_least("running_bound_within_tol_fraction", l.within_tol.freq, 0.99));
    } else {
        a.push(Assertion::flag("running_bound_evaluated", false));
    }
    a.push(Assertion::flag(
        "antithetic_sign_symmetry",
        antithetic.count_plus == antithetic.count_minus && antithetic.final_sign.plus == antithetic.final_sign.minus,
    ));
    (check, a)
}

fn suite(label: &str, report: ExperimentReport, check: EventBoundCheck, assertions: Vec<Assertion>) -> SuiteReport {
    let passed = all_passed(&assertions);
    SuiteReport { label: label.into(), report, event_check: check, assertions, passed }
}

/// Companion configuration in the other `γ` regime, with `dt` tightened to
/// the step-size rule.
pub fn companion_config(config: &SimConfig) -> Result<SimConfig> {
    let base = if config.gamma.is_zero() {
        SimConfig {
            gamma: GammaExponent::new(COMPANION_GAMMA)?,
            a_exponent: COMPANION_A_POSITIVE,
            n_paths: config.n_paths.min(1000),
            ..*config
        }
    } else {
        SimConfig { gamma: GammaExponent::new(0.0)?, a_exponent: COMPANION_A_ZERO, ..*config }
    };
    let dt = sweep_dt(&base, base.epsilon)?;
    Ok(SimConfig { dt, ..base })
}

pub fn verify(config: &SimConfig, opts: &ExperimentOptions) -> Result<VerifyReport> {
    config.validate()?;
    let companion = companion_config(config)?;
    let (zero_cfg, pos_cfg) = if config.gamma.is_zero() { (*config, companion) } else { (companion, *config) };

    let zero = run_experiment(&zero_cfg, opts)?;
    let (zc, za) = gamma_zero_assertions(&zero);

    let pos = run_experiment(&pos_cfg, opts)?;
    let anti_cfg = SimConfig { n_paths: pos_cfg.n_paths.min(200) & !1, ..pos_cfg };
    let anti = run_experiment(
        &SimConfig { n_paths: anti_cfg.n_paths.max(2), ..anti_cfg },
        &ExperimentOptions { antithetic: true, ..*opts },
    )?;
    let (pc, pa) = gamma_positive_assertions(&pos, &anti);

    let vacuity = vacuity_report(pos_cfg.gamma, pos_cfg.a_exponent, pos_cfg.horizon_t, DT_FLOOR)?;
    let selftest = selftest();
    let gamma_zero = suite("gamma_zero_quantitative", zero, zc, za);
    let gamma_positive = suite("gamma_positive_properties", pos, pc, pa);
    let passed = gamma_zero.passed && gamma_positive.passed && selftest.passed;
    Ok(VerifyReport { schema_version: VERIFY_SCHEMA_VERSION, gamma_zero, gamma_positive, vacuity, selftest, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let r = selftest();
        for a in &r.assertions {
            assert!(a.passed, "{a:?}");
        }
        assert!(r.passed);
    }

    #[test]
    fn bisection_brackets_closed_form() {
        let g = GammaExponent::new(0.5).unwrap();
        let d = balance_delta_by_bisection(g, 0.05);
        assert!((d - 9.21e-3).abs() < 1e-5, "{d}");
    }

    #[test]
    fn companion_switches_regime() {
        let c = SimConfig {
            gamma: GammaExponent::new(0.0).unwrap(),
            epsilon: 0.05,
            a_exponent: 0.5,
            horizon_t: 1.0,
            dt: 1e-4,
            n_paths: 10_000,
            master_seed: 42,
        };
        let k = companion_config(&c).unwrap();
        assert_eq!(k.gamma.value(), COMPANION_GAMMA);
        assert_eq!(k.n_paths, 1000);
        assert!(k.dt <= c.dt);
        k.validate().unwrap();
        let back = companion_config(&k).unwrap();
        assert!(back.gamma.is_zero());
    }

    #[test]
    fn small_verify_is_deterministic() {
        let c = SimConfig {
            gamma: GammaExponent::new(0.0).unwrap(),
            epsilon: 0.1,
            a_exponent: 0.5,
            horizon_t: 1.0,
            dt: 1e-3,
            n_paths: 400,
            master_seed: 1,
        };
        let o = ExperimentOptions::default();
        let a = verify(&c, &o).unwrap();
        let b = verify(&c, &o).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.passed, "{:?}", a.failures());
    }
}
