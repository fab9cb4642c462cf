use proptest::prelude::*;
use zeronoise::bounds::{balance_delta, params_for_config};
use zeronoise::checks::balance_delta_by_bisection;
use zeronoise::experiments::{finalize, run_batch, ExperimentAccumulator, ExperimentOptions};
use zeronoise::mollifier::SmoothedAbs;
use zeronoise::sde::{calibrate_running_bound_tolerance, calibrate_tanaka_tolerance, simulate_path, tanaka_residual, SimConfig};
use zeronoise::stats::wasserstein_to_limit;
use zeronoise::trajectories::{comparison_oracle, envelope_value, extremal_value, shift_r, GammaExponent};

fn g(v: f64) -> GammaExponent {
    GammaExponent::new(v).unwrap()
}

/// Explicit midpoint rule for `y' = k·y^γ`, 200 substeps per grid step.
fn solution(gamma: f64, y0: f64, step: f64, n: usize, rate: f64) -> Vec<f64> {
    let sub = 200;
    let h = step / sub as f64;
    let mut y = y0;
    let mut out = vec![y];
    for _ in 0..n {
        for _ in 0..sub {
            let mid = y + 0.5 * h * rate * y.powf(gamma);
            y += h * rate * mid.powf(gamma);
        }
        out.push(y);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_brackets_lower_and_upper_solutions(
        gamma in 0.0f64..0.95,
        t_bar in 0.0f64..2.0,
        log_delta in -3.0f64..0.0,
        lift in 0.0f64..0.5,
        rate_up in 1.0f64..2.0,
        rate_down in 0.5f64..1.0,
    ) {
        let gm = g(gamma);
        let delta = 10f64.powf(log_delta);
        let (n, step) = (200, 5e-3);
        let r = shift_r(gm, t_bar, delta);
        let lower = solution(gamma, delta * (1.0 + lift), step, n, rate_up);
        let upper = solution(gamma, delta * (1.0 - lift), step, n, rate_down);
        let lo = comparison_oracle(gm, delta, step, &lower).unwrap();
        let hi = comparison_oracle(gm, delta, step, &upper).unwrap();
        prop_assert!(lo.all_lower());
        prop_assert!(hi.all_upper());
        for k in 0..=n {
            let env = envelope_value(gm, r, t_bar + k as f64 * step);
            prop_assert!(lower[k] >= env - lo.tolerance);
            prop_assert!(upper[k] <= env + hi.tolerance);
        }
    }

    #[test]
    fn balance_closed_form_matches_bisection(gamma in 0.01f64..0.99, log_eps in -8.0f64..0.0) {
        let eps = 10f64.powf(log_eps);
        let closed = balance_delta(g(gamma), eps).1;
        let bis = balance_delta_by_bisection(g(gamma), eps);
        prop_assert!(((closed - bis) / closed).abs() <= 1e-12);
    }

    #[test]
    fn smoothed_abs_convex_and_lipschitz(
        log_delta in -6.0f64..0.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        w in 0.0f64..1.0,
    ) {
        let delta = 10f64.powf(log_delta);
        let s = SmoothedAbs::new(delta);
        let (x, y) = (a * delta, b * delta);
        let z = w * x + (1.0 - w) * y;
        let slack = 1e-14 * delta;
        prop_assert!(s.value(z) <= w * s.value(x) + (1.0 - w) * s.value(y) + slack);
        prop_assert!((s.value(x) - s.value(y)).abs() <= (x - y).abs() + slack);
        prop_assert!(s.value(x) >= x.abs() - slack);
    }

    #[test]
    fn extremal_power_scaling(gamma in 0.0f64..0.95, s in 0.0f64..3.0, lambda in 0.1f64..10.0) {
        let gm = g(gamma);
        let lhs = extremal_value(gm, lambda * s);
        let rhs = lambda.powf(1.0 / (1.0 - gamma)) * extremal_value(gm, s);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn wasserstein_symmetric_and_bounded(xs in prop::collection::vec(-3.0f64..3.0, 1..60), gamma in 0.0f64..0.9) {
        let gm = g(gamma);
        let w = wasserstein_to_limit(&xs, gm, 1.0);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let h = extremal_value(gm, 1.0);
        let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
        prop_assert!(w >= 0.0);
        prop_assert!((w - wasserstein_to_limit(&neg, gm, 1.0)).abs() <= 1e-12);
        prop_assert!(w <= mean_abs + h + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_batch_partition_gives_the_same_report(
        cuts in prop::collection::vec(1u64..119, 0..5),
        reverse in any::<bool>(),
        gamma in prop::sample::select(vec![0.0, 0.5]),
    ) {
        let cfg = SimConfig {
            gamma: g(gamma),
            epsilon: 0.1,
            a_exponent: if gamma == 0.0 { 0.5 } else { 0.8 },
            horizon_t: 1.0,
            dt: 2e-3,
            n_paths: 120,
            master_seed: 11,
        };
        let params = params_for_config(&cfg).unwrap();
        let opts = ExperimentOptions { calibration_paths: 8, ..Default::default() };
        let mut bounds = cuts.clone();
        bounds.extend([0, 120]);
        bounds.sort_unstable();
        bounds.dedup();
        let mut batches: Vec<ExperimentAccumulator> =
            bounds.windows(2).map(|w| run_batch(&cfg, &params, &opts, w[0]..w[1])).collect();
        if reverse {
            batches.reverse();
        }
        let merged = batches.into_iter().fold(ExperimentAccumulator::default(), ExperimentAccumulator::merge);
        let whole = run_batch(&cfg, &params, &opts, 0..120);
        prop_assert_eq!(&merged, &whole);
        let cal = if gamma == 0.0 {
            calibrate_tanaka_tolerance(&cfg, &[0, 1]).unwrap()
        } else {
            calibrate_running_bound_tolerance(&cfg, &params, &[0, 1]).unwrap()
        };
        let a = finalize(&cfg, &params, &opts, merged, cal.clone()).unwrap().to_json();
        let b = finalize(&cfg, &params, &opts, whole, cal).unwrap().to_json();
        prop_assert_eq!(a, b);
    }

    /// For `γ = 0` the scheme at noise `ε` is `ε²` times the scheme at noise 1
    /// run with step `dt/ε²` over `[0, T/ε²]` on the same normals, so the
    /// discrete local time scales by `ε²`. Powers of two keep this exact.
    #[test]
    fn local_time_scales_with_epsilon_squared(k in 1i32..4, seed in 0u64..1000, path in 0u64..50) {
        let eps = 2f64.powi(-k);
        let small = SimConfig {
            gamma: g(0.0),
            epsilon: eps,
            a_exponent: 0.5,
            horizon_t: 1.0,
            dt: 2f64.powi(-12),
            n_paths: 1,
            master_seed: seed,
        };
        let unit = SimConfig { epsilon: 1.0, horizon_t: 1.0 / (eps * eps), dt: small.dt / (eps * eps), ..small };
        let ls = tanaka_residual(&simulate_path(&small, 0.0, path).unwrap(), &small).unwrap();
        let lu = tanaka_residual(&simulate_path(&unit, 0.0, path).unwrap(), &unit).unwrap();
        prop_assert_eq!(ls.len(), lu.len());
        for (a, b) in ls.iter().zip(&lu) {
            prop_assert!((a - eps * eps * b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
