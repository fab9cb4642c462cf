//! Monte Carlo harness: classifies simulated paths against the selection
//! tube, measures the deviation events against the Doob bound and estimates
//! the distance of the law of `X_T` to `½δ_{-H_γ(T)} + ½δ_{H_γ(T)}`.
//!
//! Paths are simulated independently in parallel; every per-path result is
//! keyed by its index and the reduction runs over the index-ordered list, so
//! reports are bit-identical for any worker count or batch partition.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{doob_event_bound, params_for_config, TheoremParams};
use crate::error::{Error, Result};
use crate::sde::{
    calibrate_running_bound_tolerance, calibrate_tanaka_tolerance, lower_bound_gamma0, pathwise_lower_bound_check,
    simulate_path_with, tanaka_residual, upper_bound_gamma0, PathOptions, PathSample, SimConfig,
    ToleranceCalibration,
};
use crate::stats::{binomial_sigma, mean, pairwise_sum, quantile_sorted, sort_floats, std_dev, Frequency};
use crate::trajectories::extremal_value;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "undecided")]
    Undecided,
}

/// Classification of one path against the tube on `[t̄, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathVerdict {
    pub sign: Sign,
    /// `| |X_t| - H_γ(t) | ≤ h` at every grid point of `[t̄, T]`.
    pub tube_ok: bool,
    /// `H_γ(t - R₋) ≤ |X_t| ≤ H_γ(t - R₊)` on `[t̄, T]`.
    pub envelope_ok: bool,
    /// `sup_t ε|∫ |X|_δ' dW| ≤ ε^a`.
    pub event_moll_ok: bool,
    /// `sup_t ε|W_t| ≤ ε^a`.
    pub event_w_ok: bool,
    pub sign_constant_after_tbar: bool,
    pub sup_tube_deviation: f64,
    /// No grid point lies in `[t̄, T]` (vacuous regime); the window checks
    /// then hold trivially.
    pub window_empty: bool,
}

impl PathVerdict {
    pub fn union_event_violated(&self) -> bool {
        !(self.event_moll_ok && self.event_w_ok)
    }
}

fn strict_sign(xs: &[f64]) -> Option<Sign> {
    let first = *xs.first()?;
    if first > 0.0 && xs.iter().all(|&v| v > 0.0) {
        Some(Sign::Plus)
    } else if first < 0.0 && xs.iter().all(|&v| v < 0.0) {
        Some(Sign::Minus)
    } else {
        None
    }
}

pub fn classify_path(path: &PathSample, params: &TheoremParams) -> Result<PathVerdict> {
    let t_end = *path.times.last().ok_or(Error::EmptyGrid)?;
    if (t_end - params.horizon_t).abs() > 1e-9 * params.horizon_t.max(1.0) {
        return Err(Error::Mismatch(format!("path ends at {t_end}, parameters use T = {}", params.horizon_t)));
    }
    let gamma = params.gamma;
    let start = path.times.partition_point(|&t| t < params.t_bar);
    let window = start..path.len();
    let window_empty = window.is_empty();

    let mut tube_ok = true;
    let mut envelope_ok = true;
    let mut sup_dev: f64 = 0.0;
    for k in window.clone() {
        let t = path.times[k];
        let a = path.x[k].abs();
        let dev = (a - extremal_value(gamma, t)).abs();
        sup_dev = sup_dev.max(dev);
        tube_ok &= dev <= params.h;
        envelope_ok &= params.lower_envelope(t) <= a && a <= params.upper_envelope(t);
    }
    let sign = if window_empty { None } else { strict_sign(&path.x[window]) };
    let eps = params.epsilon;
    let sup_m = path.m_moll.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_w = path.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    Ok(PathVerdict {
        sign: sign.unwrap_or(Sign::Undecided),
        tube_ok,
        envelope_ok,
        event_moll_ok: eps * sup_m <= params.eta,
        event_w_ok: eps * sup_w <= params.eta,
        sign_constant_after_tbar: window_empty || sign.is_some(),
        sup_tube_deviation: sup_dev,
        window_empty,
    })
}

/// Non-default knobs of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentOptions {
    /// Path `2k+1` reuses the increments of path `2k` with flipped sign.
    pub antithetic: bool,
    /// Paths used for the dt-halving tolerance calibration.
    pub calibration_paths: usize,
    /// Number of time points in the `|X_t|` quantile profile.
    pub profile_points: usize,
    /// Sign constancy is also reported on `[fraction·T, T]`.
    pub fixed_fraction: f64,
    /// Include wall-clock figures in the report (breaks byte-reproducibility).
    pub timing: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { antithetic: false, calibration_paths: 256, profile_points: 101, fixed_fraction: 0.25, timing: false }
    }
}

/// Everything the reduction needs from one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub path_index: u64,
    pub verdict: PathVerdict,
    pub final_value: f64,
    pub m_moll_final: f64,
    pub occupation_deficit: f64,
    pub zero_fraction: f64,
    pub selection_time: Option<f64>,
    pub sign_constant_after_fraction: bool,
    pub lower_bound_ok: bool,
    pub upper_bound_ok: bool,
    pub tanaka_min: Option<f64>,
    pub running_bound_margin: Option<f64>,
    pub abs_profile: Vec<f64>,
}

fn profile_indices(len: usize, points: usize) -> Vec<usize> {
    let points = points.clamp(2, len.max(2));
    (0..points).map(|j| ((j as f64) * (len - 1) as f64 / (points - 1) as f64).round() as usize).collect()
}

pub fn summarize_path(
    path: &PathSample,
    config: &SimConfig,
    params: &TheoremParams,
    opts: &ExperimentOptions,
) -> Result<PathSummary> {
    let verdict = classify_path(path, params)?;
    let level = params.selection_level();
    let selection_time = path.x.iter().position(|v| v.abs() >= level).map(|k| path.times[k]);
    let frac_start = path.times.partition_point(|&t| t < opts.fixed_fraction * config.horizon_t);
    let sign_constant_after_fraction = strict_sign(&path.x[frac_start..]).is_some();

    let (lower_bound_ok, upper_bound_ok, tanaka_min, running_bound_margin) = if config.gamma.is_zero() {
        let l = tanaka_residual(path, config)?;
        (
            lower_bound_gamma0(path, config.epsilon).holds,
            upper_bound_gamma0(path, config.epsilon).holds,
            Some(l.iter().copied().fold(f64::INFINITY, f64::min)),
            None,
        )
    } else {
        (true, true, None, Some(pathwise_lower_bound_check(path, params)?))
    };

    Ok(PathSummary {
        path_index: path.path_index,
        verdict,
        final_value: path.final_value(),
        m_moll_final: *path.m_moll.last().unwrap_or(&0.0),
        occupation_deficit: path.occupation_deficit(),
        zero_fraction: path.zero_fraction(),
        selection_time,
        sign_constant_after_fraction,
        lower_bound_ok,
        upper_bound_ok,
        tanaka_min,
        running_bound_margin,
        abs_profile: profile_indices(path.len(), opts.profile_points).into_iter().map(|k| path.x[k].abs()).collect(),
    })
}

/// Simulates and summarizes the path at `index`, honouring antithetic pairing.
pub fn run_path(
    config: &SimConfig,
    params: &TheoremParams,
    opts: &ExperimentOptions,
    index: u64,
) -> Result<PathSummary> {
    let (key, sign) = if opts.antithetic && index % 2 == 1 { (index - 1, -1.0) } else { (index, 1.0) };
    let mut path =
        simulate_path_with(config, params.delta, key, PathOptions { increment_sign: sign, ..Default::default() })?;
    path.path_index = index;
    summarize_path(&path, config, params, opts)
}

/// Ordered collection of per-path results. Merging is concatenation followed
/// by a sort on path index, hence associative and commutative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentAccumulator {
    pub summaries: Vec<PathSummary>,
    pub aborted: Vec<(u64, String)>,
}

impl ExperimentAccumulator {
    pub fn push(&mut self, index: u64, r: Result<PathSummary>) {
        match r {
            Ok(s) => self.summaries.push(s),
            Err(e) => self.aborted.push((index, e.to_string())),
        }
    }

    pub fn merge(mut self, mut other: Self) -> Self {
        self.summaries.append(&mut other.summaries);
        self.aborted.append(&mut other.aborted);
        self.summaries.sort_by_key(|s| s.path_index);
        self.aborted.sort_by_key(|a| a.0);
        self
    }
}

/// Simulates the paths with indices in `range` (in parallel).
pub fn run_batch(
    config: &SimConfig,
    params: &TheoremParams,
    opts: &ExperimentOptions,
    range: std::ops::Range<u64>,
) -> ExperimentAccumulator {
    let results: Vec<(u64, Result<PathSummary>)> =
        range.into_par_iter().map(|i| (i, run_path(config, params, opts, i))).collect();
    let mut acc = ExperimentAccumulator::default();
    for (i, r) in results {
        acc.push(i, r);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignCounts {
    pub plus: u64,
    pub minus: u64,
    pub zero: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationStats {
    pub mean_deficit: f64,
    pub max_deficit: f64,
    pub mean_zero_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Distribution of `inf{t : |X_t| ≥ level}`; a diagnostic, not the
/// theorem's selection time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionTimeStats {
    pub level: f64,
    pub reached: u64,
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedFractionStat {
    pub fraction_of_t: f64,
    pub time: f64,
    pub sign_constant: Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunningBoundStats {
    pub tol: f64,
    pub min_margin: f64,
    pub within_tol: Frequency,
    pub nonnegative: Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathwiseStats {
    /// Paths where `|X_t| ≥ occupation - ε|∫ sgn dW|` fails somewhere (γ = 0).
    pub lower_bound_failures: u64,
    /// Paths where `|X_t| ≤ t + ε|W_t|` fails somewhere (γ = 0).
    pub upper_bound_failures: u64,
    pub tanaka_min_residual: Option<f64>,
    pub running_bound: Option<RunningBoundStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub steps_per_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub h_gamma: f64,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: SimConfig,
    pub antithetic: bool,
    pub params: TheoremParams,
    pub n_paths: u64,
    pub aborted_paths: u64,
    pub count_plus: u64,
    pub count_minus: u64,
    pub count_undecided: u64,
    /// Sign of `X_T` for every completed path, the law estimate.
    pub final_sign: SignCounts,
    pub tube_violation: Frequency,
    pub envelope_violation: Frequency,
    pub event_moll_violation: Frequency,
    pub event_w_violation: Frequency,
    pub event_union_violation: Frequency,
    pub alpha_bound: f64,
    pub alpha_paper_variant: f64,
    pub dichotomy_violations: u64,
    pub wasserstein_to_limit: f64,
    pub mean_sup_tube_deviation: f64,
    pub occupation: OccupationStats,
    pub m_moll_terminal: MeanEstimate,
    pub selection_time: SelectionTimeStats,
    pub sign_constant_after_fixed_fraction: FixedFractionStat,
    pub pathwise: PathwiseStats,
    pub tolerance_calibration: ToleranceCalibration,
    pub step_size_warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(skip)]
    pub profile: Vec<ProfileRow>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `(t, H_γ(t), envelope_lower, envelope_upper, q05, q50, q95)` of `|X_t|`.
    pub fn write_profile_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,h_gamma,envelope_lower,envelope_upper,q05,q50,q95")?;
        for r in &self.profile {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t, r.h_gamma, r.envelope_lower, r.envelope_upper, r.q05, r.q50, r.q95
            )?;
        }
        Ok(())
    }
}

fn calibrate(config: &SimConfig, params: &TheoremParams, opts: &ExperimentOptions) -> Result<ToleranceCalibration> {
    let n = (opts.calibration_paths as u64).min(config.n_paths).max(1);
    let paths: Vec<u64> = (0..n).collect();
    if config.gamma.is_zero() {
        calibrate_tanaka_tolerance(config, &paths)
    } else {
        calibrate_running_bound_tolerance(config, params, &paths)
    }
}

/// Reduces an accumulator to a report. `calibration` supplies the pathwise
/// tolerance.
pub fn finalize(
    config: &SimConfig,
    params: &TheoremParams,
    opts: &ExperimentOptions,
    acc: ExperimentAccumulator,
    calibration: ToleranceCalibration,
) -> Result<ExperimentReport> {
    let total = config.n_paths as usize;
    let aborted = acc.aborted.len();
    if aborted * 1000 > total {
        return Err(Error::TooManyAborts { aborted, total });
    }
    let s = &acc.summaries;
    let n = s.len() as u64;
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    let count = |f: &dyn Fn(&PathSummary) -> bool| s.iter().filter(|p| f(p)).count() as u64;

    let count_plus = count(&|p| p.verdict.sign == Sign::Plus);
    let count_minus = count(&|p| p.verdict.sign == Sign::Minus);
    let count_undecided = config.n_paths - count_plus - count_minus;

    let finals: Vec<f64> = s.iter().map(|p| p.final_value).collect();
    let final_sign = SignCounts {
        plus: count(&|p| p.final_value > 0.0),
        minus: count(&|p| p.final_value < 0.0),
        zero: count(&|p| p.final_value == 0.0),
    };

    let devs: Vec<f64> = s.iter().map(|p| p.verdict.sup_tube_deviation).collect();
    let deficits: Vec<f64> = s.iter().map(|p| p.occupation_deficit).collect();
    let zero_fracs: Vec<f64> = s.iter().map(|p| p.zero_fraction).collect();
    let m_final: Vec<f64> = s.iter().map(|p| p.m_moll_final).collect();

    let mut sel: Vec<f64> = s.iter().filter_map(|p| p.selection_time).collect();
    sort_floats(&mut sel);
    let selection_time = SelectionTimeStats {
        level: params.selection_level(),
        reached: sel.len() as u64,
        mean: mean(&sel),
        q05: quantile_sorted(&sel, 0.05),
        q50: quantile_sorted(&sel, 0.5),
        q95: quantile_sorted(&sel, 0.95),
    };

    let running_bound = if config.gamma.is_zero() {
        None
    } else {
        let margins: Vec<f64> = s.iter().filter_map(|p| p.running_bound_margin).collect();
        let tol = calibration.tol;
        Some(RunningBoundStats {
            tol,
            min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            within_tol: Frequency::new(margins.iter().filter(|&&m| m >= -tol).count() as u64, n),
            nonnegative: Frequency::new(margins.iter().filter(|&&m| m >= 0.0).count() as u64, n),
        })
    };
    let pathwise = PathwiseStats {
        lower_bound_failures: count(&|p| !p.lower_bound_ok),
        upper_bound_failures: count(&|p| !p.upper_bound_ok),
        tanaka_min_residual: s.iter().filter_map(|p| p.tanaka_min).reduce(f64::min),
        running_bound,
    };

    // |X_t| quantile profile on the subsampled grid
    let grid = config.grid();
    let idx = profile_indices(grid.n_steps + 1, opts.profile_points);
    let mut profile = Vec::with_capacity(idx.len());
    let mut column = Vec::with_capacity(s.len());
    for (j, &k) in idx.iter().enumerate() {
        column.clear();
        column.extend(s.iter().map(|p| p.abs_profile[j]));
        sort_floats(&mut column);
        let t = grid.time(k);
        profile.push(ProfileRow {
            t,
            h_gamma: extremal_value(params.gamma, t),
            envelope_lower: params.lower_envelope(t),
            envelope_upper: params.upper_envelope(t),
            q05: quantile_sorted(&column, 0.05),
            q50: quantile_sorted(&column, 0.5),
            q95: quantile_sorted(&column, 0.95),
        });
    }

    let fixed_time = opts.fixed_fraction * config.horizon_t;
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: *config,
        antithetic: opts.antithetic,
        params: params.clone(),
        n_paths: config.n_paths,
        aborted_paths: aborted as u64,
        count_plus,
        count_minus,
        count_undecided,
        final_sign,
        tube_violation: Frequency::new(count(&|p| !p.verdict.tube_ok), n),
        envelope_violation: Frequency::new(count(&|p| !p.verdict.envelope_ok), n),
        event_moll_violation: Frequency::new(count(&|p| !p.verdict.event_moll_ok), n),
        event_w_violation: Frequency::new(count(&|p| !p.verdict.event_w_ok), n),
        event_union_violation: Frequency::new(count(&|p| p.verdict.union_event_violated()), n),
        alpha_bound: doob_event_bound(config.epsilon, config.a_exponent, config.horizon_t),
        alpha_paper_variant: params.alpha_paper_variant,
        dichotomy_violations: count(&|p| {
            p.verdict.tube_ok && !p.verdict.window_empty && !p.verdict.sign_constant_after_tbar
        }),
        wasserstein_to_limit: crate::stats::wasserstein_to_limit(&finals, config.gamma, config.horizon_t),
        mean_sup_tube_deviation: mean(&devs),
        occupation: OccupationStats {
            mean_deficit: mean(&deficits),
            max_deficit: deficits.iter().copied().fold(0.0, f64::max),
            mean_zero_fraction: mean(&zero_fracs),
        },
        m_moll_terminal: MeanEstimate { mean: mean(&m_final), std_err: std_dev(&m_final) / (n as f64).sqrt() },
        selection_time,
        sign_constant_after_fixed_fraction: FixedFractionStat {
            fraction_of_t: opts.fixed_fraction,
            time: fixed_time,
            sign_constant: Frequency::new(count(&|p| p.sign_constant_after_fraction), n),
        },
        pathwise,
        tolerance_calibration: calibration,
        step_size_warnings: config.step_size_warnings(params.delta),
        timing: None,
        profile,
    })
}

/// Runs `config.n_paths` paths on the current rayon pool.
pub fn run_experiment(config: &SimConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let params = params_for_config(config)?;
    let start = Instant::now();
    let acc = run_batch(config, &params, opts, 0..config.n_paths);
    let calibration = calibrate(config, &params, opts)?;
    let mut report = finalize(config, &params, opts, acc, calibration)?;
    if opts.timing {
        let wall = start.elapsed().as_secs_f64();
        let steps = config.n_paths as f64 * config.grid().n_steps as f64;
        report.timing = Some(Timing { wall_seconds: wall, steps_per_second: steps / wall.max(1e-12) });
    }
    Ok(report)
}

/// Comparison of the union deviation-event frequency with `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventBoundCheck {
    pub alpha_bound: f64,
    pub observed: f64,
    /// Binomial `σ` at `p = α`.
    pub sigma: f64,
    /// `α + 3σ - observed`.
    pub margin: f64,
    /// `α ≥ 1`: the bound says nothing.
    pub vacuous: bool,
    pub passed: bool,
    /// `mean(∫|X|_δ' dW at T) / std_err`; a martingale should give `|z| ≤ 3`.
    pub martingale_z: f64,
}

pub fn event_frequency_check(report: &ExperimentReport) -> EventBoundCheck {
    let alpha = report.alpha_bound;
    let n = report.event_union_violation.n;
    let observed = report.event_union_violation.freq;
    let vacuous = alpha >= 1.0;
    let sigma = if vacuous { 0.0 } else { binomial_sigma(alpha, n) };
    let margin = alpha + 3.0 * sigma - observed;
    let m = report.m_moll_terminal;
    EventBoundCheck {
        alpha_bound: alpha,
        observed,
        sigma,
        margin,
        vacuous,
        passed: vacuous || margin >= 0.0,
        martingale_z: if m.std_err > 0.0 { m.mean / m.std_err } else { 0.0 },
    }
}

/// One row of an ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub dt: f64,
    pub report: std::result::Result<ExperimentReport, String>,
}

/// Step for `epsilon`: the smaller of the base step and the step-size rule,
/// shrunk so it divides `T`.
pub fn sweep_dt(base: &SimConfig, epsilon: f64) -> Result<f64> {
    let delta = params_for(base, epsilon)?.delta;
    let target = base.dt.min(SimConfig::recommended_dt(epsilon, delta));
    let steps = (base.horizon_t / target * (1.0 - 1e-12)).ceil().max(1.0);
    Ok(base.horizon_t / steps)
}

fn params_for(base: &SimConfig, epsilon: f64) -> Result<TheoremParams> {
    crate::bounds::params_for(base.gamma, epsilon, base.a_exponent, base.horizon_t)
}

pub fn sweep(base: &SimConfig, epsilons: &[f64], opts: &ExperimentOptions) -> Result<Vec<SweepRow>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("epsilon list is empty".into()));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("epsilon list must be strictly decreasing".into()));
    }
    Ok(epsilons
        .iter()
        .map(|&epsilon| {
            let run = || -> Result<(f64, ExperimentReport)> {
                let dt = sweep_dt(base, epsilon)?;
                let cfg = SimConfig { epsilon, dt, ..*base };
                Ok((dt, run_experiment(&cfg, opts)?))
            };
            match run() {
                Ok((dt, r)) => SweepRow { epsilon, dt, report: Ok(r) },
                Err(e) => SweepRow { epsilon, dt: f64::NAN, report: Err(e.to_string()) },
            }
        })
        .collect())
}

pub const SWEEP_CSV_HEADER: &str = "gamma,epsilon,a,T,dt,paths,seed,eta,delta,t_bar,alpha,h,informative,\
count_plus,count_minus,count_undecided,tube_violation_freq,event_union_freq,event_check_margin,\
event_check_vacuous,wasserstein_to_limit,mean_sup_tube_deviation,sign_constant_after_fraction_freq,\
selection_time_q50,running_bound_within_tol_freq,error";

/// One CSV line (no trailing newline) matching [`SWEEP_CSV_HEADER`].
pub fn sweep_csv_row(base: &SimConfig, row: &SweepRow) -> String {
    match &row.report {
        Ok(r) => {
            let c = event_frequency_check(r);
            let p = &r.params;
            let running = r.pathwise.running_bound.map_or(String::new(), |l| l.within_tol.freq.to_string());
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                p.gamma.value(),
                r.config.epsilon,
                r.config.a_exponent,
                r.config.horizon_t,
                r.config.dt,
                r.config.n_paths,
                r.config.master_seed,
                p.eta,
                p.delta,
                p.t_bar,
                p.alpha,
                p.h,
                p.informative(),
                r.count_plus,
                r.count_minus,
                r.count_undecided,
                r.tube_violation.freq,
                r.event_union_violation.freq,
                c.margin,
                c.vacuous,
                r.wasserstein_to_limit,
                r.mean_sup_tube_deviation,
                r.sign_constant_after_fixed_fraction.sign_constant.freq,
                r.selection_time.q50,
                running
            )
        }
        Err(e) => format!(
            "{},{},{},{},{},{},{},,,,,,,,,,,,,,,,,,,\"{}\"",
            base.gamma.value(),
            row.epsilon,
            base.a_exponent,
            base.horizon_t,
            row.dt,
            base.n_paths,
            base.master_seed,
            e.replace('"', "'")
        ),
    }
}

/// Sum helper re-exported for callers that aggregate per-path values.
pub fn reproducible_sum(xs: &[f64]) -> f64 {
    pairwise_sum(xs)
}
