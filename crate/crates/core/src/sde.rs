//! Euler–Maruyama simulation of `dX = sgn(X)|X|^γ dt + ε dW`, `X_0 = 0`.
//!
//! Besides the state, every path carries the running Itô integrals the
//! pathwise arguments use: `∫ sgn(X) dW`, `∫ |X|_δ' dW` and the occupation
//! time `∫ 1{X ≠ 0} ds`. All integrands are evaluated at the left endpoint.
//!
//! Paths can be refined by Brownian bridging: at refinement level `L` every
//! base step is split into `2^L` substeps whose increments sum to the base
//! increment, so runs at `dt` and `dt/2^L` see the same Brownian path.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::TheoremParams;
use crate::error::{Error, Result};
use crate::mollifier::SmoothedAbs;
use crate::rng::NormalStream;
use crate::trajectories::GammaExponent;

/// Experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub gamma: GammaExponent,
    pub epsilon: f64,
    #[serde(rename = "a")]
    pub a_exponent: f64,
    #[serde(rename = "T")]
    pub horizon_t: f64,
    pub dt: f64,
    #[serde(rename = "paths")]
    pub n_paths: u64,
    #[serde(rename = "seed")]
    pub master_seed: u64,
}

impl SimConfig {
    /// Lower end of the admissible interval for `a`: `2γ/(1+γ)`.
    pub fn min_a_exponent(gamma: GammaExponent) -> f64 {
        let g = gamma.value();
        2.0 * g / (1.0 + g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return bad(format!("T must be positive, got {}", self.horizon_t));
        }
        if !(self.dt > 0.0) || self.dt > self.horizon_t {
            return bad(format!("dt must lie in (0, T], got {}", self.dt));
        }
        if self.n_paths == 0 {
            return bad("path count must be positive".into());
        }
        let lo = Self::min_a_exponent(self.gamma);
        if !(self.a_exponent > lo && self.a_exponent < 1.0) {
            return Err(Error::ExponentOutOfRange { a: self.a_exponent, lo });
        }
        Ok(())
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.horizon_t, self.dt)
    }

    /// Step-size advice: `dt ≤ ε²` always, and `ε·sqrt(dt) ≤ δ/10` when a
    /// mollification radius is in play.
    pub fn step_size_warnings(&self, delta: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.dt > self.epsilon * self.epsilon {
            out.push(format!(
                "dt = {} exceeds epsilon^2 = {}: diffusive scale near the origin is unresolved",
                self.dt,
                self.epsilon * self.epsilon
            ));
        }
        if delta > 0.0 && self.epsilon * self.dt.sqrt() > delta / 10.0 {
            out.push(format!(
                "epsilon*sqrt(dt) = {} exceeds delta/10 = {}: noise per step is large against the mollification radius",
                self.epsilon * self.dt.sqrt(),
                delta / 10.0
            ));
        }
        if self.grid().partial_last {
            out.push(format!("T/dt = {} is not an integer; last step is shortened", self.horizon_t / self.dt));
        }
        out
    }

    /// Largest `dt` satisfying [`Self::step_size_warnings`] without warnings.
    pub fn recommended_dt(epsilon: f64, delta: f64) -> f64 {
        let mut dt = epsilon * epsilon;
        if delta > 0.0 {
            let r = delta / (10.0 * epsilon);
            dt = dt.min(r * r);
        }
        dt
    }
}

/// Uniform grid on `[0, T]`; the last step is shortened when `T/dt` is not
/// an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub partial_last: bool,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Self {
        let ratio = horizon / dt;
        let rounded = ratio.round();
        let (n_steps, partial_last) = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            (rounded.max(1.0) as usize, false)
        } else {
            (ratio.ceil() as usize, true)
        };
        Self { horizon, dt, n_steps, partial_last }
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n_steps {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }

    #[inline]
    pub fn step_len(&self, k: usize) -> f64 {
        self.time(k + 1) - self.time(k)
    }

    /// First grid index whose time is `≥ t`, or `None` past the horizon.
    pub fn first_index_at_or_after(&self, t: f64) -> Option<usize> {
        if t > self.horizon {
            return None;
        }
        if t <= 0.0 {
            return Some(0);
        }
        let mut k = ((t / self.dt).floor() as usize).min(self.n_steps);
        while k > 0 && self.time(k - 1) >= t {
            k -= 1;
        }
        while self.time(k) < t {
            k += 1;
        }
        Some(k)
    }

    pub fn refined(&self, level: u32) -> Self {
        let f = 1usize << level;
        Self { horizon: self.horizon, dt: self.dt / f as f64, n_steps: self.n_steps * f, partial_last: self.partial_last }
    }
}

/// One simulated trajectory on the (possibly refined) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub path_index: u64,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// `∫_0^t sgn(X) dW`
    pub m_sgn: Vec<f64>,
    /// `∫_0^t |X|_δ' dW`; equals `m_sgn` when `δ = 0`.
    pub m_moll: Vec<f64>,
    /// `∫_0^t 1{X ≠ 0} ds`
    pub occupation: Vec<f64>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_value(&self) -> f64 {
        *self.x.last().expect("path has at least one point")
    }

    /// Fraction of grid points after the first step at which `X` is exactly 0.
    pub fn zero_fraction(&self) -> f64 {
        if self.x.len() <= 2 {
            return 0.0;
        }
        let tail = &self.x[2..];
        tail.iter().filter(|&&v| v == 0.0).count() as f64 / tail.len() as f64
    }

    /// `t - ∫_0^t 1{X ≠ 0} ds` at the horizon.
    pub fn occupation_deficit(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.occupation.last().copied().unwrap_or(0.0)
    }

    /// CSV with header `t,x,w,m_sgn,m_moll,occupation`; values use the
    /// shortest decimal form that round-trips.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,w,m_sgn,m_moll,occupation")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.times[k], self.x[k], self.w[k], self.m_sgn[k], self.m_moll[k], self.occupation[k]
            )?;
        }
        Ok(())
    }
}

/// Knobs that depart from the plain problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Initial state. Anything other than 0 is a scheme diagnostic.
    pub x0: f64,
    /// `+1` or `-1`; `-1` negates every Brownian increment.
    pub increment_sign: f64,
    /// Bridge refinement level: `2^level` substeps per base step.
    pub refinement: u32,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { x0: 0.0, increment_sign: 1.0, refinement: 0 }
    }
}

/// `sgn(x)|x|^γ` with `sgn(0) = 0`.
#[inline]
pub fn drift(x: f64, gamma: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if gamma == 0.0 {
        x.signum()
    } else {
        x.signum() * x.abs().powf(gamma)
    }
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Produces the Brownian increments of one base step, bridged down to the
/// requested refinement level.
struct BridgedIncrements {
    streams: Vec<NormalStream>,
    buf: Vec<f64>,
    scratch: Vec<f64>,
}

impl BridgedIncrements {
    fn new(master_seed: u64, path: u64, level: u32) -> Self {
        let n = 1usize << level;
        Self {
            streams: (0..=level).map(|l| NormalStream::new(master_seed, l, path)).collect(),
            buf: Vec::with_capacity(n),
            scratch: Vec::with_capacity(n),
        }
    }

    fn step(&mut self, h: f64) -> &[f64] {
        self.buf.clear();
        self.buf.push(h.sqrt() * self.streams[0].next_normal());
        let mut tau = h;
        for l in 1..self.streams.len() {
            let half_sd = 0.5 * tau.sqrt();
            self.scratch.clear();
            for &d in &self.buf {
                let left = 0.5 * d + half_sd * self.streams[l].next_normal();
                self.scratch.push(left);
                self.scratch.push(d - left);
            }
            std::mem::swap(&mut self.buf, &mut self.scratch);
            tau *= 0.5;
        }
        &self.buf
    }
}

/// Simulates path `path_index` from the origin.
///
/// `delta` is the mollification radius used for the `m_moll` integrand;
/// `delta = 0` selects `sgn` (the `δ → 0` limit), which is what the `γ = 0`
/// analysis uses.
pub fn simulate_path(config: &SimConfig, delta: f64, path_index: u64) -> Result<PathSample> {
    simulate_path_with(config, delta, path_index, PathOptions::default())
}

pub fn simulate_path_with(
    config: &SimConfig,
    delta: f64,
    path_index: u64,
    opts: PathOptions,
) -> Result<PathSample> {
    if !(config.dt > 0.0 && config.horizon_t > 0.0) {
        return Err(Error::InvalidConfig("dt and T must be positive".into()));
    }
    if delta < 0.0 {
        return Err(Error::InvalidConfig(format!("delta must be nonnegative, got {delta}")));
    }
    let grid = config.grid();
    let sub = 1usize << opts.refinement;
    let n = grid.n_steps * sub + 1;
    let g = config.gamma.value();
    let eps = config.epsilon;
    let moll = (delta > 0.0).then(|| SmoothedAbs::new(delta));

    let mut p = PathSample {
        path_index,
        times: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        m_sgn: Vec::with_capacity(n),
        m_moll: Vec::with_capacity(n),
        occupation: Vec::with_capacity(n),
    };
    let (mut x, mut w, mut ms, mut mm, mut occ) = (opts.x0, 0.0, 0.0, 0.0, 0.0);
    p.times.push(0.0);
    p.x.push(x);
    p.w.push(w);
    p.m_sgn.push(ms);
    p.m_moll.push(mm);
    p.occupation.push(occ);

    let mut incs = BridgedIncrements::new(config.master_seed, path_index, opts.refinement);
    for k in 0..grid.n_steps {
        let t0 = grid.time(k);
        let h = grid.step_len(k);
        let hf = h / sub as f64;
        for (j, &raw) in incs.step(h).iter().enumerate() {
            let dw = opts.increment_sign * raw;
            let s = sgn(x);
            ms += s * dw;
            mm += match &moll {
                Some(m) => m.d1(x) * dw,
                None => s * dw,
            };
            if x != 0.0 {
                occ += hf;
            }
            x += drift(x, g) * hf + eps * dw;
            w += dw;
            if !x.is_finite() {
                return Err(Error::NonFinite { path: path_index, step: k * sub + j });
            }
            let t = if j + 1 == sub { grid.time(k + 1) } else { t0 + (j + 1) as f64 * hf };
            p.times.push(t);
            p.x.push(x);
            p.w.push(w);
            p.m_sgn.push(ms);
            p.m_moll.push(mm);
            p.occupation.push(occ);
        }
    }
    Ok(p)
}

/// Accumulated-rounding allowance for inequalities that hold exactly in
/// real arithmetic along the scheme: `4·(k+1)·ε_mach·scale`.
#[inline]
pub fn rounding_slack(step: usize, scale: f64) -> f64 {
    4.0 * (step as f64 + 1.0) * f64::EPSILON * scale
}

/// Outcome of checking an inequality at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInequality {
    /// `min_k (larger side - smaller side)`.
    pub worst_margin: f64,
    /// Holds at every point up to [`rounding_slack`].
    pub holds: bool,
}

/// `|X_t| ≤ t + ε|W_t|` (the drift contributes at most `t` when `γ = 0`).
pub fn upper_bound_gamma0(path: &PathSample, epsilon: f64) -> GridInequality {
    let mut worst = f64::INFINITY;
    let mut holds = true;
    for k in 0..path.len() {
        let rhs = path.times[k] + epsilon * path.w[k].abs();
        let m = rhs - path.x[k].abs();
        worst = worst.min(m);
        holds &= m >= -rounding_slack(k, 1.0 + rhs);
    }
    GridInequality { worst_margin: worst, holds }
}

/// `|X_t| ≥ ∫_0^t 1{X ≠ 0} ds - ε|∫_0^t sgn(X) dW|`.
pub fn lower_bound_gamma0(path: &PathSample, epsilon: f64) -> GridInequality {
    let mut worst = f64::INFINITY;
    let mut holds = true;
    for k in 0..path.len() {
        let rhs = path.occupation[k] - epsilon * path.m_sgn[k].abs();
        let m = path.x[k].abs() - rhs;
        worst = worst.min(m);
        holds &= m >= -rounding_slack(k, 1.0 + path.occupation[k] + epsilon * path.m_sgn[k].abs());
    }
    GridInequality { worst_margin: worst, holds }
}

/// Discrete local time at 0: `L̂_t = |X_t| - ∫_0^t 1{X≠0} ds - ε ∫_0^t sgn(X) dW`.
pub fn tanaka_residual(path: &PathSample, config: &SimConfig) -> Result<Vec<f64>> {
    if !config.gamma.is_zero() {
        return Err(Error::RequiresGammaZero(config.gamma.value()));
    }
    let eps = config.epsilon;
    Ok((0..path.len())
        .map(|k| path.x[k].abs() - path.occupation[k] - eps * path.m_sgn[k])
        .collect())
}

/// `min_t [ |X_t|_δ - (δ^γ/2^{γ+1}) t + ε|∫_0^t |X|_δ' dW| ]`.
pub fn pathwise_lower_bound_check(path: &PathSample, params: &TheoremParams) -> Result<f64> {
    if params.gamma.is_zero() {
        return Err(Error::RequiresGammaPositive);
    }
    if !(params.delta > 0.0) {
        return Err(Error::Mismatch("parameters carry no mollification radius".into()));
    }
    let sa = SmoothedAbs::new(params.delta);
    let rate = params.running_bound_rate();
    let eps = params.epsilon;
    let mut worst = f64::INFINITY;
    for k in 0..path.len() {
        let lhs = sa.value(path.x[k]);
        let rhs = rate * path.times[k] - eps * path.m_moll[k].abs();
        worst = worst.min(lhs - rhs);
    }
    Ok(worst)
}

/// Discretization tolerance derived from matched runs at `dt` and `dt/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceCalibration {
    pub kind: String,
    pub dt: f64,
    pub dt_half: f64,
    pub paths: usize,
    /// Constant `c` in `tol = c · scale(dt)`.
    pub constant: f64,
    pub tol: f64,
}

/// Richardson factor `1/(1 - 2^{-1/2})` turning the change under one halving
/// into an error estimate for a scheme of strong order 1/2.
pub const RICHARDSON_HALF_ORDER: f64 = 3.414_213_562_373_095;

/// Calibrates the tolerance of [`pathwise_lower_bound_check`]: per path the
/// margin is computed at `dt` and on the bridged path at `dt/2`, and
/// `tol = RICHARDSON_HALF_ORDER · max |margin(dt) - margin(dt/2)|`.
pub fn calibrate_running_bound_tolerance(
    config: &SimConfig,
    params: &TheoremParams,
    paths: &[u64],
) -> Result<ToleranceCalibration> {
    use rayon::prelude::*;
    let diffs: Vec<f64> = paths
        .par_iter()
        .map(|&p| -> Result<f64> {
            let coarse = simulate_path(config, params.delta, p)?;
            let fine = simulate_path_with(config, params.delta, p, PathOptions { refinement: 1, ..Default::default() })?;
            Ok((pathwise_lower_bound_check(&coarse, params)? - pathwise_lower_bound_check(&fine, params)?).abs())
        })
        .collect::<Result<_>>()?;
    let constant = RICHARDSON_HALF_ORDER * diffs.iter().copied().fold(0.0, f64::max);
    Ok(ToleranceCalibration {
        kind: "mollified_running_bound".into(),
        dt: config.dt,
        dt_half: 0.5 * config.dt,
        paths: paths.len(),
        constant,
        tol: constant,
    })
}

/// Calibrates `c` in `tol = c·sqrt(dt)·ε` for the Tanaka residual: the
/// largest normalized undershoot `-min_t L̂_t / (sqrt(dt) ε)` over the given
/// paths at `dt` and at `dt/2`.
pub fn calibrate_tanaka_tolerance(config: &SimConfig, paths: &[u64]) -> Result<ToleranceCalibration> {
    use rayon::prelude::*;
    let c = paths
        .par_iter()
        .map(|&p| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for level in 0..2u32 {
                let path = simulate_path_with(config, 0.0, p, PathOptions { refinement: level, ..Default::default() })?;
                let res = tanaka_residual(&path, config)?;
                let min = res.iter().copied().fold(f64::INFINITY, f64::min);
                let dt = config.dt / f64::from(1u32 << level);
                if min < 0.0 {
                    worst = worst.max(-min / (dt.sqrt() * config.epsilon));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ToleranceCalibration {
        kind: "tanaka_residual".into(),
        dt: config.dt,
        dt_half: 0.5 * config.dt,
        paths: paths.len(),
        constant: c,
        tol: c * config.dt.sqrt() * config.epsilon,
    })
}
