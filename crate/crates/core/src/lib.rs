//! Zero-noise selection for the one-dimensional equation
//! `dX = sgn(X)|X|^γ dt + ε dW`, `X_0 = 0`, `γ ∈ [0, 1)`.
//!
//! As `ε → 0` the law of `X` concentrates on the two extremal solutions
//! `±H_γ(t)` of the deterministic equation. This crate provides the extremal
//! trajectories and their comparison principle, a smoothed absolute value
//! standing in for local time, explicit non-asymptotic selection constants,
//! and a deterministic parallel Monte Carlo harness that checks them.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod checks;
pub mod error;
pub mod experiments;
pub mod mollifier;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod trajectories;

pub use bounds::{params_for, params_for_config, TheoremParams};
pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentOptions, ExperimentReport};
pub use sde::{simulate_path, SimConfig};
pub use trajectories::{extremal_value, GammaExponent};
