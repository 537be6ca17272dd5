//! Path-parallel Monte Carlo drivers.
//!
//! Samples are collected in path-index order before aggregation, so results
//! match the sequential estimators in `bubble_core::mc` bit for bit.

use bubble_core::mc::{self, StoppingRule};
use bubble_core::{McEstimate, ModelParams, SimConfig};
use rayon::prelude::*;

use crate::error::Result;

pub fn par_estimate<F: Fn(u64) -> f64 + Send + Sync>(paths: usize, sample: F) -> Result<McEstimate> {
    let samples: Vec<f64> = (0..paths as u64).into_par_iter().map(sample).collect();
    Ok(mc::finish(&samples)?)
}

pub fn par_intrinsic(params: &ModelParams, cfg: &SimConfig) -> Result<McEstimate> {
    mc::check_inputs(params, cfg)?;
    if cfg.horizon < mc::min_intrinsic_horizon(params) * (1.0 - 1e-12) {
        return Err(bubble_core::Error::Domain("intrinsic-value horizon must be at least 12/lambda".into()).into());
    }
    par_estimate(cfg.paths, |p| mc::intrinsic_sample(params, cfg, p))
}

pub fn par_stopping_value<C: Fn(f64) -> f64 + Send + Sync>(
    params: &ModelParams,
    cfg: &SimConfig,
    rule: StoppingRule,
    continuation: C,
) -> Result<McEstimate> {
    mc::check_inputs(params, cfg)?;
    par_estimate(cfg.paths, |p| mc::stopping_sample(params, cfg, rule, &continuation, p))
}
