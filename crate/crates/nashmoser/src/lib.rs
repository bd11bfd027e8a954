//! Nash-Moser iteration over smoothable Banach scales, with a plain Newton
//! fallback.
//!
//! Elements of both scales are stored as flat `Vec<f64>` coefficient vectors.
//! The scales supply norms and smoothing operators, the problem supplies the
//! nonlinear map and an approximate inverse of its derivative.

mod engine;
mod newton;
mod report;
mod scale;

pub use engine::{IterationState, NashMoser};
pub use newton::Newton;
pub use report::{fit_slope, IterationReport, Outcome, StepRecord};
pub use scale::{Indices, Problem, Scale, Stopping};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmError {
    #[error("map evaluation failed: {0}")]
    Map(String),
    #[error("inverse evaluation failed: {0}")]
    Inverse(String),
    #[error("smoothed iterate left the admissible ball at step {0}")]
    Inadmissible(usize),
    #[error("norm budget exceeded at step {step}: {norm:.3e} > {budget:.3e}")]
    Budget { step: usize, norm: f64, budget: f64 },
    #[error("residual grew at step {step}: {prev:.3e} -> {now:.3e}")]
    NonMonotone { step: usize, prev: f64, now: f64 },
    #[error("no convergence after {0} steps")]
    MaxSteps(usize),
    #[error("index hypothesis violated: beta = {beta} is not below (r+R)/2 = {half}")]
    Indices { beta: f64, half: f64 },
    #[error("non-finite value encountered at step {0}")]
    NonFinite(usize),
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
