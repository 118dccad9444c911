//! The relaxed inexact primal-dual splitting iteration.

mod errors;
mod iteration;
mod problem;
mod run;
mod steps;

#[cfg(test)]
mod tests;

use thiserror::Error;

use crate::operators::OperatorError;
use crate::spaces::{BlockId, SpaceError};

pub use errors::{ErrorComponents, ErrorSchedule, StepErrors};
pub use iteration::{iterate_once, IterState};
pub use problem::{DualBlock, ProblemSpec};
pub use run::{
    run, run_with, Divergence, IterRecord, IterationMonitor, Observation, RunOptions, RunReport,
    StoppingRule, Termination,
};
pub use steps::{
    beta_of, step_quantities, suggest_steps, validate_steps, LambdaSchedule, StepConfig, BETA_CAP,
    DEFAULT_EPSILON,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{what} must be positive, got {value}")]
    InvalidConstant { what: String, value: f64 },
    #[error("L_{block} is zero (norm bound 0)")]
    ZeroOperator { block: usize },
    #[error("adjoint of L_{block} is inconsistent (relative mismatch {mismatch:e})")]
    AdjointMismatch { block: usize, mismatch: f64 },
    #[error("{0}")]
    InvalidSteps(String),
    #[error(
        "step sizes are inadmissible: 2ρβ = {:.6} ≤ 1 (ρ = {rho}, β = {beta}); \
         use the unsafe-steps override to run anyway",
        2.0 * rho * beta
    )]
    Inadmissible { rho: f64, beta: f64 },
    #[error("λ_{iteration} = {value} is outside the admissible range")]
    LambdaOutOfRange { iteration: usize, value: f64 },
    #[error("error schedule is not declared summable")]
    NonSummableErrors,
    #[error("non-finite value in block {block} at iteration {iteration}")]
    Diverged { iteration: usize, block: BlockId },
}
