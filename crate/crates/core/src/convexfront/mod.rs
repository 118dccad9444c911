//! Convex minimization front end: builds the monotone inclusion from
//! `f, g_i, ℓ_i, h`, solves it, and evaluates objectives, duality gap and
//! KKT residuals.

mod gap;
mod problem;
mod qualification;
mod solve;
mod terms;

#[cfg(test)]
mod tests;

use thiserror::Error;

use crate::operators::OperatorError;
use crate::solver::SolverError;
use crate::spaces::SpaceError;

pub use gap::{
    conjugate_of_sum, dual_value, evaluate_gap, evaluate_gap_with_steps, infimal_convolution,
    kkt_residual, primal_value, GapReport,
};
pub use problem::{lower_to_inclusion, ConvexBlock, ConvexProblem};
pub use qualification::{check_qualification, Qualification};
pub use solve::{configure_steps, solve_convex, ConvexMonitor, ConvexSolution, SolveOptions, StepChoice};
pub use terms::{GradientCheck, SmoothTerm, StrongTerm, GRADIENT_CHECK_POINTS, GRADIENT_CHECK_TOL};

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{what} must be positive, got {value}")]
    InvalidConstant { what: String, value: f64 },
    #[error("gradient of h fails the finite-difference check (relative error {max_rel_error:e})")]
    GradientCheck { max_rel_error: f64 },
}
