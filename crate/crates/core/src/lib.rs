//! Primal-dual splitting for dual pairs of monotone inclusions that involve
//! cocoercive operators, with a convex-minimization front end and numerical
//! certificates for the operators the convergence argument relies on.

pub mod convexfront;
pub mod diagnostics;
pub mod operators;
pub mod sampling;
pub mod solver;
pub mod spaces;
