//! Operator algebra: bounded linear maps with adjoints, maximally monotone
//! operators given by their resolvents, cocoercive operators, and the
//! proximity-operator catalog.

mod linear;
mod monotone;
mod prox;

use thiserror::Error;

pub use linear::{
    certify_norm, estimate_norm, CertifiedNorm, LinearMap, LinearOp, NormEstimate,
    NORM_MAX_ITER, NORM_SAFETY, NORM_SEED, NORM_TOL,
};
pub use monotone::{
    check_cocoercive, prox_conjugate, resolvent_of_inverse, CocoerciveOp, CocoercivityReport,
    ResolventOp, COCOERCIVE_TOL,
};
pub use prox::{
    catalog_prox, soft_threshold, CatalogParams, Domain, ProxFunction, ProxKind, CATALOG_NAMES,
    FEASIBILITY_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("unknown catalog entry '{0}'")]
    UnknownKind(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("expected a vector of length {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}
