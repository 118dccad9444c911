use std::fmt;
use std::sync::Arc;

use super::OperatorError;
use crate::spaces::{dot, norm};

/// Relative tolerance used when testing membership in the sets behind
/// indicator functions (and their conjugates).
pub const FEASIBILITY_TOL: f64 = 1e-9;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ProxFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Catalog entries with closed-form proximity operators.
#[derive(Clone)]
pub enum ProxKind {
    /// `x ↦ (weight/2)‖x − center‖²`.
    SquaredDistance { weight: f64, center: Vec<f64> },
    /// `x ↦ weight·‖x‖₁`.
    L1 { weight: f64 },
    /// `x ↦ weight·‖x‖₂`.
    L2Norm { weight: f64 },
    /// Indicator of the box `[lower, upper]`; infinite bounds allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Indicator of `{0}`.
    ZeroIndicator,
    /// The zero function.
    Zero,
    /// `x ↦ ⟨coeffs, x⟩`.
    Linear { coeffs: Vec<f64> },
    /// User-supplied value and prox. The prox must be that of a proper
    /// lower semicontinuous convex function.
    Custom { evaluate: EvalFn, prox: ProxFn },
}

impl fmt::Debug for ProxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SquaredDistance { weight, center } => f
                .debug_struct("SquaredDistance")
                .field("weight", weight)
                .field("center", center)
                .finish(),
            Self::L1 { weight } => f.debug_struct("L1").field("weight", weight).finish(),
            Self::L2Norm { weight } => f.debug_struct("L2Norm").field("weight", weight).finish(),
            Self::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            Self::ZeroIndicator => f.write_str("ZeroIndicator"),
            Self::Zero => f.write_str("Zero"),
            Self::Linear { coeffs } => f.debug_struct("Linear").field("coeffs", coeffs).finish(),
            Self::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Per-coordinate description of an effective domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Product of closed intervals `[lower_j, upper_j]`, bounds possibly
    /// infinite, `lower_j == upper_j` allowed.
    Intervals { lower: Vec<f64>, upper: Vec<f64> },
    /// Not representable in the catalog.
    Unknown,
}

impl Domain {
    pub fn full(dim: usize) -> Self {
        Domain::Intervals {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn point(p: Vec<f64>) -> Self {
        Domain::Intervals {
            lower: p.clone(),
            upper: p,
        }
    }
}

/// A proper lower semicontinuous convex function known through its value
/// and its proximity operator.
#[derive(Debug, Clone)]
pub struct ProxFunction {
    dim: usize,
    kind: ProxKind,
}

impl ProxFunction {
    /// Validates `kind`'s parameters against `dim`.
    pub fn new(dim: usize, kind: ProxKind) -> Result<Self, OperatorError> {
        if dim == 0 {
            return Err(OperatorError::InvalidParams("dimension must be positive".into()));
        }
        let positive = |name: &str, w: f64| {
            if w > 0.0 && w.is_finite() {
                Ok(())
            } else {
                Err(OperatorError::InvalidParams(format!(
                    "{name}: weight must be positive and finite, got {w}"
                )))
            }
        };
        let sized = |name: &str, v: &[f64]| {
            if v.len() != dim {
                Err(OperatorError::InvalidParams(format!(
                    "{name}: expected {dim} entries, got {}",
                    v.len()
                )))
            } else if v.iter().any(|e| e.is_nan()) {
                Err(OperatorError::InvalidParams(format!("{name}: NaN entry")))
            } else {
                Ok(())
            }
        };
        match &kind {
            ProxKind::SquaredDistance { weight, center } => {
                positive("sqdist", *weight)?;
                sized("sqdist center", center)?;
                if center.iter().any(|e| !e.is_finite()) {
                    return Err(OperatorError::InvalidParams(
                        "sqdist center must be finite".into(),
                    ));
                }
            }
            ProxKind::L1 { weight } => positive("l1", *weight)?,
            ProxKind::L2Norm { weight } => positive("l2norm", *weight)?,
            ProxKind::Box { lower, upper } => {
                sized("box lower", lower)?;
                sized("box upper", upper)?;
                for (j, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                        return Err(OperatorError::InvalidParams(format!(
                            "box is empty in coordinate {j}: [{l}, {u}]"
                        )));
                    }
                }
            }
            ProxKind::Linear { coeffs } => {
                sized("linear", coeffs)?;
                if coeffs.iter().any(|e| !e.is_finite()) {
                    return Err(OperatorError::InvalidParams(
                        "linear coefficients must be finite".into(),
                    ));
                }
            }
            ProxKind::ZeroIndicator | ProxKind::Zero | ProxKind::Custom { .. } => {}
        }
        Ok(Self { dim, kind })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, ProxKind::Zero).expect("valid")
    }

    pub fn zero_indicator(dim: usize) -> Self {
        Self::new(dim, ProxKind::ZeroIndicator).expect("valid")
    }

    pub fn l1(dim: usize, weight: f64) -> Result<Self, OperatorError> {
        Self::new(dim, ProxKind::L1 { weight })
    }

    pub fn l2_norm(dim: usize, weight: f64) -> Result<Self, OperatorError> {
        Self::new(dim, ProxKind::L2Norm { weight })
    }

    pub fn squared_distance(weight: f64, center: Vec<f64>) -> Result<Self, OperatorError> {
        Self::new(center.len(), ProxKind::SquaredDistance { weight, center })
    }

    pub fn box_indicator(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OperatorError> {
        Self::new(lower.len(), ProxKind::Box { lower, upper })
    }

    /// Indicator of the single point `{p}`.
    pub fn point_indicator(p: Vec<f64>) -> Result<Self, OperatorError> {
        Self::box_indicator(p.clone(), p)
    }

    pub fn linear(coeffs: Vec<f64>) -> Result<Self, OperatorError> {
        Self::new(coeffs.len(), ProxKind::Linear { coeffs })
    }

    pub fn custom<E, P>(dim: usize, evaluate: E, prox: P) -> Self
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        P: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: ProxKind::Custom {
                evaluate: Arc::new(evaluate),
                prox: Arc::new(prox),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    /// Function value; `+∞` outside the domain.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ProxKind::SquaredDistance { weight, center } => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                0.5 * weight * d
            }
            ProxKind::L1 { weight } => weight * x.iter().map(|e| e.abs()).sum::<f64>(),
            ProxKind::L2Norm { weight } => weight * norm(x),
            ProxKind::Box { lower, upper } => {
                let inside = x.iter().zip(lower.iter().zip(upper)).all(|(e, (l, u))| {
                    *e >= l - FEASIBILITY_TOL * l.abs().max(1.0)
                        && *e <= u + FEASIBILITY_TOL * u.abs().max(1.0)
                });
                indicator(inside)
            }
            ProxKind::ZeroIndicator => indicator(x.iter().all(|e| e.abs() <= FEASIBILITY_TOL)),
            ProxKind::Zero => 0.0,
            ProxKind::Linear { coeffs } => dot(coeffs, x),
            ProxKind::Custom { evaluate, .. } => evaluate(x),
        }
    }

    /// `prox_{γf}(w) = argmin_y f(y) + ‖w − y‖²/(2γ)`.
    pub fn prox(&self, gamma: f64, w: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if !(gamma > 0.0) {
            return Err(OperatorError::NonPositiveScale(gamma));
        }
        if w.len() != self.dim {
            return Err(OperatorError::Dimension {
                expected: self.dim,
                found: w.len(),
            });
        }
        let out = match &self.kind {
            ProxKind::SquaredDistance { weight, center } => {
                let s = gamma * weight;
                w.iter()
                    .zip(center)
                    .map(|(wi, ci)| (wi + s * ci) / (1.0 + s))
                    .collect()
            }
            ProxKind::L1 { weight } => {
                let t = gamma * weight;
                w.iter().map(|&wi| soft_threshold(wi, t)).collect()
            }
            ProxKind::L2Norm { weight } => {
                let t = gamma * weight;
                let nw = norm(w);
                if nw <= t {
                    vec![0.0; self.dim]
                } else {
                    let s = 1.0 - t / nw;
                    w.iter().map(|wi| s * wi).collect()
                }
            }
            ProxKind::Box { lower, upper } => w
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(wi, (l, u))| wi.max(*l).min(*u))
                .collect(),
            ProxKind::ZeroIndicator => vec![0.0; self.dim],
            ProxKind::Zero => w.to_vec(),
            ProxKind::Linear { coeffs } => {
                w.iter().zip(coeffs).map(|(wi, c)| wi - gamma * c).collect()
            }
            ProxKind::Custom { prox, .. } => {
                let p = prox(gamma, w);
                if p.len() != self.dim {
                    return Err(OperatorError::Dimension {
                        expected: self.dim,
                        found: p.len(),
                    });
                }
                p
            }
        };
        Ok(out)
    }

    /// Closed-form conjugate `f*(u)` when the catalog knows it.
    pub fn conjugate(&self, u: &[f64]) -> Option<f64> {
        let value = match &self.kind {
            ProxKind::SquaredDistance { weight, center } => {
                dot(u, center) + dot(u, u) / (2.0 * weight)
            }
            ProxKind::L1 { weight } => indicator(
                u.iter()
                    .all(|e| e.abs() <= weight * (1.0 + FEASIBILITY_TOL)),
            ),
            ProxKind::L2Norm { weight } => indicator(norm(u) <= weight * (1.0 + FEASIBILITY_TOL)),
            ProxKind::Box { lower, upper } => {
                let mut acc = 0.0;
                for (ui, (l, h)) in u.iter().zip(lower.iter().zip(upper)) {
                    // support function of [l, h] at ui; an infinite side
                    // only counts once ui is clearly nonzero
                    let side = if *ui > 0.0 { h } else { l };
                    acc += if ui.abs() <= FEASIBILITY_TOL && side.is_infinite() {
                        0.0
                    } else if *ui == 0.0 {
                        0.0
                    } else {
                        ui * side
                    };
                }
                acc
            }
            ProxKind::ZeroIndicator => 0.0,
            ProxKind::Zero => indicator(u.iter().all(|e| e.abs() <= FEASIBILITY_TOL)),
            ProxKind::Linear { coeffs } => indicator(
                u.iter()
                    .zip(coeffs)
                    .all(|(a, c)| (a - c).abs() <= FEASIBILITY_TOL * c.abs().max(1.0)),
            ),
            ProxKind::Custom { .. } => return None,
        };
        Some(value)
    }

    /// Effective domain, as far as the catalog can describe it.
    pub fn domain(&self) -> Domain {
        match &self.kind {
            ProxKind::Box { lower, upper } => Domain::Intervals {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            ProxKind::ZeroIndicator => Domain::point(vec![0.0; self.dim]),
            ProxKind::Custom { .. } => Domain::Unknown,
            _ => Domain::full(self.dim),
        }
    }
}

fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `sign(w)·max(|w| − t, 0)`.
pub fn soft_threshold(w: f64, t: f64) -> f64 {
    w.signum() * (w.abs() - t).max(0.0)
}

/// Optional parameters of [`catalog_prox`]; which ones are required depends
/// on the entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogParams {
    pub weight: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub coeffs: Option<Vec<f64>>,
}

/// Names accepted by [`catalog_prox`].
pub const CATALOG_NAMES: &[&str] = &[
    "zero",
    "l1",
    "l2norm",
    "sqdist",
    "box",
    "zero-indicator",
    "linear",
];

/// Looks up a catalog entry by name.
///
/// `sqdist` defaults to weight 1 and center 0, `l1`/`l2norm` to weight 1,
/// `box` to unbounded sides, `linear` requires `coeffs`.
pub fn catalog_prox(
    name: &str,
    dim: usize,
    params: &CatalogParams,
) -> Result<ProxFunction, OperatorError> {
    let weight = params.weight.unwrap_or(1.0);
    let kind = match name {
        "zero" => ProxKind::Zero,
        "zero-indicator" => ProxKind::ZeroIndicator,
        "l1" => ProxKind::L1 { weight },
        "l2norm" => ProxKind::L2Norm { weight },
        "sqdist" => ProxKind::SquaredDistance {
            weight,
            center: params.center.clone().unwrap_or_else(|| vec![0.0; dim]),
        },
        "box" => ProxKind::Box {
            lower: params
                .lower
                .clone()
                .unwrap_or_else(|| vec![f64::NEG_INFINITY; dim]),
            upper: params
                .upper
                .clone()
                .unwrap_or_else(|| vec![f64::INFINITY; dim]),
        },
        "linear" => ProxKind::Linear {
            coeffs: params.coeffs.clone().ok_or_else(|| {
                OperatorError::InvalidParams("linear needs coefficients".into())
            })?,
        },
        other => return Err(OperatorError::UnknownKind(other.to_string())),
    };
    ProxFunction::new(dim, kind)
}
