use std::fmt;
use std::sync::Arc;

use super::{OperatorError, ProxFunction, ProxKind};
use crate::sampling;
use crate::spaces::{dot, sub};

type ResolventFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum ResolventKind {
    /// `A = 0`, `J_{γA} = Id`.
    Zero,
    /// `A = a·Id` with `a ≥ 0`.
    ScaledIdentity(f64),
    /// `A = ∂f`, `J_{γA} = prox_{γf}`.
    Subdifferential(ProxFunction),
    Custom(ResolventFn),
}

/// A maximally monotone operator known through its resolvents
/// `J_{γA} = (Id + γA)⁻¹`.
#[derive(Clone)]
pub struct ResolventOp {
    dim: usize,
    kind: ResolventKind,
}

impl fmt::Debug for ResolventOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ResolventKind::Zero => "zero".to_string(),
            ResolventKind::ScaledIdentity(a) => format!("{a}*Id"),
            ResolventKind::Subdifferential(g) => format!("subdifferential({:?})", g.kind()),
            ResolventKind::Custom(_) => "custom".to_string(),
        };
        write!(f, "ResolventOp({kind}, dim={})", self.dim)
    }
}

impl ResolventOp {
    /// The zero operator; its resolvent is the identity and its inverse
    /// resolvent is identically zero.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            kind: ResolventKind::Zero,
        }
    }

    /// `x ↦ a·x`, `a ≥ 0`.
    pub fn scaled_identity(dim: usize, a: f64) -> Result<Self, OperatorError> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(OperatorError::InvalidParams(format!(
                "scaled identity needs a finite a ≥ 0, got {a}"
            )));
        }
        Ok(Self {
            dim,
            kind: ResolventKind::ScaledIdentity(a),
        })
    }

    /// `∂f` with resolvent `prox_{γf}`. For a box indicator this is the
    /// normal cone of the box and the resolvent is the projection.
    pub fn subdifferential(f: ProxFunction) -> Self {
        Self {
            dim: f.dim(),
            kind: ResolventKind::Subdifferential(f),
        }
    }

    /// User-supplied `(γ, w) ↦ J_{γA}(w)`; must be the resolvent of a
    /// maximally monotone operator and free of hidden state.
    pub fn from_fn<F>(dim: usize, resolvent: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: ResolventKind::Custom(Arc::new(resolvent)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The underlying function when the operator is a subdifferential.
    pub fn as_subdifferential(&self) -> Option<&ProxFunction> {
        match &self.kind {
            ResolventKind::Subdifferential(f) => Some(f),
            _ => None,
        }
    }

    /// `J_{γA}(w)`.
    pub fn resolvent(&self, gamma: f64, w: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if !(gamma > 0.0) {
            return Err(OperatorError::NonPositiveScale(gamma));
        }
        if w.len() != self.dim {
            return Err(OperatorError::Dimension {
                expected: self.dim,
                found: w.len(),
            });
        }
        match &self.kind {
            ResolventKind::Zero => Ok(w.to_vec()),
            ResolventKind::ScaledIdentity(a) => {
                let s = 1.0 + gamma * a;
                Ok(w.iter().map(|e| e / s).collect())
            }
            ResolventKind::Subdifferential(f) => f.prox(gamma, w),
            ResolventKind::Custom(r) => {
                let out = r(gamma, w);
                if out.len() != self.dim {
                    return Err(OperatorError::Dimension {
                        expected: self.dim,
                        found: out.len(),
                    });
                }
                Ok(out)
            }
        }
    }

    /// `A x` for single-valued catalog operators; `None` otherwise.
    pub fn evaluate(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            ResolventKind::Zero => Some(vec![0.0; x.len()]),
            ResolventKind::ScaledIdentity(a) => Some(x.iter().map(|e| a * e).collect()),
            _ => None,
        }
    }
}

/// `J_{σB⁻¹}(v) = v − σ·J_{σ⁻¹B}(σ⁻¹v)`.
pub fn resolvent_of_inverse(
    b: &ResolventOp,
    sigma: f64,
    v: &[f64],
) -> Result<Vec<f64>, OperatorError> {
    if !(sigma > 0.0) {
        return Err(OperatorError::NonPositiveScale(sigma));
    }
    // The inverse of the zero operator has full graph {0} × G, so the
    // resolvent is exactly zero; skip the roundoff of the general formula.
    match &b.kind {
        ResolventKind::Zero if v.len() == b.dim => return Ok(vec![0.0; v.len()]),
        ResolventKind::Subdifferential(g) => return prox_conjugate(g, sigma, v),
        _ => {}
    }
    let scaled: Vec<f64> = v.iter().map(|e| e / sigma).collect();
    let j = b.resolvent(1.0 / sigma, &scaled)?;
    Ok(v.iter().zip(&j).map(|(vi, ji)| vi - sigma * ji).collect())
}

/// `prox_{σg*}(v) = v − σ·prox_{σ⁻¹g}(σ⁻¹v)` (Moreau decomposition).
pub fn prox_conjugate(
    g: &ProxFunction,
    sigma: f64,
    v: &[f64],
) -> Result<Vec<f64>, OperatorError> {
    if !(sigma > 0.0) {
        return Err(OperatorError::NonPositiveScale(sigma));
    }
    if matches!(g.kind(), ProxKind::Zero) && v.len() == g.dim() {
        return Ok(vec![0.0; v.len()]);
    }
    let scaled: Vec<f64> = v.iter().map(|e| e / sigma).collect();
    let p = g.prox(1.0 / sigma, &scaled)?;
    Ok(v.iter().zip(&p).map(|(vi, pi)| vi - sigma * pi).collect())
}

#[derive(Clone)]
enum CocoerciveKind {
    Zero,
    Scaled(f64),
    Custom(MapFn),
}

/// A single-valued cocoercive operator `T` with constant `β`:
/// `⟨x − y, Tx − Ty⟩ ≥ β‖Tx − Ty‖²`. `β = +∞` encodes `T = 0`.
#[derive(Clone)]
pub struct CocoerciveOp {
    dim: usize,
    constant: f64,
    kind: CocoerciveKind,
}

impl fmt::Debug for CocoerciveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            CocoerciveKind::Zero => "zero".to_string(),
            CocoerciveKind::Scaled(a) => format!("{a}*Id"),
            CocoerciveKind::Custom(_) => "custom".to_string(),
        };
        write!(
            f,
            "CocoerciveOp({kind}, dim={}, constant={})",
            self.dim, self.constant
        )
    }
}

impl CocoerciveOp {
    /// The zero operator, constant `+∞`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            constant: f64::INFINITY,
            kind: CocoerciveKind::Zero,
        }
    }

    /// `x ↦ a·x` with `a > 0`, constant `1/a`.
    pub fn scaled_identity(dim: usize, a: f64) -> Result<Self, OperatorError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(OperatorError::InvalidParams(format!(
                "scaled identity needs a finite a > 0, got {a}"
            )));
        }
        Ok(Self {
            dim,
            constant: 1.0 / a,
            kind: CocoerciveKind::Scaled(a),
        })
    }

    /// `apply` with a claimed cocoercivity constant.
    pub fn from_fn<F>(dim: usize, constant: f64, apply: F) -> Result<Self, OperatorError>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(constant > 0.0) {
            return Err(OperatorError::InvalidParams(format!(
                "cocoercivity constant must be positive, got {constant}"
            )));
        }
        Ok(Self {
            dim,
            constant,
            kind: CocoerciveKind::Custom(Arc::new(apply)),
        })
    }

    /// Same map, different claimed constant. Used to overstate constants in
    /// diagnostics; the claim is not checked.
    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CocoerciveKind::Zero)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "CocoerciveOp::apply: input length");
        match &self.kind {
            CocoerciveKind::Zero => vec![0.0; self.dim],
            CocoerciveKind::Scaled(a) => x.iter().map(|e| a * e).collect(),
            CocoerciveKind::Custom(f) => f(x),
        }
    }
}

/// Outcome of [`check_cocoercive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocoercivityReport {
    /// Smallest `⟨x−y, Tx−Ty⟩ − β‖Tx−Ty‖²` over the sampled pairs.
    pub min_margin: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Margin below which [`check_cocoercive`] fails.
pub const COCOERCIVE_TOL: f64 = 1e-8;

/// Samples random pairs and reports the worst cocoercivity margin. With
/// `β = +∞` only `T ≡ 0` can pass, and the margin is `0` for it.
pub fn check_cocoercive(t: &CocoerciveOp, samples: usize, seed: u64) -> CocoercivityReport {
    let mut rng = sampling::seeded(seed);
    let mut min_margin = f64::INFINITY;
    for _ in 0..samples.max(1) {
        let x = sampling::gaussian(&mut rng, t.dim);
        let y = sampling::gaussian(&mut rng, t.dim);
        let dt = sub(&t.apply(&x), &t.apply(&y));
        let dd = dot(&dt, &dt);
        let penalty = if dd == 0.0 { 0.0 } else { t.constant * dd };
        let margin = dot(&sub(&x, &y), &dt) - penalty;
        min_margin = min_margin.min(margin);
    }
    CocoercivityReport {
        min_margin,
        samples: samples.max(1),
        passed: min_margin >= -COCOERCIVE_TOL,
    }
}
