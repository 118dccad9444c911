use std::fmt;
use std::sync::Arc;

use crate::operators::{CocoerciveOp, Domain};
use crate::sampling::{gaussian, seeded};
use crate::spaces::{dot, norm};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Points used by [`SmoothTerm::gradient_check`] at construction time.
pub const GRADIENT_CHECK_POINTS: usize = 20;
/// Admissible relative error of the central-difference gradient check.
pub const GRADIENT_CHECK_TOL: f64 = 1e-5;

#[derive(Clone)]
enum SmoothKind {
    Zero,
    /// `(weight/2)‖x − center‖²`.
    Quadratic { weight: f64, center: Vec<f64> },
    Custom { value: ValueFn, grad: GradFn },
}

/// Convex differentiable `h` whose gradient is `μ⁻¹`-Lipschitz, hence
/// `μ`-cocoercive.
#[derive(Clone)]
pub struct SmoothTerm {
    dim: usize,
    mu: f64,
    kind: SmoothKind,
}

impl fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SmoothKind::Zero => "zero".to_string(),
            SmoothKind::Quadratic { weight, .. } => format!("quadratic(weight={weight})"),
            SmoothKind::Custom { .. } => "custom".to_string(),
        };
        write!(f, "SmoothTerm({kind}, dim={}, mu={})", self.dim, self.mu)
    }
}

/// Outcome of a central-difference gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub points: usize,
    pub passed: bool,
}

impl SmoothTerm {
    /// `h = 0`, `μ = +∞`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            mu: f64::INFINITY,
            kind: SmoothKind::Zero,
        }
    }

    /// `(weight/2)‖x − center‖²`, `μ = 1/weight`.
    pub fn quadratic(weight: f64, center: Vec<f64>) -> Option<Self> {
        if !(weight > 0.0 && weight.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(Self {
            dim: center.len(),
            mu: 1.0 / weight,
            kind: SmoothKind::Quadratic { weight, center },
        })
    }

    pub fn custom<V, G>(dim: usize, mu: f64, value: V, grad: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            mu,
            kind: SmoothKind::Custom {
                value: Arc::new(value),
                grad: Arc::new(grad),
            },
        }
    }

    /// Replaces the claimed constant. Not checked.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SmoothKind::Zero)
    }

    /// `(weight, center)` for the quadratic entry.
    pub fn as_quadratic(&self) -> Option<(f64, &[f64])> {
        match &self.kind {
            SmoothKind::Quadratic { weight, center } => Some((*weight, center)),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SmoothKind::Zero => 0.0,
            SmoothKind::Quadratic { weight, center } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                0.5 * weight * dot(&d, &d)
            }
            SmoothKind::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            SmoothKind::Zero => vec![0.0; x.len()],
            SmoothKind::Quadratic { weight, center } => {
                x.iter().zip(center).map(|(a, c)| weight * (a - c)).collect()
            }
            SmoothKind::Custom { grad, .. } => grad(x),
        }
    }

    /// Compares `∇h` with central differences at `points` seeded Gaussian
    /// points. The error at a point is `‖fd − ∇h‖ / max(‖∇h‖, 1)`.
    pub fn gradient_check(&self, points: usize, seed: u64) -> GradientCheck {
        let mut rng = seeded(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let x = gaussian(&mut rng, self.dim);
            let g = self.gradient(&x);
            if g.len() != self.dim {
                worst = f64::INFINITY;
                break;
            }
            let mut fd = vec![0.0; self.dim];
            let mut probe = x.clone();
            for j in 0..self.dim {
                let step = 1e-5 * x[j].abs().max(1.0);
                probe[j] = x[j] + step;
                let up = self.value(&probe);
                probe[j] = x[j] - step;
                let down = self.value(&probe);
                probe[j] = x[j];
                fd[j] = (up - down) / (2.0 * step);
            }
            let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
            let err = norm(&diff) / norm(&g).max(1.0);
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
        }
        GradientCheck {
            max_rel_error: worst,
            points,
            passed: worst <= GRADIENT_CHECK_TOL,
        }
    }

    /// `∇h` as a `μ`-cocoercive operator.
    pub fn to_cocoercive(&self) -> CocoerciveOp {
        match &self.kind {
            SmoothKind::Zero => CocoerciveOp::zero(self.dim).with_constant(self.mu),
            _ => {
                let term = self.clone();
                CocoerciveOp::from_fn(self.dim, f64::INFINITY, move |x| term.gradient(x))
                    .expect("positive constant")
                    .with_constant(self.mu)
            }
        }
    }
}

#[derive(Clone)]
enum StrongKind {
    ZeroIndicator,
    /// `(ν/2)‖·‖²`.
    Quadratic,
    Custom {
        grad_conj: GradFn,
        conj_value: Option<ValueFn>,
    },
}

/// `ν`-strongly convex `ℓ`, known through `∇ℓ*` (which is `ν`-cocoercive)
/// and optionally `ℓ*`.
#[derive(Clone)]
pub struct StrongTerm {
    dim: usize,
    nu: f64,
    kind: StrongKind,
}

impl fmt::Debug for StrongTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            StrongKind::ZeroIndicator => "zero-indicator",
            StrongKind::Quadratic => "quadratic",
            StrongKind::Custom { .. } => "custom",
        };
        write!(f, "StrongTerm({kind}, dim={}, nu={})", self.dim, self.nu)
    }
}

impl StrongTerm {
    /// Indicator of `{0}`: `ℓ* = 0`, `ν = +∞`.
    pub fn zero_indicator(dim: usize) -> Self {
        Self {
            dim,
            nu: f64::INFINITY,
            kind: StrongKind::ZeroIndicator,
        }
    }

    /// `(ν/2)‖·‖²`, with `ℓ*(v) = ‖v‖²/(2ν)` and `∇ℓ*(v) = v/ν`.
    pub fn quadratic(dim: usize, nu: f64) -> Option<Self> {
        (nu > 0.0 && nu.is_finite()).then_some(Self {
            dim,
            nu,
            kind: StrongKind::Quadratic,
        })
    }

    pub fn custom<G>(dim: usize, nu: f64, grad_conj: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            nu,
            kind: StrongKind::Custom {
                grad_conj: Arc::new(grad_conj),
                conj_value: None,
            },
        }
    }

    /// Supplies `ℓ*` for a custom term so dual objectives can be evaluated.
    pub fn with_conjugate<V>(mut self, value: V) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if let StrongKind::Custom { conj_value, .. } = &mut self.kind {
            *conj_value = Some(Arc::new(value));
        }
        self
    }

    /// Replaces the claimed constant. Not checked.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn is_zero_indicator(&self) -> bool {
        matches!(self.kind, StrongKind::ZeroIndicator)
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, StrongKind::Quadratic)
    }

    pub fn grad_conjugate(&self, v: &[f64]) -> Vec<f64> {
        match &self.kind {
            StrongKind::ZeroIndicator => vec![0.0; v.len()],
            StrongKind::Quadratic => v.iter().map(|e| e / self.nu).collect(),
            StrongKind::Custom { grad_conj, .. } => grad_conj(v),
        }
    }

    /// `ℓ*(v)` when known.
    pub fn conjugate(&self, v: &[f64]) -> Option<f64> {
        match &self.kind {
            StrongKind::ZeroIndicator => Some(0.0),
            StrongKind::Quadratic => Some(dot(v, v) / (2.0 * self.nu)),
            StrongKind::Custom { conj_value, .. } => conj_value.as_ref().map(|c| c(v)),
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            StrongKind::ZeroIndicator => Domain::point(vec![0.0; self.dim]),
            StrongKind::Quadratic => Domain::full(self.dim),
            StrongKind::Custom { .. } => Domain::Unknown,
        }
    }

    /// `∇ℓ*` as a `ν`-cocoercive operator.
    pub fn to_cocoercive(&self) -> CocoerciveOp {
        match &self.kind {
            StrongKind::ZeroIndicator => CocoerciveOp::zero(self.dim).with_constant(self.nu),
            StrongKind::Quadratic => CocoerciveOp::scaled_identity(self.dim, 1.0 / self.nu)
                .expect("finite positive ν"),
            StrongKind::Custom { .. } => {
                let term = self.clone();
                CocoerciveOp::from_fn(self.dim, f64::INFINITY, move |v| term.grad_conjugate(v))
                    .expect("positive constant")
                    .with_constant(self.nu)
            }
        }
    }
}
