use std::fmt;
use std::sync::Arc;

use super::{ProblemSpec, SolverError};

/// Stand-in for `β = min{μ, ν_1, …, ν_m}` when every constant is `+∞`.
pub const BETA_CAP: f64 = 1e12;
/// Default lower bound `ε` on the relaxation parameters.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Relaxation parameters `λ_n`.
#[derive(Clone)]
pub enum LambdaSchedule {
    Constant(f64),
    /// `λ_n = values[n]`, the last value repeating.
    Sequence(Vec<f64>),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for LambdaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(l) => write!(f, "Constant({l})"),
            Self::Sequence(v) => write!(f, "Sequence(len={})", v.len()),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl LambdaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Self::Constant(l) => *l,
            Self::Sequence(v) => v
                .get(n)
                .or_else(|| v.last())
                .copied()
                .unwrap_or(f64::NAN),
            Self::Custom(f) => f(n),
        }
    }
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self::Constant(1.0)
    }
}

/// Step sizes `τ, σ_i`, relaxation schedule, and the derived quantities of
/// the admissibility condition `2ρβ > 1`.
#[derive(Debug, Clone)]
pub struct StepConfig {
    tau: f64,
    sigmas: Vec<f64>,
    pub lambda: LambdaSchedule,
    pub epsilon: f64,
    /// Accept constant `λ ∈ ]0,2[` instead of `[ε,1]`. Convergence is only
    /// known for exact iterations with a single block, `C = 0`, `D⁻¹ = 0`,
    /// `r = 0` and `z = 0`.
    pub allow_over_relaxation: bool,
    rho: f64,
    beta: f64,
    delta: f64,
    admissible: bool,
}

impl StepConfig {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn admissible(&self) -> bool {
        self.admissible
    }

    pub fn with_lambda(mut self, lambda: LambdaSchedule) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_over_relaxation(mut self, allow: bool) -> Self {
        self.allow_over_relaxation = allow;
        self
    }

    /// Checks `λ_n` against `[ε,1]` (or `]0,2[` under over-relaxation).
    pub fn check_lambda(&self, n: usize) -> Result<f64, SolverError> {
        let value = self.lambda.at(n);
        let ok = if self.allow_over_relaxation {
            value > 0.0 && value < 2.0
        } else {
            value >= self.epsilon && value <= 1.0
        };
        if ok {
            Ok(value)
        } else {
            Err(SolverError::LambdaOutOfRange {
                iteration: n,
                value,
            })
        }
    }
}

/// `(ρ, δ)` for given steps, weights and norm bounds:
/// `ρ = min{τ⁻¹, σ_i⁻¹}·(1 − √(τ Σ σ_i ω_i ‖L_i‖²))`,
/// `δ = (√(τ Σ σ_i ω_i ‖L_i‖²))⁻¹ − 1`.
pub fn step_quantities(tau: f64, sigmas: &[f64], weights: &[f64], norms: &[f64]) -> (f64, f64) {
    let mut weighted = 0.0;
    for ((s, w), l) in sigmas.iter().zip(weights).zip(norms) {
        weighted += s * w * l * l;
    }
    let root = (tau * weighted).sqrt();
    let min_inv = sigmas
        .iter()
        .map(|s| 1.0 / s)
        .fold(1.0 / tau, f64::min);
    (min_inv * (1.0 - root), 1.0 / root - 1.0)
}

/// `β = min{μ, ν_1, …, ν_m}`, capped when every constant is infinite.
pub fn beta_of(mu: f64, nus: &[f64]) -> f64 {
    let beta = nus.iter().copied().fold(mu, f64::min);
    if beta.is_infinite() {
        BETA_CAP
    } else {
        beta
    }
}

/// Fills `ρ, β, δ` and the admissibility verdict for the given steps.
/// An inadmissible choice is reported in the verdict, not as an error.
pub fn validate_steps(
    spec: &ProblemSpec,
    tau: f64,
    sigmas: &[f64],
) -> Result<StepConfig, SolverError> {
    let m = spec.layout().num_blocks();
    if sigmas.len() != m {
        return Err(SolverError::Dimension {
            what: "σ".into(),
            expected: m,
            found: sigmas.len(),
        });
    }
    if !(tau > 0.0 && tau.is_finite()) || sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(SolverError::InvalidSteps(format!(
            "τ and σ_i must be positive and finite (τ = {tau}, σ = {sigmas:?})"
        )));
    }
    let norms = spec.norm_bounds();
    let (rho, delta) = step_quantities(tau, sigmas, spec.layout().weights(), &norms);
    let beta = beta_of(spec.mu(), &spec.nus());
    Ok(StepConfig {
        tau,
        sigmas: sigmas.to_vec(),
        lambda: LambdaSchedule::default(),
        epsilon: DEFAULT_EPSILON,
        allow_over_relaxation: false,
        rho,
        beta,
        delta,
        admissible: 2.0 * rho * beta > 1.0,
    })
}

/// `τ = σ_1 = … = σ_m = safety / (1/(2β) + √(Σ ω_i ‖L_i‖²))`, admissible for
/// every `safety ∈ ]0,1[`.
pub fn suggest_steps(spec: &ProblemSpec, safety: f64) -> Result<StepConfig, SolverError> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(SolverError::InvalidSteps(format!(
            "safety factor must lie in ]0,1[, got {safety}"
        )));
    }
    let norms = spec.norm_bounds();
    let weighted: f64 = spec
        .layout()
        .weights()
        .iter()
        .zip(&norms)
        .map(|(w, l)| w * l * l)
        .sum();
    if !(weighted > 0.0) {
        return Err(SolverError::ZeroOperator { block: 0 });
    }
    let beta = beta_of(spec.mu(), &spec.nus());
    let step = safety / (1.0 / (2.0 * beta) + weighted.sqrt());
    validate_steps(spec, step, &vec![step; spec.layout().num_blocks()])
}
