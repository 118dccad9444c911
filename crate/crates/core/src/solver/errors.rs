use std::fmt;
use std::sync::Arc;

use crate::sampling::{seeded_stream, unit_vector};
use crate::spaces::SpaceLayout;

/// Perturbations injected at one iteration: `a₁ₙ, a₂ₙ ∈ H` and per-block
/// `b_{i,n}, c_{i,n} ∈ G_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepErrors {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl StepErrors {
    pub fn zeros(layout: &SpaceLayout) -> Self {
        let n = layout.dim_primal();
        let duals: Vec<Vec<f64>> = layout.dual_dims().iter().map(|&g| vec![0.0; g]).collect();
        Self {
            a1: vec![0.0; n],
            a2: vec![0.0; n],
            b: duals.clone(),
            c: duals,
        }
    }

    pub(crate) fn matches(&self, layout: &SpaceLayout) -> bool {
        let n = layout.dim_primal();
        let g = layout.dual_dims();
        self.a1.len() == n
            && self.a2.len() == n
            && self.b.len() == g.len()
            && self.c.len() == g.len()
            && self.b.iter().zip(g).all(|(b, &d)| b.len() == d)
            && self.c.iter().zip(g).all(|(c, &d)| c.len() == d)
    }
}

/// Which of the four error terms a generated schedule perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorComponents {
    pub a1: bool,
    pub a2: bool,
    pub b: bool,
    pub c: bool,
}

impl ErrorComponents {
    pub const ALL: Self = Self {
        a1: true,
        a2: true,
        b: true,
        c: true,
    };
}

type ErrorFn = Arc<dyn Fn(usize, &SpaceLayout) -> Option<StepErrors> + Send + Sync>;

/// Sequence of per-iteration errors.
#[derive(Clone, Default)]
pub enum ErrorSchedule {
    /// Exact iterations.
    #[default]
    Zero,
    /// Every enabled term at step `n` is `amplitude · decayⁿ · u` with `u` a
    /// seeded unit vector; summable whenever `decay < 1`.
    Geometric {
        amplitude: f64,
        decay: f64,
        seed: u64,
        components: ErrorComponents,
    },
    Custom {
        errors: ErrorFn,
        declared_summable: bool,
    },
}

impl fmt::Debug for ErrorSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Geometric {
                amplitude,
                decay,
                seed,
                components,
            } => f
                .debug_struct("Geometric")
                .field("amplitude", amplitude)
                .field("decay", decay)
                .field("seed", seed)
                .field("components", components)
                .finish(),
            Self::Custom {
                declared_summable, ..
            } => f
                .debug_struct("Custom")
                .field("declared_summable", declared_summable)
                .finish_non_exhaustive(),
        }
    }
}

impl ErrorSchedule {
    pub fn geometric(amplitude: f64, decay: f64, seed: u64) -> Self {
        Self::Geometric {
            amplitude,
            decay,
            seed,
            components: ErrorComponents::ALL,
        }
    }

    pub fn custom<F>(declared_summable: bool, errors: F) -> Self
    where
        F: Fn(usize, &SpaceLayout) -> Option<StepErrors> + Send + Sync + 'static,
    {
        Self::Custom {
            errors: Arc::new(errors),
            declared_summable,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Geometric { amplitude, .. } => *amplitude == 0.0,
            Self::Custom { .. } => false,
        }
    }

    pub fn declared_summable(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Geometric {
                amplitude, decay, ..
            } => amplitude.is_finite() && decay.abs() < 1.0,
            Self::Custom {
                declared_summable, ..
            } => *declared_summable,
        }
    }

    /// Errors for step `n`; `None` means exact. Returns `Err` with a message
    /// if a custom schedule produced the wrong shapes.
    pub fn at(&self, n: usize, layout: &SpaceLayout) -> Result<Option<StepErrors>, String> {
        match self {
            Self::Zero => Ok(None),
            Self::Geometric {
                amplitude,
                decay,
                seed,
                components,
            } => {
                if *amplitude == 0.0 {
                    return Ok(None);
                }
                // All terms are always drawn so that toggling one component
                // leaves the others unchanged.
                let mut rng = seeded_stream(*seed, n as u64);
                let scale = amplitude * decay.powi(n.min(i32::MAX as usize) as i32);
                let mut draw = |dim: usize, on: bool| {
                    let u = unit_vector(&mut rng, dim);
                    if on {
                        u.into_iter().map(|e| scale * e).collect()
                    } else {
                        vec![0.0; dim]
                    }
                };
                let np = layout.dim_primal();
                let a1 = draw(np, components.a1);
                let a2 = draw(np, components.a2);
                let b = layout.dual_dims().iter().map(|&g| draw(g, components.b)).collect();
                let c = layout.dual_dims().iter().map(|&g| draw(g, components.c)).collect();
                Ok(Some(StepErrors { a1, a2, b, c }))
            }
            Self::Custom { errors, .. } => match errors(n, layout) {
                Some(e) if !e.matches(layout) => {
                    Err(format!("error schedule produced wrong shapes at step {n}"))
                }
                other => Ok(other),
            },
        }
    }
}
