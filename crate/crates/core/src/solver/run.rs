use std::time::Instant;

use super::iteration::{intermediate, iterate_once, IterState};
use super::{ErrorSchedule, ProblemSpec, SolverError, StepConfig};
use crate::spaces::{norm_weighted_unchecked, BlockId, BlockVector};

/// When to stop. A run stops at the first of: fixed-point residual
/// `≤ tol·(1 + ‖(xₙ, vₙ)‖)`, monitor-reported KKT residual `≤ kkt_tol`, or
/// `max_iter` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub tol: f64,
    pub max_iter: usize,
    pub kkt_tol: Option<f64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            kkt_tol: None,
        }
    }
}

impl StoppingRule {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            kkt_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIter => "max_iter",
            Self::Diverged => "diverged",
        }
    }
}

/// Optional per-iteration quantities supplied by a monitor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Observation {
    pub kkt_residual: Option<f64>,
    pub primal_value: Option<f64>,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
}

/// Called after every step with the new state.
pub trait IterationMonitor {
    fn observe(&self, state: &IterState) -> Observation;
}

/// One history row; `iter` is the index `n` of the step `n → n+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// `‖(xₙ₊₁, vₙ₊₁) − (xₙ, vₙ)‖` in the weighted norm.
    pub step_norm: f64,
    /// Weighted norm of `(xₙ, vₙ)` minus its exact, unrelaxed update.
    pub fixed_point_residual: f64,
    pub kkt_residual: Option<f64>,
    pub primal_value: Option<f64>,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    /// Milliseconds since the run started.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub iteration: usize,
    pub block: BlockId,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub iterations: usize,
    pub termination: Termination,
    pub history: Vec<IterRecord>,
    /// Last finite state.
    pub final_state: IterState,
    /// `(x₀, v₀), …, (x_N, v_N)` when requested.
    pub trajectory: Option<Vec<BlockVector>>,
    pub errors_injected: bool,
    pub divergence: Option<Divergence>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

#[derive(Default, Clone, Copy)]
pub struct RunOptions<'a> {
    /// Run even if the steps are inadmissible or the error schedule is not
    /// declared summable.
    pub unsafe_steps: bool,
    pub record_trajectory: bool,
    pub monitor: Option<&'a dyn IterationMonitor>,
}

/// Runs the iteration from `(x0, v0)` with default options.
pub fn run(
    spec: &ProblemSpec,
    cfg: &StepConfig,
    x0: Vec<f64>,
    v0: Vec<Vec<f64>>,
    errors: &ErrorSchedule,
    stop: &StoppingRule,
) -> Result<RunReport, SolverError> {
    run_with(spec, cfg, x0, v0, errors, stop, &RunOptions::default())
}

fn distance(a: &IterState, b_x: &[f64], b_v: &[Vec<f64>], weights: &[f64]) -> f64 {
    let diff = BlockVector::new(
        a.x.iter().zip(b_x).map(|(s, t)| s - t).collect(),
        a.v.iter()
            .zip(b_v)
            .map(|(s, t)| s.iter().zip(t).map(|(p, q)| p - q).collect())
            .collect(),
    );
    norm_weighted_unchecked(&diff, weights)
}

pub fn run_with(
    spec: &ProblemSpec,
    cfg: &StepConfig,
    x0: Vec<f64>,
    v0: Vec<Vec<f64>>,
    errors: &ErrorSchedule,
    stop: &StoppingRule,
    opts: &RunOptions<'_>,
) -> Result<RunReport, SolverError> {
    if stop.max_iter == 0 {
        return Err(SolverError::InvalidSteps("max_iter must be at least 1".into()));
    }
    if !(stop.tol >= 0.0) {
        return Err(SolverError::InvalidSteps(format!(
            "tolerance must be nonnegative, got {}",
            stop.tol
        )));
    }
    if !cfg.admissible() && !opts.unsafe_steps {
        return Err(SolverError::Inadmissible {
            rho: cfg.rho(),
            beta: cfg.beta(),
        });
    }
    if !errors.declared_summable() && !opts.unsafe_steps {
        return Err(SolverError::NonSummableErrors);
    }
    if cfg.sigmas().len() != spec.layout().num_blocks() {
        return Err(SolverError::Dimension {
            what: "σ".into(),
            expected: spec.layout().num_blocks(),
            found: cfg.sigmas().len(),
        });
    }

    let layout = spec.layout();
    let weights = layout.weights();
    let start = Instant::now();
    let mut state = IterState::initial(spec, x0, v0)?;
    let mut trajectory = opts.record_trajectory.then(|| vec![state.point()]);
    let mut history = Vec::new();
    let mut injected = false;
    let mut termination = Termination::MaxIter;
    let mut divergence = None;

    for n in 0..stop.max_iter {
        let err = errors.at(n, layout).map_err(SolverError::InvalidSteps)?;
        injected |= err.is_some();
        let next = match iterate_once(spec, cfg, &state, err.as_ref()) {
            Ok(next) => next,
            Err(SolverError::Diverged { iteration, block }) => {
                termination = Termination::Diverged;
                divergence = Some(Divergence { iteration, block });
                break;
            }
            Err(e) => return Err(e),
        };
        let bad = next
            .point()
            .first_non_finite()
            .or_else(|| next.y.iter().any(|e| !e.is_finite()).then_some(BlockId::Primal));
        if let Some(block) = bad {
            termination = Termination::Diverged;
            divergence = Some(Divergence {
                iteration: n,
                block,
            });
            break;
        }

        let residual = if err.is_none() {
            distance(&state, &next.p, &next.q, weights)
        } else {
            match intermediate(spec, cfg, n, &state.x, &state.v, None) {
                Ok(exact) => distance(&state, &exact.p, &exact.q, weights),
                Err(SolverError::Diverged { iteration, block }) => {
                    termination = Termination::Diverged;
                    divergence = Some(Divergence { iteration, block });
                    break;
                }
                Err(e) => return Err(e),
            }
        };
        let scale = 1.0 + norm_weighted_unchecked(&state.point(), weights);
        let step_norm = distance(&next, &state.x, &state.v, weights);
        let obs = opts.monitor.map(|m| m.observe(&next)).unwrap_or_default();
        history.push(IterRecord {
            iter: n,
            step_norm,
            fixed_point_residual: residual,
            kkt_residual: obs.kkt_residual,
            primal_value: obs.primal_value,
            dual_value: obs.dual_value,
            gap: obs.gap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if let Some(t) = trajectory.as_mut() {
            t.push(next.point());
        }
        state = next;

        let kkt_done = matches!((stop.kkt_tol, obs.kkt_residual), (Some(t), Some(k)) if k <= t);
        // an overflowing norm makes `inf ≤ inf`; that is growth, not convergence
        if (residual.is_finite() && residual <= stop.tol * scale) || kkt_done {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(RunReport {
        iterations: history.len(),
        termination,
        history,
        final_state: state,
        trajectory,
        errors_injected: injected,
        divergence,
    })
}
