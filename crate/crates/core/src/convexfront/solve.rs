use super::gap::{dual_value, evaluate_gap_with_steps, kkt_residual, primal_value, GapReport};
use super::{lower_to_inclusion, ConvexError, ConvexProblem};
use crate::solver::{
    run_with, suggest_steps, validate_steps, ErrorSchedule, IterState, IterationMonitor,
    LambdaSchedule, Observation, ProblemSpec, RunOptions, RunReport, StepConfig, StoppingRule,
};

/// How step sizes are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum StepChoice {
    /// `suggest_steps` with this safety factor.
    Auto { safety: f64 },
    Manual { tau: f64, sigmas: Vec<f64> },
}

impl Default for StepChoice {
    fn default() -> Self {
        Self::Auto { safety: 0.99 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub steps: StepChoice,
    pub lambda: LambdaSchedule,
    pub over_relaxation: bool,
    pub errors: ErrorSchedule,
    pub stop: StoppingRule,
    pub unsafe_steps: bool,
    pub record_trajectory: bool,
    /// Evaluate objectives, gap and KKT residual after every step.
    pub track_objectives: bool,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub spec: ProblemSpec,
    pub steps: StepConfig,
    pub report: RunReport,
    /// At the final iterate, KKT residual with the run's steps.
    pub gap: GapReport,
}

/// Per-iteration objectives and KKT residual.
pub struct ConvexMonitor<'a> {
    cp: &'a ConvexProblem,
    tau: f64,
    sigmas: Vec<f64>,
}

impl<'a> ConvexMonitor<'a> {
    pub fn new(cp: &'a ConvexProblem, cfg: &StepConfig) -> Self {
        Self {
            cp,
            tau: cfg.tau(),
            sigmas: cfg.sigmas().to_vec(),
        }
    }
}

impl IterationMonitor for ConvexMonitor<'_> {
    fn observe(&self, state: &IterState) -> Observation {
        let primal = primal_value(self.cp, &state.x).ok();
        let dual = dual_value(self.cp, &state.v).ok();
        Observation {
            kkt_residual: kkt_residual(self.cp, &state.x, &state.v, self.tau, &self.sigmas).ok(),
            primal_value: primal,
            dual_value: dual,
            gap: primal.zip(dual).map(|(p, d)| p + d),
        }
    }
}

/// Step configuration for `spec` under `choice`, with the schedule applied.
pub fn configure_steps(
    spec: &ProblemSpec,
    choice: &StepChoice,
    lambda: &LambdaSchedule,
    over_relaxation: bool,
) -> Result<StepConfig, ConvexError> {
    let cfg = match choice {
        StepChoice::Auto { safety } => suggest_steps(spec, *safety)?,
        StepChoice::Manual { tau, sigmas } => validate_steps(spec, *tau, sigmas)?,
    };
    Ok(cfg
        .with_lambda(lambda.clone())
        .with_over_relaxation(over_relaxation))
}

/// Lowers `cp`, runs the primal-dual iteration, and evaluates the gap at
/// the final iterate.
pub fn solve_convex(cp: &ConvexProblem, opts: &SolveOptions) -> Result<ConvexSolution, ConvexError> {
    let spec = lower_to_inclusion(cp)?;
    let cfg = configure_steps(&spec, &opts.steps, &opts.lambda, opts.over_relaxation)?;
    let zeros = cp.layout().zeros();
    let x0 = opts.x0.clone().unwrap_or(zeros.primal);
    let v0 = opts.v0.clone().unwrap_or(zeros.duals);
    let monitor = ConvexMonitor::new(cp, &cfg);
    let run_opts = RunOptions {
        unsafe_steps: opts.unsafe_steps,
        record_trajectory: opts.record_trajectory,
        monitor: (opts.track_objectives || opts.stop.kkt_tol.is_some())
            .then_some(&monitor as &dyn IterationMonitor),
    };
    let report = run_with(&spec, &cfg, x0, v0, &opts.errors, &opts.stop, &run_opts)?;
    let fin = &report.final_state;
    let gap = evaluate_gap_with_steps(cp, &fin.x, &fin.v, cfg.tau(), cfg.sigmas())?;
    Ok(ConvexSolution {
        spec,
        steps: cfg,
        report,
        gap,
    })
}
