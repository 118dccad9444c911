//! Benchmark suites with pinned seeds. Each compares the solver against a
//! reference that shares no code with it: standalone forward-backward,
//! Condat and Chambolle–Pock recursions, a dual projected-gradient solver
//! for 1-D total variation, gradient descent on a Huber objective, and the
//! closed-form projection onto an intersection of boxes.

use std::fmt;
use std::time::Instant;

use rand::Rng as _;
use splitsolve::convexfront::{
    solve_convex, ConvexBlock, ConvexProblem, ConvexSolution, SmoothTerm, SolveOptions, StepChoice,
    StrongTerm,
};
use splitsolve::diagnostics::{
    build_product_ops, certify_q_cocoercive, certify_skew, certify_strong_positivity,
    certify_t_bound, fejer_monitor, DEFAULT_SAMPLES, FEJER_SLACK,
};
use splitsolve::operators::{CatalogParams, CocoerciveOp, LinearOp, ProxFunction, ResolventOp};
use splitsolve::sampling::{gaussian, seeded, seeded_stream, Rng};
use splitsolve::solver::{
    suggest_steps, validate_steps, DualBlock, ErrorComponents, LambdaSchedule, ProblemSpec,
    StoppingRule,
};
use splitsolve::spaces::SpaceLayout;

use crate::config::{
    BlockConfig, CatalogEntry, ErrorsConfig, OperatorConfig, PrimalConfig, ProblemConfig,
    SmoothConfig, SourceMap, StepsConfig, StrongConfig,
};
use crate::report::render_csv;

pub const SUITES: &[&str] = &[
    "tv1d",
    "fusedlasso",
    "project-intersection",
    "fb-reduction",
    "condat-reduction",
];

/// Iterations of the long reference runs.
pub const REFERENCE_ITERS: usize = 1_000_000;
const REDUCTION_ITERS: usize = 1000;
const REDUCTION_TOL: f64 = 1e-12;

/// One checked quantity: passes when `value ≤ tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Acceptance criterion this check belongs to.
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Outcome {
    pub fn at_most(criterion: u8, name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            criterion,
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {:.3e} ≤ {:.0e}: {}",
            self.criterion,
            self.name,
            self.value,
            self.tol,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub outcomes: Vec<Outcome>,
    /// `(file name, contents)` pairs, in a fixed order.
    pub files: Vec<(String, String)>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    fn csv(&mut self, name: &str, sol: &ConvexSolution) {
        self.files
            .push((format!("{name}.csv"), render_csv(&sol.report, &sol.steps, false)));
    }
}

pub fn run_suite(name: &str) -> Option<SuiteOutput> {
    Some(match name {
        "tv1d" => tv1d_suite(),
        "fusedlasso" => fused_lasso_suite(),
        "project-intersection" => project_intersection_suite(),
        "fb-reduction" => fb_reduction_suite(),
        "condat-reduction" => condat_reduction_suite(),
        _ => return None,
    })
}

// ---- plain vector helpers for the reference implementations ----

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn diff_t(u: &[f64]) -> Vec<f64> {
    let n = u.len() + 1;
    (0..n)
        .map(|j| {
            let left = if j > 0 { u[j - 1] } else { 0.0 };
            let right = if j < n - 1 { u[j] } else { 0.0 };
            left - right
        })
        .collect()
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a[0].len()];
    for (r, yi) in a.iter().zip(y) {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v * yi;
        }
    }
    out
}

fn soft(w: f64, t: f64) -> f64 {
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

fn l1(x: &[f64]) -> f64 {
    x.iter().map(|e| e.abs()).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| gaussian(rng, cols).into_iter().map(|e| scale * e).collect())
        .collect()
}

/// Piecewise-constant signal with Gaussian noise.
fn noisy_steps(n: usize, levels: &[f64], noise: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let g = gaussian(&mut rng, n);
    (0..n)
        .map(|j| levels[j * levels.len() / n] + noise * g[j])
        .collect()
}

// ---- references ----

/// `argmin ½‖x − b‖² + α‖Dx‖₁` by projected gradient on the dual
/// `min_{|u|∞ ≤ α} ½‖b − Dᵀu‖²`, step 1/4, recovering `x = b − Dᵀu`.
pub fn tv1d_reference(b: &[f64], alpha: f64, iters: usize) -> Vec<f64> {
    let mut u = vec![0.0; b.len() - 1];
    let mut x = b.to_vec();
    for _ in 0..iters {
        let g = diff(&x);
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui = (*ui + 0.25 * gi).clamp(-alpha, alpha);
        }
        let dtu = diff_t(&u);
        for ((xi, bi), di) in x.iter_mut().zip(b).zip(&dtu) {
            *xi = bi - di;
        }
    }
    x
}

/// Fused lasso `½‖x − b‖² + λ₁‖x‖₁ + λ₂‖Dx‖₁`: soft-thresholding the
/// total-variation solution by `λ₁` is exact.
pub fn fused_lasso_reference(b: &[f64], l1w: f64, tvw: f64, iters: usize) -> Vec<f64> {
    tv1d_reference(b, tvw, iters)
        .into_iter()
        .map(|x| soft(x, l1w))
        .collect()
}

fn fused_objective(x: &[f64], b: &[f64], l1w: f64, tvw: f64) -> f64 {
    0.5 * dist(x, b).powi(2) + l1w * l1(x) + tvw * l1(&diff(x))
}

// ---- shared checks ----

fn fejer_outcome(name: &str, sol: &ConvexSolution) -> Outcome {
    let value = build_product_ops(&sol.spec, &sol.steps)
        .ok()
        .and_then(|ops| fejer_monitor(&sol.report, &ops).ok())
        .map_or(f64::NAN, |s| s.max_increase.max(0.0));
    Outcome::at_most(6, format!("{name}: largest increase of the V-distance to the final iterate"), value, FEJER_SLACK)
}

fn timed_solve(cp: &ConvexProblem, opts: &SolveOptions) -> (ConvexSolution, f64) {
    let start = Instant::now();
    let sol = solve_convex(cp, opts).expect("benchmark problems are admissible");
    (sol, start.elapsed().as_secs_f64())
}

fn built(cfg: &ProblemConfig) -> (ConvexProblem, SolveOptions) {
    let b = cfg.build().expect("benchmark configs are valid");
    (b.problem, b.options)
}

// ---- configs ----

fn config(seed: u64, primal: PrimalConfig, blocks: Vec<BlockConfig>, stop: StoppingRule) -> ProblemConfig {
    ProblemConfig {
        seed,
        primal,
        blocks,
        steps: StepsConfig::default(),
        errors: ErrorsConfig::Zero,
        stop,
        source: SourceMap::default(),
    }
}

fn quad(center: &[f64]) -> SmoothConfig {
    SmoothConfig::Quadratic {
        weight: 1.0,
        center: Some(center.to_vec()),
    }
}

fn l1_entry(weight: f64) -> CatalogEntry {
    CatalogEntry {
        name: "l1".into(),
        params: CatalogParams {
            weight: Some(weight),
            ..Default::default()
        },
    }
}

fn diff_block(n: usize, g: CatalogEntry, ell: StrongConfig) -> BlockConfig {
    BlockConfig {
        dim: n - 1,
        weight: None,
        g,
        ell,
        l: OperatorConfig::Diff1d,
        l_norm: None,
        r: None,
    }
}

pub const TV_N: usize = 50;
pub const TV_ALPHA: f64 = 0.4;
pub const TV_SEED: u64 = 0x7d1;

fn tv_signal() -> Vec<f64> {
    noisy_steps(TV_N, &[0.0, 1.0, -0.5, 0.7, 0.0], 0.15, TV_SEED)
}

/// `½‖x − b‖² + α‖Dx‖₁` with `n = 50`, `h` carrying the data term.
pub fn tv1d_config() -> ProblemConfig {
    config(
        TV_SEED,
        PrimalConfig {
            dim: TV_N,
            f: CatalogEntry::named("zero"),
            h: quad(&tv_signal()),
            h_mu: None,
            z: None,
        },
        vec![diff_block(TV_N, l1_entry(TV_ALPHA), StrongConfig::ZeroIndicator)],
        StoppingRule::new(1e-14, 200_000),
    )
}

pub const HUBER_N: usize = 20;
pub const HUBER_ALPHA: f64 = 0.3;
pub const HUBER_NU: f64 = 2.0;

fn huber_signal() -> Vec<f64> {
    noisy_steps(HUBER_N, &[1.0, -1.0, 0.5, 0.0], 0.2, 0x4b)
}

/// `½‖x − b‖² + (α‖·‖₁ □ (ν/2)‖·‖²)(Dx)`: the dual term `ℓ*` is strongly
/// convex, so the dual iterates converge strongly.
pub fn huber_config() -> ProblemConfig {
    config(
        0x4b,
        PrimalConfig {
            dim: HUBER_N,
            f: CatalogEntry::named("zero"),
            h: quad(&huber_signal()),
            h_mu: None,
            z: None,
        },
        vec![diff_block(
            HUBER_N,
            l1_entry(HUBER_ALPHA),
            StrongConfig::Quadratic { nu: HUBER_NU },
        )],
        StoppingRule::new(1e-14, 200_000),
    )
}

/// Minimizer of the Huber objective by gradient descent, step `1/(1 + ν‖D‖²)`,
/// and the matching dual point `clip(ν D x, −α, α)`.
pub fn huber_reference(b: &[f64], alpha: f64, nu: f64, iters: usize) -> (Vec<f64>, Vec<f64>) {
    let dual = |x: &[f64]| -> Vec<f64> {
        diff(x).into_iter().map(|w| (nu * w).clamp(-alpha, alpha)).collect()
    };
    let t = 1.0 / (1.0 + 4.0 * nu);
    let mut x = b.to_vec();
    for _ in 0..iters {
        let dtv = diff_t(&dual(&x));
        for ((xi, bi), di) in x.iter_mut().zip(b).zip(&dtv) {
            *xi -= t * (*xi - bi + di);
        }
    }
    let v = dual(&x);
    (x, v)
}

pub const FL_N: usize = 10;
pub const FL_L1: f64 = 0.2;
pub const FL_TV: f64 = 0.4;
pub const FL_SEED: u64 = 0xf1;

fn fl_signal() -> Vec<f64> {
    noisy_steps(FL_N, &[0.0, 1.5, -1.0, 0.8, 0.0], 0.2, FL_SEED)
}

/// Fused lasso with `n = 10`: `f = λ₁‖·‖₁`, `h = ½‖x − b‖²`, `g = λ₂‖·‖₁`,
/// `L = D`.
pub fn fused_lasso_config() -> ProblemConfig {
    config(
        FL_SEED,
        PrimalConfig {
            dim: FL_N,
            f: l1_entry(FL_L1),
            h: quad(&fl_signal()),
            h_mu: None,
            z: None,
        },
        vec![diff_block(FL_N, l1_entry(FL_TV), StrongConfig::ZeroIndicator)],
        StoppingRule::new(1e-14, 200_000),
    )
}

/// The fused lasso with geometric errors, amplitude 0.1 and decay 0.9.
pub fn fused_lasso_errors_config() -> ProblemConfig {
    let mut c = fused_lasso_config();
    c.errors = ErrorsConfig::Geometric {
        amplitude: 0.1,
        decay: 0.9,
        components: ErrorComponents::ALL,
    };
    c
}

// ---- suites ----

fn with_trajectory(mut opts: SolveOptions) -> SolveOptions {
    opts.record_trajectory = true;
    opts
}

pub fn tv1d_suite() -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let cfg = tv1d_config();
    let (cp, opts) = built(&cfg);
    let (sol, secs) = timed_solve(&cp, &with_trajectory(opts));
    let b = tv_signal();
    let reference = tv1d_reference(&b, TV_ALPHA, REFERENCE_ITERS);
    let x = &sol.report.final_state.x;
    let (obj, obj_ref) = (
        fused_objective(x, &b, 0.0, TV_ALPHA),
        fused_objective(&reference, &b, 0.0, TV_ALPHA),
    );
    out.outcomes.extend([
        Outcome::at_most(4, "tv1d: relative objective error vs reference", (obj - obj_ref).abs() / obj_ref.abs(), 1e-6),
        Outcome::at_most(4, "tv1d: KKT residual", sol.gap.kkt_residual, 1e-8),
        Outcome::at_most(4, "tv1d: duality gap", sol.gap.gap.map_or(f64::NAN, f64::abs), 1e-6),
        Outcome::at_most(4, "tv1d: solve time [s]", secs, 10.0),
        fejer_outcome("tv1d", &sol),
        Outcome::at_most(8, "tv1d: ‖x − x_ref‖ with strongly convex h", dist(x, &reference), 1e-8),
    ]);
    out.files.push(("tv1d.cfg".into(), cfg.to_string()));
    out.csv("tv1d", &sol);

    let hcfg = huber_config();
    let (cp, opts) = built(&hcfg);
    let (sol, _) = timed_solve(&cp, &with_trajectory(opts));
    let (x_ref, v_ref) = huber_reference(&huber_signal(), HUBER_ALPHA, HUBER_NU, 100_000);
    let fin = &sol.report.final_state;
    out.outcomes.extend([
        Outcome::at_most(8, "huber: ‖x − x_ref‖", dist(&fin.x, &x_ref), 1e-8),
        Outcome::at_most(8, "huber: ‖v − v_ref‖ with strongly convex ℓ*", dist(&fin.v[0], &v_ref), 1e-8),
        fejer_outcome("huber", &sol),
    ]);
    out.files.push(("huber.cfg".into(), hcfg.to_string()));
    out.csv("huber", &sol);
    out
}

pub fn fused_lasso_suite() -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let cfg = fused_lasso_config();
    let (cp, opts) = built(&cfg);
    let (sol, secs) = timed_solve(&cp, &with_trajectory(opts));
    let b = fl_signal();
    let reference = fused_lasso_reference(&b, FL_L1, FL_TV, REFERENCE_ITERS);
    let x = &sol.report.final_state.x;
    let (obj, obj_ref) = (
        fused_objective(x, &b, FL_L1, FL_TV),
        fused_objective(&reference, &b, FL_L1, FL_TV),
    );
    out.outcomes.extend([
        Outcome::at_most(4, "fusedlasso: relative objective error vs reference", (obj - obj_ref).abs() / obj_ref.abs(), 1e-6),
        Outcome::at_most(4, "fusedlasso: KKT residual", sol.gap.kkt_residual, 1e-8),
        Outcome::at_most(4, "fusedlasso: ‖x − x_ref‖", dist(x, &reference), 1e-6),
        Outcome::at_most(4, "fusedlasso: solve time [s]", secs, 10.0),
        fejer_outcome("fusedlasso", &sol),
    ]);
    out.files.push(("fusedlasso.cfg".into(), cfg.to_string()));
    out.csv("fusedlasso", &sol);

    let ecfg = fused_lasso_errors_config();
    let (cp, opts) = built(&ecfg);
    let (esol, _) = timed_solve(&cp, &opts);
    out.outcomes.push(Outcome::at_most(
        7,
        "fusedlasso with geometric errors (0.1, 0.9): distance to the error-free solution",
        dist(&esol.report.final_state.x, x),
        1e-6,
    ));
    out.files.push(("fusedlasso-errors.cfg".into(), ecfg.to_string()));
    out.csv("fusedlasso-errors", &esol);
    out
}

const PI_N: usize = 6;
const PI_M: usize = 3;

/// Closest point to a target in the intersection of three boxes: `C` is
/// the gradient of `½‖x − t‖²` and each `Bᵢ` the normal cone of a box.
pub fn project_intersection_suite() -> SuiteOutput {
    let mut rng = seeded(0x9b0c);
    let target: Vec<f64> = gaussian(&mut rng, PI_N).into_iter().map(|e| 2.0 * e).collect();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = (0..PI_M)
        .map(|_| {
            let lo = (0..PI_N).map(|_| -0.5 - rng.random::<f64>()).collect();
            let hi = (0..PI_N).map(|_| 0.5 + rng.random::<f64>()).collect();
            (lo, hi)
        })
        .collect();
    let oracle: Vec<f64> = (0..PI_N)
        .map(|j| {
            let lo = boxes.iter().map(|b| b.0[j]).fold(f64::NEG_INFINITY, f64::max);
            let hi = boxes.iter().map(|b| b.1[j]).fold(f64::INFINITY, f64::min);
            target[j].clamp(lo, hi)
        })
        .collect();
    let blocks = boxes
        .iter()
        .map(|(lo, hi)| ConvexBlock {
            g: ProxFunction::box_indicator(lo.clone(), hi.clone()).expect("valid box"),
            ell: StrongTerm::zero_indicator(PI_N),
            l: LinearOp::identity(PI_N),
            r: vec![0.0; PI_N],
        })
        .collect();
    let cp = ConvexProblem::new(
        SpaceLayout::uniform(PI_N, vec![PI_N; PI_M]).expect("valid layout"),
        ProxFunction::zero(PI_N),
        SmoothTerm::quadratic(1.0, target).expect("valid quadratic"),
        vec![0.0; PI_N],
        blocks,
    )
    .expect("valid problem");
    let opts = SolveOptions {
        stop: StoppingRule::new(1e-14, 200_000),
        record_trajectory: true,
        track_objectives: true,
        ..Default::default()
    };
    let (sol, _) = timed_solve(&cp, &opts);
    let mut out = SuiteOutput::default();
    out.outcomes.extend([
        Outcome::at_most(4, "project-intersection: ‖x − P(t)‖", dist(&sol.report.final_state.x, &oracle), 1e-8),
        fejer_outcome("project-intersection", &sol),
    ]);
    out.csv("project-intersection", &sol);
    out
}

fn reduction_options(lambda: f64) -> SolveOptions {
    SolveOptions {
        steps: StepChoice::Auto { safety: 0.99 },
        lambda: LambdaSchedule::Constant(lambda),
        stop: StoppingRule::new(0.0, REDUCTION_ITERS),
        record_trajectory: true,
        ..Default::default()
    }
}

/// Largest entrywise deviation between the recorded states and a reference
/// sequence of `(x, v)` pairs of the same length.
fn trajectory_deviation(sol: &ConvexSolution, reference: &[(Vec<f64>, Vec<Vec<f64>>)]) -> f64 {
    let traj = sol.report.trajectory.as_ref().expect("trajectory recorded");
    if traj.len() != reference.len() {
        return f64::INFINITY;
    }
    traj.iter()
        .zip(reference)
        .map(|(s, (x, v))| {
            s.duals
                .iter()
                .zip(v)
                .map(|(a, b)| max_abs_diff(a, b))
                .fold(max_abs_diff(&s.primal, x), f64::max)
        })
        .fold(0.0, f64::max)
}

pub const FB_N: usize = 10;
const FB_L1: f64 = 0.3;

/// 10-dimensional `min 0.3‖x‖₁ + ½xᵀMx − bᵀx` posed with one degenerate dual
/// block (`g = 0`, `ℓ = ι{0}`), so every dual iterate stays 0. Returns the
/// problem together with `M` and `b`.
pub fn fb_problem() -> (ConvexProblem, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = seeded(0xfb01);
    let a = random_matrix(&mut rng, FB_N, FB_N, 1.0);
    let m: Vec<Vec<f64>> = (0..FB_N)
        .map(|i| {
            (0..FB_N)
                .map(|j| {
                    let s: f64 = a.iter().map(|r| r[i] * r[j]).sum();
                    s / FB_N as f64 + if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let b = gaussian(&mut rng, FB_N);
    let l = random_matrix(&mut rng, 4, FB_N, 0.1);
    // the Frobenius norm bounds the Lipschitz constant of x ↦ Mx − b
    let frob = m.iter().flatten().map(|e| e * e).sum::<f64>().sqrt();
    let (mv, bv, mg, bg) = (m.clone(), b.clone(), m.clone(), b.clone());
    let h = SmoothTerm::custom(
        FB_N,
        1.0 / frob,
        move |x| {
            let mx = matvec(&mv, x);
            0.5 * mx.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
                - bv.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
        },
        move |x| matvec(&mg, x).into_iter().zip(&bg).map(|(p, q)| p - q).collect(),
    );
    let cp = ConvexProblem::new(
        SpaceLayout::uniform(FB_N, vec![4]).expect("valid layout"),
        ProxFunction::l1(FB_N, FB_L1).expect("valid l1"),
        h,
        vec![0.0; FB_N],
        vec![ConvexBlock {
            g: ProxFunction::zero(4),
            ell: StrongTerm::zero_indicator(4),
            l: LinearOp::dense(l).expect("valid matrix"),
            r: vec![0.0; 4],
        }],
    )
    .expect("valid problem");
    (cp, m, b)
}

/// `x⁺ = soft(x − τ(Mx − b), 0.3τ)` from `x₀ = 0`.
pub fn forward_backward_reference(m: &[Vec<f64>], b: &[f64], tau: f64, steps: usize) -> Vec<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    let mut out = vec![x.clone()];
    for _ in 0..steps {
        let g = matvec(m, &x);
        x = x
            .iter()
            .zip(&g)
            .zip(b)
            .map(|((xi, gi), bi)| soft(xi - tau * (gi - bi), tau * FB_L1))
            .collect();
        out.push(x.clone());
    }
    out
}

pub fn fb_reduction_suite() -> SuiteOutput {
    let (cp, m, b) = fb_problem();
    let (sol, secs) = timed_solve(&cp, &reduction_options(1.0));
    let steps = sol.report.iterations;
    let reference: Vec<_> = forward_backward_reference(&m, &b, sol.steps.tau(), steps)
        .into_iter()
        .map(|x| (x, vec![vec![0.0; 4]]))
        .collect();
    let mut out = SuiteOutput::default();
    out.outcomes.extend([
        Outcome::at_most(1, "max deviation vs forward-backward", trajectory_deviation(&sol, &reference), REDUCTION_TOL),
        Outcome::at_most(1, "forward-backward reduction: run time [s]", secs, 1.0),
        fejer_outcome("fb-reduction", &sol),
    ]);
    out.csv("fb-reduction", &sol);
    out
}

pub const CONDAT_N: usize = 10;
const CONDAT_WEIGHTS: [f64; 2] = [0.4, 0.6];
const CONDAT_L1: f64 = 0.5;
const CONDAT_L2: f64 = 0.3;
const CONDAT_LAMBDA: f64 = 0.9;

struct CondatData {
    b: Vec<f64>,
    l2: Vec<Vec<f64>>,
}

/// `min ι_[−1,1]ⁿ(x) + ½‖x − b‖² + ω₁·0.5‖Dx‖₁ + ω₂·0.3‖Kx‖₂` with
/// `z = 0`, `r = 0`, `ℓᵢ = ι{0}`.
fn condat_problem() -> (ConvexProblem, CondatData) {
    let n = CONDAT_N;
    let mut rng = seeded(0xc0da);
    let b: Vec<f64> = gaussian(&mut rng, n).into_iter().map(|e| 2.0 * e).collect();
    let l2 = random_matrix(&mut rng, 5, n, 0.3);
    let cp = ConvexProblem::new(
        SpaceLayout::new(n, vec![n - 1, 5], CONDAT_WEIGHTS.to_vec()).expect("valid layout"),
        ProxFunction::box_indicator(vec![-1.0; n], vec![1.0; n]).expect("valid box"),
        SmoothTerm::quadratic(1.0, b.clone()).expect("valid quadratic"),
        vec![0.0; n],
        vec![
            ConvexBlock {
                g: ProxFunction::l1(n - 1, CONDAT_L1).expect("valid l1"),
                ell: StrongTerm::zero_indicator(n - 1),
                l: LinearOp::forward_difference(n).expect("n ≥ 2"),
                r: vec![0.0; n - 1],
            },
            ConvexBlock {
                g: ProxFunction::l2_norm(5, CONDAT_L2).expect("valid norm"),
                ell: StrongTerm::zero_indicator(5),
                l: LinearOp::dense(l2.clone()).expect("valid matrix"),
                r: vec![0.0; 5],
            },
        ],
    )
    .expect("valid problem");
    (cp, CondatData { b, l2 })
}

/// Condat's recursion with a common dual step:
/// `p = P_box(x − τ(Σ ωᵢLᵢ*vᵢ + x − b))`,
/// `qᵢ = prox_{σgᵢ*}(vᵢ + σLᵢ(2p − x))`, then relaxation by `λ`.
fn condat_reference(d: &CondatData, tau: f64, sigma: f64, lambda: f64, steps: usize) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.b.len();
    let mut x = vec![0.0; n];
    let mut v = vec![vec![0.0; n - 1], vec![0.0; 5]];
    let mut out = vec![(x.clone(), v.clone())];
    for _ in 0..steps {
        let back1 = diff_t(&v[0]);
        let back2 = matvec_t(&d.l2, &v[1]);
        let p: Vec<f64> = (0..n)
            .map(|j| {
                let s = CONDAT_WEIGHTS[0] * back1[j] + CONDAT_WEIGHTS[1] * back2[j];
                (x[j] - tau * (s + x[j] - d.b[j])).clamp(-1.0, 1.0)
            })
            .collect();
        let y: Vec<f64> = p.iter().zip(&x).map(|(p, x)| 2.0 * p - x).collect();
        let q1: Vec<f64> = v[0]
            .iter()
            .zip(diff(&y))
            .map(|(vi, ly)| (vi + sigma * ly).clamp(-CONDAT_L1, CONDAT_L1))
            .collect();
        let w2: Vec<f64> = v[1].iter().zip(matvec(&d.l2, &y)).map(|(vi, ly)| vi + sigma * ly).collect();
        let nw = w2.iter().map(|e| e * e).sum::<f64>().sqrt();
        let shrink = if nw > CONDAT_L2 { CONDAT_L2 / nw } else { 1.0 };
        let q2: Vec<f64> = w2.iter().map(|e| e * shrink).collect();
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += lambda * (pi - *xi);
        }
        for (vi, qi) in v.iter_mut().zip([q1, q2]) {
            for (a, b) in vi.iter_mut().zip(&qi) {
                *a += lambda * (b - *a);
            }
        }
        out.push((x.clone(), v.clone()));
    }
    out
}

const CP_H: usize = 4;
const CP_W: usize = 5;
const CP_G: f64 = 0.4;

/// 2-D total variation denoising `min ½‖x − b‖² + 0.4‖∇x‖₁` on a 4×5 image.
fn cp_problem() -> (ConvexProblem, Vec<f64>) {
    let n = CP_H * CP_W;
    let mut rng = seeded(0xc9);
    let b = gaussian(&mut rng, n);
    let cp = ConvexProblem::new(
        SpaceLayout::uniform(n, vec![2 * n]).expect("valid layout"),
        ProxFunction::squared_distance(1.0, b.clone()).expect("valid quadratic"),
        SmoothTerm::zero(n),
        vec![0.0; n],
        vec![ConvexBlock {
            g: ProxFunction::l1(2 * n, CP_G).expect("valid l1"),
            ell: StrongTerm::zero_indicator(2 * n),
            l: LinearOp::gradient_2d(CP_H, CP_W).expect("valid image"),
            r: vec![0.0; 2 * n],
        }],
    )
    .expect("valid problem");
    (cp, b)
}

fn grad2d(x: &[f64]) -> Vec<f64> {
    let n = CP_H * CP_W;
    let mut out = vec![0.0; 2 * n];
    for i in 0..CP_H {
        for j in 0..CP_W {
            let k = i * CP_W + j;
            if i + 1 < CP_H {
                out[k] = x[k + CP_W] - x[k];
            }
            if j + 1 < CP_W {
                out[n + k] = x[k + 1] - x[k];
            }
        }
    }
    out
}

fn grad2d_t(v: &[f64]) -> Vec<f64> {
    let n = CP_H * CP_W;
    let mut out = vec![0.0; n];
    for i in 0..CP_H {
        for j in 0..CP_W {
            let k = i * CP_W + j;
            if i + 1 < CP_H {
                out[k + CP_W] += v[k];
                out[k] -= v[k];
            }
            if j + 1 < CP_W {
                out[k + 1] += v[n + k];
                out[k] -= v[n + k];
            }
        }
    }
    out
}

/// `x⁺ = prox_{τf}(x − τL*v)`, `v⁺ = prox_{σg*}(v + σL(2x⁺ − x))`.
fn chambolle_pock_reference(b: &[f64], tau: f64, sigma: f64, steps: usize) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; 2 * n];
    let mut out = vec![(x.clone(), vec![v.clone()])];
    for _ in 0..steps {
        let back = grad2d_t(&v);
        let xn: Vec<f64> = (0..n).map(|j| (x[j] - tau * back[j] + tau * b[j]) / (1.0 + tau)).collect();
        let bar: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
        v = v
            .iter()
            .zip(grad2d(&bar))
            .map(|(vi, g)| (vi + sigma * g).clamp(-CP_G, CP_G))
            .collect();
        x = xn;
        out.push((x.clone(), vec![v.clone()]));
    }
    out
}

pub fn condat_reduction_suite() -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let (cp, data) = condat_problem();
    let (sol, secs) = timed_solve(&cp, &reduction_options(CONDAT_LAMBDA));
    let sigmas = sol.steps.sigmas();
    let reference = condat_reference(&data, sol.steps.tau(), sigmas[0], CONDAT_LAMBDA, sol.report.iterations);
    out.outcomes.extend([
        Outcome::at_most(2, "max deviation vs Condat", trajectory_deviation(&sol, &reference), REDUCTION_TOL),
        Outcome::at_most(2, "Condat reduction: equal dual steps", (sigmas[0] - sigmas[1]).abs(), 0.0),
        Outcome::at_most(2, "Condat reduction: run time [s]", secs, 1.0),
        fejer_outcome("condat-reduction", &sol),
    ]);
    out.csv("condat-reduction", &sol);

    let (cp, b) = cp_problem();
    let (sol, secs) = timed_solve(&cp, &reduction_options(1.0));
    let reference = chambolle_pock_reference(&b, sol.steps.tau(), sol.steps.sigmas()[0], sol.report.iterations);
    out.outcomes.extend([
        Outcome::at_most(3, "max deviation vs Chambolle–Pock", trajectory_deviation(&sol, &reference), REDUCTION_TOL),
        Outcome::at_most(3, "Chambolle–Pock reduction: run time [s]", secs, 1.0),
        fejer_outcome("chambolle-pock-reduction", &sol),
    ]);
    out.csv("chambolle-pock-reduction", &sol);
    out
}

// ---- checks that are not solver runs ----

fn scalar_spec(weights: &[f64], norms: &[f64], mu: f64, nus: &[f64]) -> ProblemSpec {
    let m = weights.len();
    let layout = SpaceLayout::new(1, vec![1; m], weights.to_vec()).expect("valid layout");
    let op = |c: f64| {
        if c.is_finite() {
            CocoerciveOp::scaled_identity(1, 1.0 / c).expect("positive scale")
        } else {
            CocoerciveOp::zero(1)
        }
    };
    let blocks = norms
        .iter()
        .zip(nus)
        .map(|(&l, &nu)| DualBlock {
            b: ResolventOp::zero(1),
            d_inv: op(nu),
            l: LinearOp::identity(1).scaled(l),
            r: vec![0.0],
        })
        .collect();
    ProblemSpec::new(layout, ResolventOp::zero(1), op(mu), vec![0.0], blocks).expect("valid spec")
}

fn log_uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Hand-evaluated `ρ` on the three worked examples, and admissibility of
/// `suggest_steps` on `count` random specs.
pub fn step_admissibility(count: usize) -> Vec<Outcome> {
    let inf = f64::INFINITY;
    let one = scalar_spec(&[1.0], &[1.0], inf, &[inf]);
    let two = scalar_spec(&[0.5, 0.5], &[1.0, 1.0], inf, &[inf, inf]);
    let ex1 = validate_steps(&one, 0.5, &[0.5]).expect("valid steps");
    let ex2 = validate_steps(&one, 1.0, &[1.0]).expect("valid steps");
    let ex3 = validate_steps(&two, 0.25, &[0.25, 0.25]).expect("valid steps");
    let mut out = vec![
        Outcome::at_most(5, "ρ for m=1, τ=σ=0.5 (expected 1.0)", (ex1.rho() - 1.0).abs(), 1e-14),
        Outcome::at_most(5, "ρ at τσ‖L‖² = 1 (expected 0)", ex2.rho().abs(), 1e-14),
        Outcome::at_most(5, "ρ = 0 is inadmissible", f64::from(u8::from(ex2.admissible())), 0.0),
        Outcome::at_most(5, "ρ for m=2, τ=σ=0.25 (expected 3.0)", (ex3.rho() - 3.0).abs(), 1e-14),
    ];
    let mut failures = 0usize;
    for k in 0..count {
        let mut rng = seeded_stream(0x5e75, k as u64);
        let m = rng.random_range(1..=4);
        let raw: Vec<f64> = (0..m).map(|_| 0.05 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let norms: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
        let constant = |rng: &mut Rng| {
            if rng.random::<f64>() < 0.2 {
                inf
            } else {
                log_uniform(rng, 1e-2, 1e2)
            }
        };
        let mu = constant(&mut rng);
        let nus: Vec<f64> = (0..m).map(|_| constant(&mut rng)).collect();
        let spec = scalar_spec(&weights, &norms, mu, &nus);
        let safety = 0.01 + 0.98 * rng.random::<f64>();
        let ok = suggest_steps(&spec, safety)
            .and_then(|s| validate_steps(&spec, s.tau(), s.sigmas()))
            .is_ok_and(|c| c.admissible());
        failures += usize::from(!ok);
    }
    out.push(Outcome::at_most(
        5,
        format!("suggest_steps outputs failing validate_steps ({count} random specs)"),
        failures as f64,
        0.0,
    ));
    out
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration run to stagnation.
fn top_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let mut x = vec![1.0; m.len()];
    let mut lam = 0.0;
    for _ in 0..10_000 {
        let y = matvec(m, &x);
        let ny = y.iter().map(|e| e * e).sum::<f64>().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        let next = ny / x.iter().map(|e| e * e).sum::<f64>().sqrt();
        x = y.into_iter().map(|e| e / ny).collect();
        if (next - lam).abs() <= 1e-15 * next {
            return next;
        }
        lam = next;
    }
    lam
}

fn random_certificate_spec(rng: &mut Rng) -> ProblemSpec {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=3);
    let dims: Vec<usize> = (0..m).map(|_| rng.random_range(1..=5)).collect();
    let a = random_matrix(rng, n, n, 1.0);
    let sym: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a.iter().map(|r| r[i] * r[j]).sum::<f64>() / n as f64).collect())
        .collect();
    let mu = 1.0 / (top_eigenvalue(&sym) * (1.0 + 1e-9));
    let c = CocoerciveOp::from_fn(n, mu, move |x: &[f64]| matvec(&sym, x)).expect("valid operator");
    let blocks = dims
        .iter()
        .map(|&d| {
            let d_inv = if rng.random::<f64>() < 0.5 {
                CocoerciveOp::zero(d)
            } else {
                CocoerciveOp::scaled_identity(d, log_uniform(rng, 0.2, 5.0)).expect("positive scale")
            };
            DualBlock {
                b: ResolventOp::zero(d),
                d_inv,
                l: LinearOp::dense(random_matrix(rng, d, n, 1.0)).expect("valid matrix"),
                r: vec![0.0; d],
            }
        })
        .collect();
    ProblemSpec::new(
        SpaceLayout::uniform(n, dims).expect("valid layout"),
        ResolventOp::zero(n),
        c,
        vec![0.0; n],
        blocks,
    )
    .expect("valid spec")
}

/// Skew, positivity, cocoercivity and `‖T‖` certificates on `instances`
/// random specs, each also run against a mutated operator or constant.
pub fn operator_certificates(instances: usize) -> Vec<Outcome> {
    let mut honest = [0usize; 4];
    let mut missed = [0usize; 3];
    for k in 0..instances {
        let mut rng = seeded_stream(0xce27, k as u64);
        let spec = random_certificate_spec(&mut rng);
        let safety = 0.3 + 0.69 * rng.random::<f64>();
        let cfg = suggest_steps(&spec, safety).expect("admissible suggestion");
        let ops = build_product_ops(&spec, &cfg).expect("consistent shapes");
        let seed = 0x5eed ^ k as u64;
        let checks = [
            certify_skew(&ops, DEFAULT_SAMPLES, seed).passed,
            certify_strong_positivity(&ops, DEFAULT_SAMPLES, seed).passed,
            certify_q_cocoercive(&ops, ops.beta, DEFAULT_SAMPLES, seed).passed,
            certify_t_bound(&ops, DEFAULT_SAMPLES, seed).passed,
        ];
        for (h, ok) in honest.iter_mut().zip(checks) {
            *h += usize::from(!ok);
        }
        let block = rng.random_range(0..spec.layout().num_blocks());
        let largest_diag = cfg.sigmas().iter().fold(1.0 / cfg.tau(), |a, s| a.max(1.0 / s));
        let mutated = [
            certify_skew(&ops.clone().with_s_sign_flipped(block), DEFAULT_SAMPLES, seed).passed,
            certify_strong_positivity(&ops.clone().with_rho(2.0 * largest_diag), DEFAULT_SAMPLES, seed)
                .passed,
            certify_q_cocoercive(&ops, 4.0 * ops.beta, DEFAULT_SAMPLES, seed).passed,
        ];
        for (m, caught) in missed.iter_mut().zip(mutated.map(|p| !p)) {
            *m += usize::from(!caught);
        }
    }
    let names = ["skew(S)", "self-adjoint, ρ-strongly positive V", "β-cocoercive Q", "‖T‖² bound"];
    let mut out: Vec<Outcome> = names
        .iter()
        .zip(honest)
        .map(|(n, f)| Outcome::at_most(9, format!("{n}: failing instances of {instances}"), f as f64, 0.0))
        .collect();
    let mutations = ["S with one block sign-flipped", "V with overstated ρ", "Q with β overstated 4×"];
    out.extend(mutations.iter().zip(missed).map(|(n, f)| {
        Outcome::at_most(9, format!("{n}: undetected mutations of {instances}"), f as f64, 0.0)
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_adjoint_pair() {
        let x = [1.0, -2.0, 0.5, 4.0];
        let u = [0.3, -1.0, 2.0];
        let lhs: f64 = diff(&x).iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(diff_t(&u)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn grad2d_adjoint_pair() {
        let mut rng = seeded(1);
        let x = gaussian(&mut rng, CP_H * CP_W);
        let v = gaussian(&mut rng, 2 * CP_H * CP_W);
        let lhs: f64 = grad2d(&x).iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(grad2d_t(&v)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tv_reference_on_two_points() {
        // b = (0, 1), α = 0.2: the jump shrinks by 2α, x = (0.2, 0.8)
        let x = tv1d_reference(&[0.0, 1.0], 0.2, 1000);
        assert!((x[0] - 0.2).abs() < 1e-14 && (x[1] - 0.8).abs() < 1e-14);
        // a large α fuses both points at the mean
        let x = tv1d_reference(&[0.0, 1.0], 5.0, 1000);
        assert!((x[0] - 0.5).abs() < 1e-14 && (x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn huber_reference_without_coupling() {
        // with b constant, x = b and v = 0
        let (x, v) = huber_reference(&[0.7; 5], 0.3, 2.0, 10);
        assert!(x.iter().all(|e| (e - 0.7).abs() < 1e-15));
        assert!(v.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn outcome_formatting() {
        let o = Outcome::at_most(1, "max deviation vs forward-backward", 0.0, 1e-12);
        assert_eq!(o.to_string(), "[1] max deviation vs forward-backward: 0.000e0 ≤ 1e-12: PASS");
        assert!(!Outcome::at_most(1, "x", f64::NAN, 1.0).passed);
    }
}
