//! Product-space operators of the convergence argument and sampled
//! certificates of the properties it relies on.
//!
//! On `K = H ⊕ G_1 ⊕ … ⊕ G_m` with `⟨u, w⟩_K = ⟨x, x'⟩ + Σ ω_i ⟨v_i, v_i'⟩`:
//!
//! ```text
//! S(x, v) = (Σ ω_i L_i* v_i, −L_1 x, …, −L_m x)          (skew)
//! Q(x, v) = (C x, D_1⁻¹ v_1, …, D_m⁻¹ v_m)                (β-cocoercive)
//! V(x, v) = (x/τ − Σ ω_i L_i* v_i, v_i/σ_i − L_i x, …)     (ρ-strongly positive)
//! T x     = (√σ_1 L_1 x, …, √σ_m L_m x)
//! ```
//!
//! The iteration is a forward-backward step in the metric of `V`, so error
//! free runs are Fejér monotone in `‖·‖_V`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sampling::{gaussian, seeded, Rng};
use crate::solver::{ProblemSpec, RunReport, StepConfig};
use crate::spaces::{inner_weighted_unchecked, norm_weighted_unchecked, BlockVector, SpaceError, SpaceLayout};

/// Samples per certificate unless told otherwise.
pub const DEFAULT_SAMPLES: usize = 128;
pub const SKEW_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const SELF_ADJOINT_TOL: f64 = 1e-10;
pub const LINEARITY_TOL: f64 = 1e-10;
pub const COCOERCIVE_TOL: f64 = 1e-9;
pub const FEJER_SLACK: f64 = 1e-10;
/// Canonical basis directions added to the random samples, at most.
const MAX_BASIS: usize = 256;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("σ has {found} entries for {expected} blocks")]
    StepShape { expected: usize, found: usize },
    #[error("Fejér monitor declined: {0}")]
    Declined(String),
}

type BlockMap = Arc<dyn Fn(&BlockVector) -> BlockVector + Send + Sync>;

/// `S`, `Q`, `V` and `T` of one problem and step configuration.
#[derive(Clone)]
pub struct ProductOps {
    layout: SpaceLayout,
    s: BlockMap,
    q: BlockMap,
    v: BlockMap,
    t: Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>,
    t_bound: f64,
    pub rho: f64,
    pub beta: f64,
    pub delta: f64,
}

impl fmt::Debug for ProductOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProductOps")
            .field("layout", &self.layout)
            .field("rho", &self.rho)
            .field("beta", &self.beta)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

fn weighted_adjoint_sum(spec: &ProblemSpec, v: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; spec.layout().dim_primal()];
    for ((blk, vi), w) in spec.blocks().iter().zip(v).zip(spec.layout().weights()) {
        for (a, b) in acc.iter_mut().zip(blk.l.adjoint(vi)) {
            *a += w * b;
        }
    }
    acc
}

pub fn build_product_ops(spec: &ProblemSpec, cfg: &StepConfig) -> Result<ProductOps, DiagnosticsError> {
    let m = spec.layout().num_blocks();
    if cfg.sigmas().len() != m {
        return Err(DiagnosticsError::StepShape {
            expected: m,
            found: cfg.sigmas().len(),
        });
    }
    let sp = Arc::new(spec.clone());

    let s = {
        let sp = Arc::clone(&sp);
        Arc::new(move |u: &BlockVector| {
            let primal = weighted_adjoint_sum(&sp, &u.duals);
            let duals = sp
                .blocks()
                .iter()
                .map(|b| b.l.apply(&u.primal).into_iter().map(|e| -e).collect())
                .collect();
            BlockVector::new(primal, duals)
        }) as BlockMap
    };
    let q = {
        let sp = Arc::clone(&sp);
        Arc::new(move |u: &BlockVector| {
            let primal = sp.c().apply(&u.primal);
            let duals = sp
                .blocks()
                .iter()
                .zip(&u.duals)
                .map(|(b, vi)| b.d_inv.apply(vi))
                .collect();
            BlockVector::new(primal, duals)
        }) as BlockMap
    };
    let v = {
        let sp = Arc::clone(&sp);
        let tau = cfg.tau();
        let sigmas = cfg.sigmas().to_vec();
        Arc::new(move |u: &BlockVector| {
            let back = weighted_adjoint_sum(&sp, &u.duals);
            let primal = u.primal.iter().zip(&back).map(|(x, b)| x / tau - b).collect();
            let duals = sp
                .blocks()
                .iter()
                .zip(&u.duals)
                .zip(&sigmas)
                .map(|((b, vi), s)| {
                    let lx = b.l.apply(&u.primal);
                    vi.iter().zip(&lx).map(|(e, l)| e / s - l).collect()
                })
                .collect();
            BlockVector::new(primal, duals)
        }) as BlockMap
    };
    let t = {
        let sp = Arc::clone(&sp);
        let roots: Vec<f64> = cfg.sigmas().iter().map(|s| s.sqrt()).collect();
        Arc::new(move |x: &[f64]| {
            sp.blocks()
                .iter()
                .zip(&roots)
                .map(|(b, r)| b.l.apply(x).into_iter().map(|e| r * e).collect())
                .collect()
        })
    };
    let t_bound = spec
        .layout()
        .weights()
        .iter()
        .zip(cfg.sigmas())
        .zip(spec.norm_bounds())
        .map(|((w, s), l)| w * s * l * l)
        .sum();
    Ok(ProductOps {
        layout: spec.layout().clone(),
        s,
        q,
        v,
        t,
        t_bound,
        rho: cfg.rho(),
        beta: cfg.beta(),
        delta: cfg.delta(),
    })
}

impl ProductOps {
    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn checked(&self, u: &BlockVector) -> Result<(), DiagnosticsError> {
        self.layout.check(u)?;
        Ok(())
    }

    pub fn apply_s(&self, u: &BlockVector) -> Result<BlockVector, DiagnosticsError> {
        self.checked(u)?;
        Ok((self.s)(u))
    }

    pub fn apply_q(&self, u: &BlockVector) -> Result<BlockVector, DiagnosticsError> {
        self.checked(u)?;
        Ok((self.q)(u))
    }

    pub fn apply_v(&self, u: &BlockVector) -> Result<BlockVector, DiagnosticsError> {
        self.checked(u)?;
        Ok((self.v)(u))
    }

    /// `T x = (√σ_i L_i x)_i`.
    pub fn apply_t(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.t)(x)
    }

    /// `Σ ω_i σ_i ‖L_i‖²`, an upper bound on `‖T‖²` in the weighted norm.
    pub fn t_bound(&self) -> f64 {
        self.t_bound
    }

    /// `‖u‖_V = √⟨u, V u⟩_K`, clamped at zero.
    pub fn v_norm(&self, u: &BlockVector) -> Result<f64, DiagnosticsError> {
        let vu = self.apply_v(u)?;
        Ok(self.inner(u, &vu).max(0.0).sqrt())
    }

    fn inner(&self, a: &BlockVector, b: &BlockVector) -> f64 {
        inner_weighted_unchecked(a, b, self.layout.weights())
    }

    fn norm_sq(&self, a: &BlockVector) -> f64 {
        self.inner(a, a)
    }

    /// Mutation: negates the `block`-th dual component of `S`, which breaks
    /// skewness.
    pub fn with_s_sign_flipped(mut self, block: usize) -> Self {
        let inner = Arc::clone(&self.s);
        self.s = Arc::new(move |u| {
            let mut out = inner(u);
            if let Some(d) = out.duals.get_mut(block) {
                d.iter_mut().for_each(|e| *e = -*e);
            }
            out
        });
        self
    }

    /// Replaces the strong-positivity constant, e.g. to overstate it.
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    /// Replaces the cocoercivity constant, e.g. to overstate it.
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// Outcome of one sampled certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: &'static str,
    pub passed: bool,
    /// Number of test vectors (or pairs) evaluated.
    pub samples: usize,
    /// Smallest slack of the certified inequality; negative on failure.
    pub worst_slack: f64,
    pub notes: Vec<String>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (samples {}, worst slack {:.6e})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.samples,
            self.worst_slack
        )?;
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

fn random_block(layout: &SpaceLayout, rng: &mut Rng) -> BlockVector {
    BlockVector::new(
        gaussian(rng, layout.dim_primal()),
        layout.dual_dims().iter().map(|&g| gaussian(rng, g)).collect(),
    )
}

/// Seeded Gaussian vectors normalized to unit `K`-norm.
fn unit_samples(layout: &SpaceLayout, samples: usize, seed: u64) -> Vec<BlockVector> {
    let mut rng = seeded(seed);
    (0..samples)
        .map(|_| {
            let mut u = random_block(layout, &mut rng);
            let n = norm_weighted_unchecked(&u, layout.weights());
            if n > 0.0 {
                u.scale(1.0 / n);
            }
            u
        })
        .collect()
}

/// Canonical basis vectors of `K`, primal coordinates first.
pub fn canonical_basis(layout: &SpaceLayout) -> Vec<BlockVector> {
    let mut out = Vec::with_capacity(layout.total_dim());
    for j in 0..layout.total_dim() {
        let mut flat = vec![0.0; layout.total_dim()];
        flat[j] = 1.0;
        out.push(BlockVector::from_flat(layout, &flat).expect("flat vector matches its layout"));
    }
    out
}

fn probes(layout: &SpaceLayout, samples: usize, seed: u64) -> Vec<BlockVector> {
    let mut all = unit_samples(layout, samples, seed);
    all.extend(canonical_basis(layout).into_iter().take(MAX_BASIS));
    all
}

fn combine(a: f64, u: &BlockVector, b: f64, w: &BlockVector) -> BlockVector {
    let mut out = u.clone();
    out.scale(a);
    out.axpy_in_place(b, w);
    out
}

/// Relative linearity defect of `op` on `(u, w)` with fixed coefficients.
fn linearity_defect(ops: &ProductOps, op: &BlockMap, u: &BlockVector, w: &BlockVector) -> f64 {
    let (a, b) = (0.75, -1.25);
    let lhs = op(&combine(a, u, b, w));
    let rhs = combine(a, &op(u), b, &op(w));
    let mut diff = lhs;
    diff.axpy_in_place(-1.0, &rhs);
    let scale = 1.0 + norm_weighted_unchecked(&rhs, ops.layout.weights());
    norm_weighted_unchecked(&diff, ops.layout.weights()) / scale
}

/// `|⟨u, S u⟩_K|`.
pub fn skew_margin(ops: &ProductOps, u: &BlockVector) -> Result<f64, DiagnosticsError> {
    let su = ops.apply_s(u)?;
    Ok(ops.inner(u, &su).abs())
}

/// `⟨u, V u⟩_K − ρ‖u‖²_K`.
pub fn positivity_margin(ops: &ProductOps, u: &BlockVector) -> Result<f64, DiagnosticsError> {
    let vu = ops.apply_v(u)?;
    Ok(ops.inner(u, &vu) - ops.rho * ops.norm_sq(u))
}

/// `|⟨u, S u⟩_K| ≤ 1e-10·(1 + ‖u‖²)` on random unit vectors and the
/// canonical basis, plus linearity of `S`.
pub fn certify_skew(ops: &ProductOps, samples: usize, seed: u64) -> Certificate {
    let us = probes(&ops.layout, samples, seed);
    let mut worst = f64::INFINITY;
    for u in &us {
        let m = (ops.s)(u);
        let slack = SKEW_TOL * (1.0 + ops.norm_sq(u)) - ops.inner(u, &m).abs();
        worst = worst.min(slack);
    }
    let mut notes = Vec::new();
    let lin = us
        .windows(2)
        .map(|p| linearity_defect(ops, &ops.s, &p[0], &p[1]))
        .fold(0.0, f64::max);
    if lin > LINEARITY_TOL {
        notes.push(format!("S is not linear (defect {lin:.3e})"));
    }
    Certificate {
        name: "skew(S)",
        passed: worst >= 0.0 && lin <= LINEARITY_TOL,
        samples: us.len(),
        worst_slack: worst,
        notes,
    }
}

/// `⟨u, V u⟩_K ≥ ρ‖u‖²_K − 1e-9` and `|⟨u, V w⟩_K − ⟨V u, w⟩_K| ≤ 1e-10`,
/// plus linearity of `V`. Fails, with a note, when `ρ ≤ 0` since the
/// inequality is then vacuous.
pub fn certify_strong_positivity(ops: &ProductOps, samples: usize, seed: u64) -> Certificate {
    let us = probes(&ops.layout, samples, seed);
    let mut worst = f64::INFINITY;
    for u in &us {
        let vu = (ops.v)(u);
        let slack = ops.inner(u, &vu) - ops.rho * ops.norm_sq(u) + POSITIVITY_TOL;
        worst = worst.min(slack);
    }
    let mut notes = Vec::new();
    let mut asym: f64 = 0.0;
    let mut lin: f64 = 0.0;
    for p in us.windows(2) {
        let (u, w) = (&p[0], &p[1]);
        let a = ops.inner(u, &(ops.v)(w));
        let b = ops.inner(&(ops.v)(u), w);
        asym = asym.max((a - b).abs());
        lin = lin.max(linearity_defect(ops, &ops.v, u, w));
    }
    if asym > SELF_ADJOINT_TOL {
        notes.push(format!("V is not self-adjoint (defect {asym:.3e})"));
    }
    if lin > LINEARITY_TOL {
        notes.push(format!("V is not linear (defect {lin:.3e})"));
    }
    let vacuous = !(ops.rho > 0.0);
    if vacuous {
        notes.push(format!("ρ = {:.6e} ≤ 0: strong positivity is vacuous", ops.rho));
    }
    Certificate {
        name: "strong-positivity(V)",
        passed: worst >= 0.0 && asym <= SELF_ADJOINT_TOL && lin <= LINEARITY_TOL && !vacuous,
        samples: us.len(),
        worst_slack: worst,
        notes,
    }
}

/// `⟨u − w, Q u − Q w⟩_K ≥ β‖Q u − Q w‖²_K − 1e-9` over seeded pairs at
/// two scales.
pub fn certify_q_cocoercive(ops: &ProductOps, beta: f64, samples: usize, seed: u64) -> Certificate {
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    for k in 0..samples {
        let scale = if k % 2 == 0 { 1.0 } else { 10.0 };
        let mut u = random_block(&ops.layout, &mut rng);
        let mut w = random_block(&ops.layout, &mut rng);
        u.scale(scale);
        w.scale(scale);
        let mut du = u.clone();
        du.axpy_in_place(-1.0, &w);
        let mut dq = (ops.q)(&u);
        dq.axpy_in_place(-1.0, &(ops.q)(&w));
        let lhs = ops.inner(&du, &dq);
        let rhs = ops.norm_sq(&dq);
        // β‖·‖² with β = +∞ and a zero difference is 0, not NaN
        let scaled = if rhs == 0.0 { 0.0 } else { beta * rhs };
        worst = worst.min(lhs - scaled + COCOERCIVE_TOL);
    }
    Certificate {
        name: "cocoercive(Q)",
        passed: worst >= 0.0,
        samples,
        worst_slack: worst,
        notes: vec![format!("β = {beta}")],
    }
}

/// Sampled Rayleigh quotients `‖T x‖²_K / ‖x‖²` against `Σ ω_i σ_i ‖L_i‖²`.
pub fn certify_t_bound(ops: &ProductOps, samples: usize, seed: u64) -> Certificate {
    let mut rng = seeded(seed);
    let weights = ops.layout.weights();
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = gaussian(&mut rng, ops.layout.dim_primal());
        let nx: f64 = x.iter().map(|e| e * e).sum();
        if nx == 0.0 {
            continue;
        }
        let tx = ops.apply_t(&x);
        let ntx: f64 = tx
            .iter()
            .zip(weights)
            .map(|(b, w)| w * b.iter().map(|e| e * e).sum::<f64>())
            .sum();
        worst = worst.min(ops.t_bound + 1e-9 - ntx / nx);
    }
    Certificate {
        name: "norm-bound(T)",
        passed: worst >= 0.0,
        samples,
        worst_slack: worst,
        notes: vec![format!("bound {:.6e}", ops.t_bound)],
    }
}

/// Skew, strong-positivity and cocoercivity certificates with the
/// configuration's own constants.
pub fn certify_all(ops: &ProductOps, samples: usize, seed: u64) -> Vec<Certificate> {
    vec![
        certify_skew(ops, samples, seed),
        certify_strong_positivity(ops, samples, seed.wrapping_add(1)),
        certify_q_cocoercive(ops, ops.beta, samples, seed.wrapping_add(2)),
    ]
}

/// `dₙ = ‖(xₙ, vₙ) − (x_N, v_N)‖_V` along a recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FejerSeries {
    pub distances: Vec<f64>,
    /// Largest `d_{n+1} − dₙ`; at most 0 for a monotone series.
    pub max_increase: f64,
    pub monotone: bool,
}

/// Declines runs with injected errors (summable errors break exact
/// monotonicity) and runs without a recorded trajectory.
pub fn fejer_monitor(report: &RunReport, ops: &ProductOps) -> Result<FejerSeries, DiagnosticsError> {
    if report.errors_injected {
        return Err(DiagnosticsError::Declined(
            "the run used nonzero errors, which break exact Fejér monotonicity".into(),
        ));
    }
    let Some(traj) = report.trajectory.as_ref() else {
        return Err(DiagnosticsError::Declined(
            "the run did not record its trajectory".into(),
        ));
    };
    let last = traj.last().expect("trajectory holds at least the start point");
    let mut distances = Vec::with_capacity(traj.len());
    for pt in traj {
        let mut d = pt.clone();
        d.axpy_in_place(-1.0, last);
        distances.push(ops.v_norm(&d)?);
    }
    let max_increase = distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FejerSeries {
        monotone: !(max_increase > FEJER_SLACK),
        max_increase,
        distances,
    })
}
