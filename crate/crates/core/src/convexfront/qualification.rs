use rand::Rng as _;

use super::terms::{SmoothTerm, StrongTerm};
use super::{solve_convex, ConvexBlock, ConvexProblem, SolveOptions, StepChoice};
use crate::operators::{Domain, ProxFunction};
use crate::sampling::{gaussian, seeded};
use crate::solver::StoppingRule;

const SAMPLES: usize = 64;
const SEED: u64 = 0x9a1f_0051;

/// Verdict of the sufficient domain condition
/// `∃ x ∈ ri dom f : L_i x − r_i ∈ ri dom g_i + ri dom ℓ_i` for all `i`.
/// The condition is only sufficient, so there is no "violated" verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Qualification {
    Satisfied { witness: Vec<f64> },
    NotVerified { reason: String },
}

impl Qualification {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Self::Satisfied { .. })
    }
}

/// Relative interior of a product of intervals: coordinate `j` is the open
/// interval `(lower_j, upper_j)`, or the point `lower_j` when the bounds
/// coincide.
#[derive(Debug, Clone, PartialEq)]
struct RelInterior {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RelInterior {
    fn of(domain: Domain) -> Option<Self> {
        match domain {
            Domain::Intervals { lower, upper } => Some(Self { lower, upper }),
            Domain::Unknown => None,
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| if lo == hi { v == lo } else { lo < v && v < hi })
    }

    fn has_point_coordinate(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(a, b)| a == b)
    }

    fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            })
            .collect()
    }

    /// Closed box inside the relative interior, keeping a `fraction` of
    /// each finite width as margin on both sides.
    fn shrunk(&self, fraction: f64) -> (Vec<f64>, Vec<f64>) {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    let q = fraction * (hi - lo);
                    (lo + q, hi - q)
                }
                (true, false) => (lo + 1.0, hi),
                (false, true) => (lo, hi - 1.0),
                (false, false) => (lo, hi),
            })
            .unzip()
    }

    fn sample(&self, rng: &mut crate::sampling::Rng) -> Vec<f64> {
        let g = gaussian(rng, self.lower.len());
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(g)
            .map(|((&lo, &hi), e)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => lo + (hi - lo) * rng.random::<f64>(),
                (true, false) => lo + e.abs() + 1e-3,
                (false, true) => hi - e.abs() - 1e-3,
                (false, false) => 3.0 * e,
            })
            .collect()
    }
}

/// `ri dom g + ri dom ℓ` for the catalog cases: `ℓ` with full domain makes
/// the sum the whole space; `ℓ = ι{0}` leaves `ri dom g`.
fn block_target(blk: &ConvexBlock) -> Result<RelInterior, String> {
    let g = RelInterior::of(blk.g.domain()).ok_or("dom g has no catalog description")?;
    let ell = RelInterior::of(blk.ell.domain()).ok_or("dom ℓ has no catalog description")?;
    let mut out = g;
    for j in 0..out.lower.len() {
        let (a, b) = (ell.lower[j], ell.upper[j]);
        if a == f64::NEG_INFINITY && b == f64::INFINITY {
            out.lower[j] = f64::NEG_INFINITY;
            out.upper[j] = f64::INFINITY;
        } else if a == b {
            out.lower[j] += a;
            out.upper[j] += a;
        } else {
            return Err("ri dom ℓ is neither a point nor the whole space".into());
        }
    }
    Ok(out)
}

/// Searches candidate points of `ri dom f`: its center, seeded samples and,
/// when no target coordinate is a single point, the result of a feasibility
/// solve toward boxes well inside the targets. Membership is tested exactly
/// (strict inequalities, equality for point coordinates).
pub fn check_qualification(cp: &ConvexProblem) -> Qualification {
    let not_verified = |reason: String| Qualification::NotVerified { reason };
    let Some(dom_f) = RelInterior::of(cp.f().domain()) else {
        return not_verified("dom f has no catalog description".into());
    };
    let mut targets = Vec::with_capacity(cp.blocks().len());
    for (i, blk) in cp.blocks().iter().enumerate() {
        match block_target(blk) {
            Ok(t) => targets.push(t),
            Err(why) => return not_verified(format!("block {i}: {why}")),
        }
    }
    let feasible = |x: &[f64]| {
        dom_f.contains(x)
            && cp.blocks().iter().zip(&targets).all(|(blk, t)| {
                let w: Vec<f64> = blk.l.apply(x).iter().zip(&blk.r).map(|(a, r)| a - r).collect();
                t.contains(&w)
            })
    };

    let mut rng = seeded(SEED);
    let mut candidates = vec![dom_f.center()];
    candidates.extend((0..SAMPLES).map(|_| dom_f.sample(&mut rng)));
    if let Some(x) = candidates.into_iter().find(|x| feasible(x)) {
        return Qualification::Satisfied { witness: x };
    }

    if targets.iter().any(RelInterior::has_point_coordinate) {
        return not_verified(
            "no sampled point of ri dom f meets the point constraints exactly".into(),
        );
    }
    match refine(cp, &dom_f, &targets) {
        Some(x) if feasible(&x) => Qualification::Satisfied { witness: x },
        _ => not_verified("no interior point found by sampling or the feasibility solve".into()),
    }
}

/// Solves `find x ∈ K_f with L_i x − r_i ∈ K_i` for shrunk boxes `K`. The
/// primal iterate is a projection onto `K_f`, so a thin margin there
/// suffices; the targets get a wide one to absorb the remaining residual.
fn refine(cp: &ConvexProblem, dom_f: &RelInterior, targets: &[RelInterior]) -> Option<Vec<f64>> {
    let (lo, hi) = dom_f.shrunk(0.01);
    let f = ProxFunction::box_indicator(lo, hi).ok()?;
    let blocks = cp
        .blocks()
        .iter()
        .zip(targets)
        .map(|(blk, t)| {
            let (lo, hi) = t.shrunk(0.25);
            Some(ConvexBlock {
                g: ProxFunction::box_indicator(lo, hi).ok()?,
                ell: StrongTerm::zero_indicator(blk.ell.dim()),
                l: blk.l.clone(),
                r: blk.r.clone(),
            })
        })
        .collect::<Option<Vec<_>>>()?;
    let n = cp.layout().dim_primal();
    let feas = ConvexProblem::new(
        cp.layout().clone(),
        f,
        SmoothTerm::zero(n),
        vec![0.0; n],
        blocks,
    )
    .ok()?;
    let opts = SolveOptions {
        steps: StepChoice::Auto { safety: 0.9 },
        stop: StoppingRule::new(1e-12, 20_000),
        x0: Some(dom_f.center()),
        ..Default::default()
    };
    let sol = solve_convex(&feas, &opts).ok()?;
    Some(sol.report.final_state.p)
}
