use super::{ProblemSpec, SolverError, StepConfig, StepErrors};
use crate::operators::resolvent_of_inverse;
use crate::spaces::{all_finite, BlockId, BlockVector};

/// State of the iteration at step `n`: the current point `(xₙ, vₙ)` and the
/// intermediates `pₙ₋₁, yₙ₋₁, qₙ₋₁` of the step that produced it (copies of
/// the point at `n = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct IterState {
    pub n: usize,
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl IterState {
    pub fn initial(spec: &ProblemSpec, x0: Vec<f64>, v0: Vec<Vec<f64>>) -> Result<Self, SolverError> {
        let point = BlockVector::new(x0, v0);
        point.validate(spec.layout())?;
        let BlockVector { primal, duals } = point;
        Ok(Self {
            n: 0,
            p: primal.clone(),
            y: primal.clone(),
            q: duals.clone(),
            x: primal,
            v: duals,
        })
    }

    /// Zero primal and dual starting point.
    pub fn zeros(spec: &ProblemSpec) -> Self {
        let z = spec.layout().zeros();
        Self::initial(spec, z.primal, z.duals).expect("zero state matches its own layout")
    }

    /// `(xₙ, vₙ)` as a product-space vector.
    pub fn point(&self) -> BlockVector {
        BlockVector::new(self.x.clone(), self.v.clone())
    }
}

/// The forward-backward half of one step: `(pₙ, yₙ, qₙ)` from `(xₙ, vₙ)`.
#[derive(Debug, Clone)]
pub(crate) struct Intermediate {
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

fn diverged(n: usize, block: BlockId) -> SolverError {
    SolverError::Diverged {
        iteration: n,
        block,
    }
}

pub(crate) fn intermediate(
    spec: &ProblemSpec,
    cfg: &StepConfig,
    n: usize,
    x: &[f64],
    v: &[Vec<f64>],
    err: Option<&StepErrors>,
) -> Result<Intermediate, SolverError> {
    let tau = cfg.tau();
    let weights = spec.layout().weights();

    // Σ ω_i L_i* v_i, reduced in ascending block order.
    let mut acc = vec![0.0; x.len()];
    for ((blk, vi), w) in spec.blocks().iter().zip(v).zip(weights) {
        let back = blk.l.adjoint(vi);
        for (a, b) in acc.iter_mut().zip(&back) {
            *a += w * b;
        }
    }
    let cx = spec.c().apply(x);
    let a1 = err.map(|e| e.a1.as_slice());
    let arg: Vec<f64> = (0..x.len())
        .map(|k| {
            let g = acc[k] + cx[k] + a1.map_or(0.0, |a| a[k]) - spec.z()[k];
            x[k] - tau * g
        })
        .collect();
    let mut p = spec.a().resolvent(tau, &arg)?;
    if let Some(e) = err {
        for (pk, ek) in p.iter_mut().zip(&e.a2) {
            *pk += ek;
        }
    }
    if !all_finite(&p) {
        return Err(diverged(n, BlockId::Primal));
    }
    let y: Vec<f64> = p.iter().zip(x).map(|(pk, xk)| 2.0 * pk - xk).collect();

    let mut q = Vec::with_capacity(v.len());
    for (i, ((blk, vi), &sigma)) in spec.blocks().iter().zip(v).zip(cfg.sigmas()).enumerate() {
        let ly = blk.l.apply(&y);
        let dv = blk.d_inv.apply(vi);
        let ci = err.map(|e| e.c[i].as_slice());
        let arg: Vec<f64> = (0..vi.len())
            .map(|k| {
                let g = ly[k] - dv[k] - ci.map_or(0.0, |c| c[k]) - blk.r[k];
                vi[k] + sigma * g
            })
            .collect();
        let mut qi = resolvent_of_inverse(&blk.b, sigma, &arg)?;
        if let Some(e) = err {
            for (qk, ek) in qi.iter_mut().zip(&e.b[i]) {
                *qk += ek;
            }
        }
        if !all_finite(&qi) {
            return Err(diverged(n, BlockId::Dual(i)));
        }
        q.push(qi);
    }
    Ok(Intermediate { p, y, q })
}

fn relax(cur: &[f64], target: &[f64], lambda: f64) -> Vec<f64> {
    cur.iter()
        .zip(target)
        .map(|(c, t)| c + lambda * (t - c))
        .collect()
}

/// One step of the relaxed inexact primal-dual iteration:
///
/// ```text
/// pₙ   = J_{τA}(xₙ − τ(Σ ω_i L_i* v_{i,n} + C xₙ + a₁ₙ − z)) + a₂ₙ
/// yₙ   = 2pₙ − xₙ
/// xₙ₊₁ = xₙ + λₙ(pₙ − xₙ)
/// q_{i,n}   = J_{σ_i B_i⁻¹}(v_{i,n} + σ_i(L_i yₙ − D_i⁻¹ v_{i,n} − c_{i,n} − r_i)) + b_{i,n}
/// v_{i,n+1} = v_{i,n} + λₙ(q_{i,n} − v_{i,n})
/// ```
///
/// Admissibility of `cfg` is the caller's responsibility; `run` enforces it.
pub fn iterate_once(
    spec: &ProblemSpec,
    cfg: &StepConfig,
    st: &IterState,
    err: Option<&StepErrors>,
) -> Result<IterState, SolverError> {
    let lambda = cfg.check_lambda(st.n)?;
    if err.is_some_and(|e| !e.matches(spec.layout())) {
        return Err(SolverError::InvalidSteps(format!(
            "error terms at step {} do not match the layout",
            st.n
        )));
    }
    if cfg.sigmas().len() != spec.layout().num_blocks() {
        return Err(SolverError::Dimension {
            what: "σ".into(),
            expected: spec.layout().num_blocks(),
            found: cfg.sigmas().len(),
        });
    }
    BlockVector::new(st.x.clone(), st.v.clone()).validate(spec.layout())?;
    let Intermediate { p, y, q } = intermediate(spec, cfg, st.n, &st.x, &st.v, err)?;
    let x = relax(&st.x, &p, lambda);
    let v = st
        .v
        .iter()
        .zip(&q)
        .map(|(vi, qi)| relax(vi, qi, lambda))
        .collect();
    Ok(IterState {
        n: st.n + 1,
        x,
        v,
        p,
        y,
        q,
    })
}
