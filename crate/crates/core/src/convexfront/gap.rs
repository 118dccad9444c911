use super::{ConvexError, ConvexProblem};
use crate::operators::{prox_conjugate, ProxFunction};
use crate::spaces::{dot, norm, BlockVector};

use super::terms::{SmoothTerm, StrongTerm};

/// Primal and dual objective values, their sum, and the KKT residual at a
/// primal-dual pair. A `None` objective could not be evaluated in closed
/// form; the reason is in `notes`. Infinite values mark points outside the
/// domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub primal_value: Option<f64>,
    pub dual_value: Option<f64>,
    /// `primal + dual`; nonnegative up to roundoff by weak duality.
    pub gap: Option<f64>,
    pub kkt_residual: f64,
    pub notes: Vec<String>,
}

/// `(g □ ℓ)(w) = inf_y g(y) + ℓ(w − y)`, for `ℓ = ι{0}` (giving `g`) and
/// quadratic `ℓ` (giving the Moreau envelope of `g` with parameter `1/ν`).
pub fn infimal_convolution(g: &ProxFunction, ell: &StrongTerm, w: &[f64]) -> Result<f64, String> {
    if ell.is_zero_indicator() {
        return Ok(g.evaluate(w));
    }
    if ell.is_quadratic() {
        let nu = ell.nu();
        let y = g.prox(1.0 / nu, w).map_err(|e| e.to_string())?;
        let d: Vec<f64> = w.iter().zip(&y).map(|(a, b)| a - b).collect();
        return Ok(g.evaluate(&y) + 0.5 * nu * dot(&d, &d));
    }
    Err("g □ ℓ has no closed form for a custom ℓ".into())
}

/// `(f* □ h*)(u)`: `f*(u)` when `h = 0`, and `(f + h)*(u)` evaluated at its
/// maximizer `prox_{f/w}(c + u/w)` when `h = (w/2)‖· − c‖²`.
pub fn conjugate_of_sum(f: &ProxFunction, h: &SmoothTerm, u: &[f64]) -> Result<f64, String> {
    if h.is_zero() {
        return f
            .conjugate(u)
            .ok_or_else(|| "f* has no closed form for a custom f".to_string());
    }
    if let Some((w, c)) = h.as_quadratic() {
        let arg: Vec<f64> = c.iter().zip(u).map(|(ci, ui)| ci + ui / w).collect();
        let x = f.prox(1.0 / w, &arg).map_err(|e| e.to_string())?;
        return Ok(dot(u, &x) - f.evaluate(&x) - h.value(&x));
    }
    Err("f* □ h* has no closed form for a custom h".into())
}

fn check_shapes(cp: &ConvexProblem, x: &[f64], v: &[Vec<f64>]) -> Result<(), ConvexError> {
    BlockVector::new(x.to_vec(), v.to_vec()).validate(cp.layout())?;
    Ok(())
}

/// `f(x) + Σ ω_i (g_i □ ℓ_i)(L_i x − r_i) + h(x) − ⟨x, z⟩`.
pub fn primal_value(cp: &ConvexProblem, x: &[f64]) -> Result<f64, String> {
    let mut total = cp.f().evaluate(x) + cp.h().value(x) - dot(x, cp.z());
    for (blk, w) in cp.blocks().iter().zip(cp.layout().weights()) {
        let arg: Vec<f64> = blk.l.apply(x).iter().zip(&blk.r).map(|(a, r)| a - r).collect();
        total += w * infimal_convolution(&blk.g, &blk.ell, &arg)?;
    }
    Ok(total)
}

/// `(f* □ h*)(z − Σ ω_i L_i* v_i) + Σ ω_i (g_i*(v_i) + ℓ_i*(v_i) + ⟨v_i, r_i⟩)`.
pub fn dual_value(cp: &ConvexProblem, v: &[Vec<f64>]) -> Result<f64, String> {
    let weights = cp.layout().weights();
    let mut u = cp.z().to_vec();
    let mut tail = 0.0;
    for (i, ((blk, vi), w)) in cp.blocks().iter().zip(v).zip(weights).enumerate() {
        let back = blk.l.adjoint(vi);
        for (uk, bk) in u.iter_mut().zip(&back) {
            *uk -= w * bk;
        }
        let g_star = blk
            .g
            .conjugate(vi)
            .ok_or_else(|| format!("g_{i}* has no closed form for a custom g_{i}"))?;
        let ell_star = blk
            .ell
            .conjugate(vi)
            .ok_or_else(|| format!("ℓ_{i}* was not supplied"))?;
        tail += w * (g_star + ell_star + dot(vi, &blk.r));
    }
    Ok(conjugate_of_sum(cp.f(), cp.h(), &u)? + tail)
}

/// Fixed-point residual of the exact minimization iteration:
/// `‖x − prox_{τf}(x − τ(Σ ω_i L_i* v_i + ∇h(x) − z))‖
///  + Σ ω_i ‖v_i − prox_{σ_i g_i*}(v_i + σ_i(L_i x − ∇ℓ_i*(v_i) − r_i))‖`.
/// Zero exactly at primal-dual solutions.
pub fn kkt_residual(
    cp: &ConvexProblem,
    x: &[f64],
    v: &[Vec<f64>],
    tau: f64,
    sigmas: &[f64],
) -> Result<f64, ConvexError> {
    check_shapes(cp, x, v)?;
    if sigmas.len() != v.len() {
        return Err(ConvexError::Dimension {
            what: "σ".into(),
            expected: v.len(),
            found: sigmas.len(),
        });
    }
    let weights = cp.layout().weights();
    let mut acc = cp.h().gradient(x);
    for (k, zk) in cp.z().iter().enumerate() {
        acc[k] -= zk;
    }
    for ((blk, vi), w) in cp.blocks().iter().zip(v).zip(weights) {
        let back = blk.l.adjoint(vi);
        for (a, b) in acc.iter_mut().zip(&back) {
            *a += w * b;
        }
    }
    let arg: Vec<f64> = x.iter().zip(&acc).map(|(xk, ak)| xk - tau * ak).collect();
    let p = cp.f().prox(tau, &arg)?;
    let diff: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
    let mut total = norm(&diff);
    for (((blk, vi), w), &sigma) in cp.blocks().iter().zip(v).zip(weights).zip(sigmas) {
        let lx = blk.l.apply(x);
        let dv = blk.ell.grad_conjugate(vi);
        let arg: Vec<f64> = (0..vi.len())
            .map(|k| vi[k] + sigma * (lx[k] - dv[k] - blk.r[k]))
            .collect();
        let q = prox_conjugate(&blk.g, sigma, &arg)?;
        let diff: Vec<f64> = vi.iter().zip(&q).map(|(a, b)| a - b).collect();
        total += w * norm(&diff);
    }
    Ok(total)
}

/// Objectives, gap and KKT residual with the given steps in the residual.
pub fn evaluate_gap_with_steps(
    cp: &ConvexProblem,
    x: &[f64],
    v: &[Vec<f64>],
    tau: f64,
    sigmas: &[f64],
) -> Result<GapReport, ConvexError> {
    let kkt = kkt_residual(cp, x, v, tau, sigmas)?;
    let mut notes = Vec::new();
    let primal = primal_value(cp, x)
        .map_err(|why| notes.push(format!("primal objective not evaluable: {why}")))
        .ok();
    let dual = dual_value(cp, v)
        .map_err(|why| notes.push(format!("dual objective not evaluable: {why}")))
        .ok();
    if primal == Some(f64::INFINITY) {
        notes.push("primal point is outside the domain (objective +∞)".into());
    }
    if dual == Some(f64::INFINITY) {
        notes.push("dual point is infeasible (objective +∞)".into());
    }
    let gap = match (primal, dual) {
        (Some(p), Some(d)) => Some(p + d),
        _ => {
            notes.push("gap omitted".into());
            None
        }
    };
    Ok(GapReport {
        primal_value: primal,
        dual_value: dual,
        gap,
        kkt_residual: kkt,
        notes,
    })
}

/// [`evaluate_gap_with_steps`] with unit steps `τ = σ_i = 1` in the KKT
/// residual.
pub fn evaluate_gap(cp: &ConvexProblem, x: &[f64], v: &[Vec<f64>]) -> Result<GapReport, ConvexError> {
    let ones = vec![1.0; cp.layout().num_blocks()];
    evaluate_gap_with_steps(cp, x, v, 1.0, &ones)
}
