use super::terms::{SmoothTerm, StrongTerm, GRADIENT_CHECK_POINTS};
use super::ConvexError;
use crate::operators::{LinearOp, ProxFunction, ResolventOp};
use crate::solver::{DualBlock, ProblemSpec};
use crate::spaces::SpaceLayout;

const GRADIENT_CHECK_SEED: u64 = 0x6c0c_4b00;

/// One term `ω_i (g_i □ ℓ_i)(L_i x − r_i)` of the primal objective.
#[derive(Debug, Clone)]
pub struct ConvexBlock {
    pub g: ProxFunction,
    pub ell: StrongTerm,
    pub l: LinearOp,
    pub r: Vec<f64>,
}

/// `minimize f(x) + Σ ω_i (g_i □ ℓ_i)(L_i x − r_i) + h(x) − ⟨x, z⟩`
/// together with its dual
/// `minimize (f* □ h*)(z − Σ ω_i L_i* v_i) + Σ ω_i (g_i*(v_i) + ℓ_i*(v_i) + ⟨v_i, r_i⟩)`.
#[derive(Debug, Clone)]
pub struct ConvexProblem {
    layout: SpaceLayout,
    f: ProxFunction,
    h: SmoothTerm,
    z: Vec<f64>,
    blocks: Vec<ConvexBlock>,
}

impl ConvexProblem {
    /// Validates shapes and constants and runs a central-difference check of
    /// `∇h` at seeded points.
    pub fn new(
        layout: SpaceLayout,
        f: ProxFunction,
        h: SmoothTerm,
        z: Vec<f64>,
        blocks: Vec<ConvexBlock>,
    ) -> Result<Self, ConvexError> {
        let n = layout.dim_primal();
        let dim = |what: String, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(ConvexError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        dim("f".into(), n, f.dim())?;
        dim("h".into(), n, h.dim())?;
        dim("z".into(), n, z.len())?;
        dim("number of blocks".into(), layout.num_blocks(), blocks.len())?;
        if !(h.mu() > 0.0) {
            return Err(ConvexError::InvalidConstant {
                what: "μ".into(),
                value: h.mu(),
            });
        }
        for (i, (blk, &gi)) in blocks.iter().zip(layout.dual_dims()).enumerate() {
            dim(format!("g_{i}"), gi, blk.g.dim())?;
            dim(format!("ℓ_{i}"), gi, blk.ell.dim())?;
            dim(format!("L_{i} input"), n, blk.l.in_dim())?;
            dim(format!("L_{i} output"), gi, blk.l.out_dim())?;
            dim(format!("r_{i}"), gi, blk.r.len())?;
            if !(blk.ell.nu() > 0.0) {
                return Err(ConvexError::InvalidConstant {
                    what: format!("ν_{i}"),
                    value: blk.ell.nu(),
                });
            }
        }
        if !h.is_zero() {
            let check = h.gradient_check(GRADIENT_CHECK_POINTS, GRADIENT_CHECK_SEED);
            if !check.passed {
                return Err(ConvexError::GradientCheck {
                    max_rel_error: check.max_rel_error,
                });
            }
        }
        Ok(Self {
            layout,
            f,
            h,
            z,
            blocks,
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn f(&self) -> &ProxFunction {
        &self.f
    }

    pub fn h(&self) -> &SmoothTerm {
        &self.h
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn blocks(&self) -> &[ConvexBlock] {
        &self.blocks
    }
}

/// The inclusion solved by the primal-dual iteration: `A = ∂f`, `C = ∇h`,
/// `B_i = ∂g_i`, `D_i⁻¹ = ∇ℓ_i*`. Resolvents become proximity operators and
/// `J_{σB_i⁻¹} = prox_{σ g_i*}`.
///
/// The error term `c_{i,n}` enters the dual step with a minus sign, the
/// convention of the general iteration; pass `−c` to reproduce the plus-sign
/// form often written for the minimization setting.
pub fn lower_to_inclusion(cp: &ConvexProblem) -> Result<ProblemSpec, ConvexError> {
    let blocks = cp
        .blocks
        .iter()
        .map(|b| DualBlock {
            b: ResolventOp::subdifferential(b.g.clone()),
            d_inv: b.ell.to_cocoercive(),
            l: b.l.clone(),
            r: b.r.clone(),
        })
        .collect();
    Ok(ProblemSpec::new(
        cp.layout.clone(),
        ResolventOp::subdifferential(cp.f.clone()),
        cp.h.to_cocoercive(),
        cp.z.clone(),
        blocks,
    )?)
}
