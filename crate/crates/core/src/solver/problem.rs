use super::SolverError;
use crate::operators::{certify_norm, CertifiedNorm, CocoerciveOp, LinearOp, ResolventOp};
use crate::spaces::SpaceLayout;

/// Probes used to validate adjoints when a problem is assembled.
const ADJOINT_PROBES: usize = 8;
const ADJOINT_TOL: f64 = 1e-10;

/// One dual block `(B_i, D_i⁻¹, L_i, r_i)`.
#[derive(Debug, Clone)]
pub struct DualBlock {
    /// Maximally monotone `B_i` on `G_i`, given by its resolvent.
    pub b: ResolventOp,
    /// `ν_i`-cocoercive `D_i⁻¹` on `G_i`.
    pub d_inv: CocoerciveOp,
    /// `L_i : H → G_i`.
    pub l: LinearOp,
    pub r: Vec<f64>,
}

/// Data of the primal inclusion
/// `z ∈ Ax + Σ ω_i L_i*((B_i □ D_i)(L_i x − r_i)) + Cx`
/// and its dual.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    layout: SpaceLayout,
    a: ResolventOp,
    c: CocoerciveOp,
    z: Vec<f64>,
    blocks: Vec<DualBlock>,
    norms: Vec<CertifiedNorm>,
}

impl ProblemSpec {
    /// Checks dimensions and constants, and certifies an upper bound on each
    /// `‖L_i‖`.
    pub fn new(
        layout: SpaceLayout,
        a: ResolventOp,
        c: CocoerciveOp,
        z: Vec<f64>,
        blocks: Vec<DualBlock>,
    ) -> Result<Self, SolverError> {
        let n = layout.dim_primal();
        let dim = |what: String, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(SolverError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        dim("A".into(), n, a.dim())?;
        dim("C".into(), n, c.dim())?;
        dim("z".into(), n, z.len())?;
        dim("number of blocks".into(), layout.num_blocks(), blocks.len())?;
        if !(c.constant() > 0.0) {
            return Err(SolverError::InvalidConstant {
                what: "μ".into(),
                value: c.constant(),
            });
        }
        if z.iter().any(|e| !e.is_finite()) {
            return Err(SolverError::InvalidSteps("z has a non-finite entry".into()));
        }
        let mut norms = Vec::with_capacity(blocks.len());
        for (i, (blk, &gi)) in blocks.iter().zip(layout.dual_dims()).enumerate() {
            dim(format!("B_{i}"), gi, blk.b.dim())?;
            dim(format!("D_{i}⁻¹"), gi, blk.d_inv.dim())?;
            dim(format!("L_{i} input"), n, blk.l.in_dim())?;
            dim(format!("L_{i} output"), gi, blk.l.out_dim())?;
            dim(format!("r_{i}"), gi, blk.r.len())?;
            if !(blk.d_inv.constant() > 0.0) {
                return Err(SolverError::InvalidConstant {
                    what: format!("ν_{i}"),
                    value: blk.d_inv.constant(),
                });
            }
            if blk.r.iter().any(|e| !e.is_finite()) {
                return Err(SolverError::InvalidSteps(format!(
                    "r_{i} has a non-finite entry"
                )));
            }
            let mismatch = blk.l.adjoint_mismatch(ADJOINT_PROBES, 0xad10 + i as u64);
            if !(mismatch <= ADJOINT_TOL) {
                return Err(SolverError::AdjointMismatch { block: i, mismatch });
            }
            let cert = certify_norm(&blk.l);
            if !(cert.bound > 0.0) {
                return Err(SolverError::ZeroOperator { block: i });
            }
            norms.push(cert);
        }
        Ok(Self {
            layout,
            a,
            c,
            z,
            blocks,
            norms,
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn a(&self) -> &ResolventOp {
        &self.a
    }

    pub fn c(&self) -> &CocoerciveOp {
        &self.c
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn blocks(&self) -> &[DualBlock] {
        &self.blocks
    }

    /// Certified upper bounds on `‖L_i‖`.
    pub fn norm_bounds(&self) -> Vec<f64> {
        self.norms.iter().map(|c| c.bound).collect()
    }

    pub fn norm_certificates(&self) -> &[CertifiedNorm] {
        &self.norms
    }

    /// `μ`.
    pub fn mu(&self) -> f64 {
        self.c.constant()
    }

    /// `(ν_1, …, ν_m)`.
    pub fn nus(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.d_inv.constant()).collect()
    }

    /// Same problem with `C`'s claimed constant replaced.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.c = self.c.with_constant(mu);
        self
    }
}
