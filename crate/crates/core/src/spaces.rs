//! Block-vector arithmetic on the primal space `H`, the dual spaces `G_i`
//! and their direct sum `K = H ⊕ G_1 ⊕ … ⊕ G_m`.
//!
//! The dual part of `K` carries the weighted scalar product
//! `Σ ω_i ⟨v_i, w_i⟩`; the weights belong to the [`SpaceLayout`], never to
//! the vectors themselves.

use thiserror::Error;

/// Tolerance on `Σ ω_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("layout needs at least one dual block")]
    NoBlocks,
    #[error("primal dimension must be positive")]
    EmptyPrimal,
    #[error("dual block {block} has dimension zero")]
    EmptyDual { block: usize },
    #[error("{weights} weights given for {blocks} dual blocks")]
    WeightCount { weights: usize, blocks: usize },
    #[error("weight ω_{block} = {value} is outside ]0,1]")]
    WeightRange { block: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("{block}: expected length {expected}, found {found}")]
    Shape {
        block: BlockId,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} dual blocks, found {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("{block} contains a non-finite entry")]
    NonFinite { block: BlockId },
}

/// Names one block of a [`BlockVector`] in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    Primal,
    Dual(usize),
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockId::Primal => write!(f, "primal block"),
            BlockId::Dual(i) => write!(f, "dual block {i}"),
        }
    }
}

/// Dimensions and weights of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceLayout {
    dim_primal: usize,
    dual_dims: Vec<usize>,
    weights: Vec<f64>,
}

impl SpaceLayout {
    pub fn new(
        dim_primal: usize,
        dual_dims: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self, SpaceError> {
        if dual_dims.is_empty() {
            return Err(SpaceError::NoBlocks);
        }
        if dim_primal == 0 {
            return Err(SpaceError::EmptyPrimal);
        }
        if let Some(block) = dual_dims.iter().position(|&d| d == 0) {
            return Err(SpaceError::EmptyDual { block });
        }
        if weights.len() != dual_dims.len() {
            return Err(SpaceError::WeightCount {
                weights: weights.len(),
                blocks: dual_dims.len(),
            });
        }
        for (block, &value) in weights.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(SpaceError::WeightRange { block, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(SpaceError::WeightSum { sum });
        }
        Ok(Self {
            dim_primal,
            dual_dims,
            weights,
        })
    }

    /// `m` blocks of the given dimensions with equal weights `1/m`.
    pub fn uniform(dim_primal: usize, dual_dims: Vec<usize>) -> Result<Self, SpaceError> {
        let m = dual_dims.len().max(1);
        let weights = vec![1.0 / m as f64; dual_dims.len()];
        Self::new(dim_primal, dual_dims, weights)
    }

    pub fn dim_primal(&self) -> usize {
        self.dim_primal
    }

    pub fn dual_dims(&self) -> &[usize] {
        &self.dual_dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of dual blocks `m`.
    pub fn num_blocks(&self) -> usize {
        self.dual_dims.len()
    }

    /// Total number of scalar entries in `K`.
    pub fn total_dim(&self) -> usize {
        self.dim_primal + self.dual_dims.iter().sum::<usize>()
    }

    pub fn zeros(&self) -> BlockVector {
        BlockVector {
            primal: vec![0.0; self.dim_primal],
            duals: self.dual_dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    /// Checks that `a` has this layout's block shapes.
    pub fn check(&self, a: &BlockVector) -> Result<(), SpaceError> {
        if a.primal.len() != self.dim_primal {
            return Err(SpaceError::Shape {
                block: BlockId::Primal,
                expected: self.dim_primal,
                found: a.primal.len(),
            });
        }
        if a.duals.len() != self.dual_dims.len() {
            return Err(SpaceError::BlockCount {
                expected: self.dual_dims.len(),
                found: a.duals.len(),
            });
        }
        for (i, (v, &d)) in a.duals.iter().zip(&self.dual_dims).enumerate() {
            if v.len() != d {
                return Err(SpaceError::Shape {
                    block: BlockId::Dual(i),
                    expected: d,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// An element `(x, v_1, …, v_m)` of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub primal: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn new(primal: Vec<f64>, duals: Vec<Vec<f64>>) -> Self {
        Self { primal, duals }
    }

    /// First block containing a NaN or infinite entry.
    pub fn first_non_finite(&self) -> Option<BlockId> {
        if !all_finite(&self.primal) {
            return Some(BlockId::Primal);
        }
        self.duals
            .iter()
            .position(|v| !all_finite(v))
            .map(BlockId::Dual)
    }

    /// Validates shapes against `layout` and rejects non-finite entries.
    pub fn validate(&self, layout: &SpaceLayout) -> Result<(), SpaceError> {
        layout.check(self)?;
        match self.first_non_finite() {
            Some(block) => Err(SpaceError::NonFinite { block }),
            None => Ok(()),
        }
    }

    /// `self ← self + alpha · other`, blockwise.
    pub fn axpy_in_place(&mut self, alpha: f64, other: &BlockVector) {
        axpy(alpha, &other.primal, &mut self.primal);
        for (d, o) in self.duals.iter_mut().zip(&other.duals) {
            axpy(alpha, o, d);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.primal.iter_mut().for_each(|e| *e *= alpha);
        for d in &mut self.duals {
            d.iter_mut().for_each(|e| *e *= alpha);
        }
    }

    /// Flattens to `[x, v_1, …, v_m]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.primal.clone();
        for d in &self.duals {
            out.extend_from_slice(d);
        }
        out
    }

    /// Inverse of [`BlockVector::to_flat`].
    pub fn from_flat(layout: &SpaceLayout, flat: &[f64]) -> Result<Self, SpaceError> {
        if flat.len() != layout.total_dim() {
            return Err(SpaceError::Shape {
                block: BlockId::Primal,
                expected: layout.total_dim(),
                found: flat.len(),
            });
        }
        let (primal, mut rest) = flat.split_at(layout.dim_primal());
        let mut duals = Vec::with_capacity(layout.num_blocks());
        for &d in layout.dual_dims() {
            let (head, tail) = rest.split_at(d);
            duals.push(head.to_vec());
            rest = tail;
        }
        Ok(Self::new(primal.to_vec(), duals))
    }
}

/// `⟨a.x, b.x⟩ + Σ ω_i ⟨a.v_i, b.v_i⟩`.
pub fn inner_weighted(
    a: &BlockVector,
    b: &BlockVector,
    layout: &SpaceLayout,
) -> Result<f64, SpaceError> {
    layout.check(a)?;
    layout.check(b)?;
    Ok(inner_weighted_unchecked(a, b, layout.weights()))
}

pub(crate) fn inner_weighted_unchecked(a: &BlockVector, b: &BlockVector, weights: &[f64]) -> f64 {
    let mut acc = dot(&a.primal, &b.primal);
    for ((va, vb), w) in a.duals.iter().zip(&b.duals).zip(weights) {
        acc += w * dot(va, vb);
    }
    acc
}

pub fn norm_weighted(a: &BlockVector, layout: &SpaceLayout) -> Result<f64, SpaceError> {
    inner_weighted(a, a, layout).map(|s| s.max(0.0).sqrt())
}

pub(crate) fn norm_weighted_unchecked(a: &BlockVector, weights: &[f64]) -> f64 {
    inner_weighted_unchecked(a, a, weights).max(0.0).sqrt()
}

/// `b + alpha · a`, blockwise.
pub fn axpy_blocks(alpha: f64, a: &BlockVector, b: &BlockVector) -> Result<BlockVector, SpaceError> {
    if a.primal.len() != b.primal.len() {
        return Err(SpaceError::Shape {
            block: BlockId::Primal,
            expected: b.primal.len(),
            found: a.primal.len(),
        });
    }
    if a.duals.len() != b.duals.len() {
        return Err(SpaceError::BlockCount {
            expected: b.duals.len(),
            found: a.duals.len(),
        });
    }
    for (i, (va, vb)) in a.duals.iter().zip(&b.duals).enumerate() {
        if va.len() != vb.len() {
            return Err(SpaceError::Shape {
                block: BlockId::Dual(i),
                expected: vb.len(),
                found: va.len(),
            });
        }
    }
    let mut out = b.clone();
    out.axpy_in_place(alpha, a);
    Ok(out)
}

// Flat-slice helpers shared by the other modules.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + alpha · x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|e| e.is_finite())
}
