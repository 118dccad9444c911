use std::fmt;
use std::sync::Arc;

use super::OperatorError;
use crate::sampling;
use crate::spaces::{dot, norm};

/// Default power-iteration tolerance on the eigen-residual of `L*L`.
pub const NORM_TOL: f64 = 1e-8;
/// Default power-iteration budget.
pub const NORM_MAX_ITER: usize = 10_000;
/// Default seed of the power-iteration start vector.
pub const NORM_SEED: u64 = 0x5eed_0001;
/// Multiplier applied to a power-iteration estimate before it is used as an
/// upper bound on `‖L‖`.
pub const NORM_SAFETY: f64 = 1.000_001;

/// A bounded linear map between coordinate spaces together with its adjoint.
///
/// Implementations must be pure: `apply_into` and `adjoint_into` may be
/// called from several threads at once.
pub trait LinearMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]);
    /// Short human-readable name.
    fn describe(&self) -> String;
}

/// Shared handle to a [`LinearMap`] plus an optional certified upper bound
/// on its operator norm.
#[derive(Clone)]
pub struct LinearOp {
    map: Arc<dyn LinearMap>,
    norm_hint: Option<f64>,
}

impl fmt::Debug for LinearOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOp")
            .field("map", &self.map.describe())
            .field("in_dim", &self.in_dim())
            .field("out_dim", &self.out_dim())
            .field("norm_hint", &self.norm_hint)
            .finish()
    }
}

impl LinearOp {
    pub fn new(map: impl LinearMap + 'static) -> Self {
        Self {
            map: Arc::new(map),
            norm_hint: None,
        }
    }

    /// Attaches a user-certified upper bound on `‖L‖`.
    pub fn with_norm_hint(mut self, hint: f64) -> Self {
        self.norm_hint = Some(hint);
        self
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Identity { n }).with_norm_hint(1.0)
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let hint = d.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Self::new(Diagonal { d }).with_norm_hint(hint)
    }

    /// Dense matrix given as rows; all rows must have the same length.
    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Self, OperatorError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(OperatorError::InvalidParams(
                "dense matrix must have at least one row and one column".into(),
            ));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(OperatorError::InvalidParams(format!(
                "dense matrix row {bad} has {} entries, expected {n_cols}",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|e| !e.is_finite()) {
            return Err(OperatorError::InvalidParams(
                "dense matrix has a non-finite entry".into(),
            ));
        }
        Ok(Self::new(Dense {
            n_rows,
            n_cols,
            data: rows.into_iter().flatten().collect(),
        }))
    }

    /// Forward difference `R^n → R^{n-1}`, `(Dx)_i = x_{i+1} − x_i`.
    pub fn forward_difference(n: usize) -> Result<Self, OperatorError> {
        if n < 2 {
            return Err(OperatorError::InvalidParams(
                "forward difference needs n ≥ 2".into(),
            ));
        }
        let hint = 2.0 * (std::f64::consts::PI * (n - 1) as f64 / (2.0 * n as f64)).sin();
        Ok(Self::new(ForwardDifference { n }).with_norm_hint(hint))
    }

    /// Forward-difference gradient of an `height × width` image stored row
    /// major, output `[∂_rows; ∂_cols]` with zeros on the last row/column.
    pub fn gradient_2d(height: usize, width: usize) -> Result<Self, OperatorError> {
        if height == 0 || width == 0 || height * width < 2 {
            return Err(OperatorError::InvalidParams(
                "2-D gradient needs at least two pixels".into(),
            ));
        }
        let part = |k: usize| {
            let s = (std::f64::consts::PI * (k - 1) as f64 / (2.0 * k as f64)).sin();
            4.0 * s * s
        };
        let hint = (part(height) + part(width)).sqrt();
        Ok(Self::new(Gradient2d { height, width }).with_norm_hint(hint))
    }

    /// Operator from a pair of closures `(apply, adjoint)`.
    pub fn from_fn<F, G>(in_dim: usize, out_dim: usize, apply: F, adjoint: G) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(Callback {
            in_dim,
            out_dim,
            apply: Box::new(apply),
            adjoint: Box::new(adjoint),
        })
    }

    /// `c · L`.
    pub fn scaled(&self, c: f64) -> Self {
        let hint = self.norm_hint.map(|h| h * c.abs());
        Self {
            map: Arc::new(Scaled {
                inner: self.clone(),
                c,
            }),
            norm_hint: hint,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.map.out_dim()
    }

    pub fn norm_hint(&self) -> Option<f64> {
        self.norm_hint
    }

    pub fn describe(&self) -> String {
        self.map.describe()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim(), "LinearOp::apply: input length");
        let mut out = vec![0.0; self.out_dim()];
        self.map.apply_into(x, &mut out);
        out
    }

    pub fn adjoint(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.out_dim(), "LinearOp::adjoint: input length");
        let mut out = vec![0.0; self.in_dim()];
        self.map.adjoint_into(v, &mut out);
        out
    }

    /// Largest normalised adjoint mismatch
    /// `|⟨Lx, v⟩ − ⟨x, L*v⟩| / (1 + ‖x‖‖v‖)` over random probes.
    pub fn adjoint_mismatch(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = sampling::seeded(seed);
        (0..probes)
            .map(|_| {
                let x = sampling::gaussian(&mut rng, self.in_dim());
                let v = sampling::gaussian(&mut rng, self.out_dim());
                let lhs = dot(&self.apply(&x), &v);
                let rhs = dot(&x, &self.adjoint(&v));
                (lhs - rhs).abs() / (1.0 + norm(&x) * norm(&v))
            })
            .fold(0.0, f64::max)
    }
}

/// Result of [`estimate_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// `max(hint, estimate)` when a hint is present, else the estimate.
    pub value: f64,
    /// Raw power-iteration estimate of the largest singular value.
    pub estimate: f64,
    /// False when the eigen-residual never dropped below `tol`; `estimate`
    /// is then the best iterate.
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration on `L*L` from a seeded random start.
///
/// Stops once `‖L*Lx − θx‖ ≤ tol·θ` for the unit iterate `x` and its
/// Rayleigh quotient `θ`.
pub fn estimate_norm(l: &LinearOp, tol: f64, max_iter: usize, seed: u64) -> NormEstimate {
    let mut rng = sampling::seeded(seed);
    let mut x = sampling::unit_vector(&mut rng, l.in_dim());
    let mut best = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..max_iter.max(1) {
        iterations = k + 1;
        let y = l.adjoint(&l.apply(&x));
        let theta = dot(&x, &y);
        best = best.max(theta);
        let ny = norm(&y);
        if ny == 0.0 {
            converged = true;
            break;
        }
        let resid = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - theta * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if resid <= tol * theta {
            converged = true;
            break;
        }
        x = y.into_iter().map(|e| e / ny).collect();
    }
    let estimate = best.max(0.0).sqrt();
    let value = match l.norm_hint {
        Some(h) => h.max(estimate),
        None => estimate,
    };
    NormEstimate {
        value,
        estimate,
        converged,
        iterations,
    }
}

/// Upper bound on `‖L‖` fit for the step-size condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedNorm {
    pub bound: f64,
    /// True when the user hint was used verbatim.
    pub from_hint: bool,
    pub estimate: NormEstimate,
}

/// A hint is used as is when the power-iteration estimate does not exceed
/// it beyond `NORM_TOL`; otherwise the estimate times [`NORM_SAFETY`] is used.
pub fn certify_norm(l: &LinearOp) -> CertifiedNorm {
    let estimate = estimate_norm(l, NORM_TOL, NORM_MAX_ITER, NORM_SEED);
    match l.norm_hint {
        Some(h) if estimate.estimate <= h * (1.0 + NORM_TOL) => CertifiedNorm {
            bound: h,
            from_hint: true,
            estimate,
        },
        _ => CertifiedNorm {
            bound: estimate.estimate * NORM_SAFETY,
            from_hint: false,
            estimate,
        },
    }
}

struct Identity {
    n: usize,
}

impl LinearMap for Identity {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
    fn describe(&self) -> String {
        format!("identity({})", self.n)
    }
}

struct Diagonal {
    d: Vec<f64>,
}

impl LinearMap for Diagonal {
    fn in_dim(&self) -> usize {
        self.d.len()
    }
    fn out_dim(&self) -> usize {
        self.d.len()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), di) in out.iter_mut().zip(x).zip(&self.d) {
            *o = di * xi;
        }
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        self.apply_into(v, out);
    }
    fn describe(&self) -> String {
        format!("diagonal({})", self.d.len())
    }
}

struct Dense {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl LinearMap for Dense {
    fn in_dim(&self) -> usize {
        self.n_cols
    }
    fn out_dim(&self) -> usize {
        self.n_rows
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.n_cols)) {
            *o = dot(row, x);
        }
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (vi, row) in v.iter().zip(self.data.chunks_exact(self.n_cols)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
    }
    fn describe(&self) -> String {
        format!("dense({}x{})", self.n_rows, self.n_cols)
    }
}

struct ForwardDifference {
    n: usize,
}

impl LinearMap for ForwardDifference {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n - 1
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(x.windows(2)) {
            *o = w[1] - w[0];
        }
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        // (D*v)_j = v_{j-1} − v_j with v_{-1} = v_{n-1} = 0
        let n = self.n;
        for (j, o) in out.iter_mut().enumerate() {
            let left = if j > 0 { v[j - 1] } else { 0.0 };
            let right = if j < n - 1 { v[j] } else { 0.0 };
            *o = left - right;
        }
    }
    fn describe(&self) -> String {
        format!("diff1d({})", self.n)
    }
}

struct Gradient2d {
    height: usize,
    width: usize,
}

impl LinearMap for Gradient2d {
    fn in_dim(&self) -> usize {
        self.height * self.width
    }
    fn out_dim(&self) -> usize {
        2 * self.height * self.width
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let (rows, cols) = out.split_at_mut(h * w);
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                rows[k] = if i + 1 < h { x[k + w] - x[k] } else { 0.0 };
                cols[k] = if j + 1 < w { x[k + 1] - x[k] } else { 0.0 };
            }
        }
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let (rows, cols) = v.split_at(h * w);
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                if i + 1 < h {
                    out[k + w] += rows[k];
                    out[k] -= rows[k];
                }
                if j + 1 < w {
                    out[k + 1] += cols[k];
                    out[k] -= cols[k];
                }
            }
        }
    }
    fn describe(&self) -> String {
        format!("grad2d({}x{})", self.height, self.width)
    }
}

struct Scaled {
    inner: LinearOp,
    c: f64,
}

impl LinearMap for Scaled {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.map.apply_into(x, out);
        out.iter_mut().for_each(|o| *o *= self.c);
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        self.inner.map.adjoint_into(v, out);
        out.iter_mut().for_each(|o| *o *= self.c);
    }
    fn describe(&self) -> String {
        format!("{}*{}", self.c, self.inner.describe())
    }
}

type SliceMap = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

struct Callback {
    in_dim: usize,
    out_dim: usize,
    apply: SliceMap,
    adjoint: SliceMap,
}

impl LinearMap for Callback {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.apply)(x, out)
    }
    fn adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        (self.adjoint)(v, out)
    }
    fn describe(&self) -> String {
        format!("callback({}->{})", self.in_dim, self.out_dim)
    }
}
