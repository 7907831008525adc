//! Finite-difference realizations of `G(x, Du, D²u) = |Du|^γ (F(x, D²u) + <b, Du>)`
//! and of the absorption term `λ₀ u₊^μ`.
//!
//! Second-order parts are built from directional second differences along
//! lattice directions. Pucci operators take the extremum over orthonormal
//! frames of per-direction eigenvalue surrogates; `tr(A D²u)` splits `A` into a
//! diagonal part on the axes and an off-diagonal part on one diagonal, which
//! is monotone when `A` is diagonally dominant.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, Point, ScalarField};
use crate::model::{OperatorKind, ValidatedParams};

/// Integer lattice offset used as a stencil direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeDir {
    pub dx: i32,
    pub dy: i32,
}

impl LatticeDir {
    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    /// Squared length in lattice units.
    pub fn len2(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy) as f64
    }

    /// Finds the shortest lattice offset (components up to 4) parallel to the
    /// unit vector `e`.
    pub fn from_unit(e: Point, dim: usize) -> Result<Self> {
        let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
        if !(norm > 0.0) {
            return Err(Error::NonLatticeDirection(e[0], e[1]));
        }
        let u = [e[0] / norm, e[1] / norm];
        let mut best: Option<LatticeDir> = None;
        for dy in -4i32..=4 {
            for dx in -4i32..=4 {
                if (dx, dy) == (0, 0) || (dim == 1 && dy != 0) {
                    continue;
                }
                let d = LatticeDir::new(dx, dy);
                let l = d.len2().sqrt();
                let cos = (dx as f64 * u[0] + dy as f64 * u[1]) / l;
                if (cos - 1.0).abs() < 1e-12 && best.is_none_or(|b| d.len2() < b.len2()) {
                    best = Some(d);
                }
            }
        }
        best.ok_or(Error::NonLatticeDirection(e[0], e[1]))
    }
}

/// Orthonormal direction sets over which Pucci sums are formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilFrame {
    frames: Vec<Vec<LatticeDir>>,
}

impl StencilFrame {
    pub fn axis(dim: usize) -> Self {
        if dim == 1 {
            Self { frames: vec![vec![LatticeDir::new(1, 0)]] }
        } else {
            Self { frames: vec![vec![LatticeDir::new(1, 0), LatticeDir::new(0, 1)]] }
        }
    }

    /// Axis and 45° frames in 2D; with `wide`, also the two frames spanned by
    /// the (2,1) offsets.
    pub fn for_dim(dim: usize, wide: bool) -> Self {
        if dim == 1 {
            return Self::axis(1);
        }
        let mut frames = vec![
            vec![LatticeDir::new(1, 0), LatticeDir::new(0, 1)],
            vec![LatticeDir::new(1, 1), LatticeDir::new(-1, 1)],
        ];
        if wide {
            frames.push(vec![LatticeDir::new(2, 1), LatticeDir::new(-1, 2)]);
            frames.push(vec![LatticeDir::new(1, 2), LatticeDir::new(-2, 1)]);
        }
        Self { frames }
    }

    /// Builds frames from explicit direction lists, checking orthogonality.
    pub fn from_frames(frames: Vec<Vec<LatticeDir>>) -> Result<Self> {
        if frames.is_empty() || frames.iter().any(|f| f.is_empty()) {
            return Err(Error::Domain("stencil frames must be non-empty".into()));
        }
        for f in &frames {
            for (a, da) in f.iter().enumerate() {
                for db in &f[a + 1..] {
                    if da.dx * db.dx + da.dy * db.dy != 0 {
                        return Err(Error::Domain("frame directions must be orthogonal".into()));
                    }
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Vec<LatticeDir>] {
        &self.frames
    }

    /// Largest lattice offset used by any direction.
    pub fn reach(&self) -> i32 {
        self.frames.iter().flatten().map(|d| d.dx.abs().max(d.dy.abs())).max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PucciSign {
    Minus,
    Plus,
}

/// `λ t₊ - Λ t₋` for the minus operator, `Λ t₊ - λ t₋` for the plus operator.
#[inline]
fn pucci_term(t: f64, lo: f64, hi: f64, sign: PucciSign) -> (f64, f64) {
    let c = match (sign, t >= 0.0) {
        (PucciSign::Minus, true) | (PucciSign::Plus, false) => lo,
        _ => hi,
    };
    (c * t, c)
}

/// Centred-difference gradient; one-sided where a neighbour is missing.
pub fn gradient(u: &ScalarField) -> Vec<Point> {
    let g = u.grid();
    let v = u.values();
    (0..g.len())
        .map(|idx| {
            let mut p = [0.0; 2];
            for (k, pk) in p.iter_mut().enumerate().take(g.dim()) {
                let (dx, dy) = if k == 0 { (1, 0) } else { (0, 1) };
                *pk = axis_derivative(g, v, idx, dx, dy);
            }
            p
        })
        .collect()
}

#[inline]
fn axis_derivative(g: &Grid, v: &[f64], idx: usize, dx: i32, dy: i32) -> f64 {
    let h = g.h();
    match (g.offset(idx, dx, dy), g.offset(idx, -dx, -dy)) {
        (Some(p), Some(m)) => (v[p] - v[m]) / (2.0 * h),
        (Some(p), None) => (v[p] - v[idx]) / h,
        (None, Some(m)) => (v[idx] - v[m]) / h,
        (None, None) => 0.0,
    }
}

#[inline]
fn norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Directional second difference and the mask of nodes where both
/// neighbours exist. Ineligible nodes hold 0.
#[derive(Debug, Clone)]
pub struct DirectionalDiff {
    pub values: ScalarField,
    pub valid: Vec<bool>,
}

/// `(u(x + h e) - 2u(x) + u(x - h e)) / (h |e|)²` for a lattice direction `e`
/// given as a (not necessarily normalized) real vector.
pub fn directional_second_difference(u: &ScalarField, e: Point) -> Result<DirectionalDiff> {
    let g = *u.grid();
    let d = LatticeDir::from_unit(e, g.dim())?;
    let v = u.values();
    let scale = 1.0 / (d.len2() * g.h() * g.h());
    let mut out = vec![0.0; g.len()];
    let mut valid = vec![false; g.len()];
    for idx in 0..g.len() {
        if let (Some(p), Some(m)) = (g.offset(idx, d.dx, d.dy), g.offset(idx, -d.dx, -d.dy)) {
            out[idx] = (v[p] - 2.0 * v[idx] + v[m]) * scale;
            valid[idx] = true;
        }
    }
    Ok(DirectionalDiff { values: ScalarField::new(g, out)?, valid })
}

/// Discrete Pucci operator. Nodes lacking a neighbour in some frame direction
/// hold 0.
pub fn pucci_apply(u: &ScalarField, lo: f64, hi: f64, frames: &StencilFrame, sign: PucciSign) -> ScalarField {
    let g = *u.grid();
    let v = u.values();
    let h2 = g.h() * g.h();
    let values = (0..g.len())
        .map(|idx| {
            let mut best: Option<f64> = None;
            for f in frames.frames() {
                let mut sum = 0.0;
                for d in f {
                    let (Some(p), Some(m)) = (g.offset(idx, d.dx, d.dy), g.offset(idx, -d.dx, -d.dy)) else {
                        return 0.0;
                    };
                    let t = (v[p] - 2.0 * v[idx] + v[m]) / (d.len2() * h2);
                    sum += pucci_term(t, lo, hi, sign).0;
                }
                best = Some(match (best, sign) {
                    (None, _) => sum,
                    (Some(b), PucciSign::Minus) => b.min(sum),
                    (Some(b), PucciSign::Plus) => b.max(sum),
                });
            }
            best.unwrap_or(0.0)
        })
        .collect();
    ScalarField::from_values_unchecked(g, values)
}

/// `λ₀(x) u₊^μ`, with `u₊^0 = χ{u > 0}`.
pub fn absorption_rhs(p: &ValidatedParams, u: &ScalarField) -> Result<ScalarField> {
    if p.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let mu = p.mu();
    let values = u.values().iter().zip(p.lambda0()).map(|(&ui, &l)| l * positive_power(ui, mu)).collect();
    ScalarField::new(*u.grid(), values)
}

/// `max(u, 0)^μ`, defined as 0 on `u <= 0` for every μ including 0.
#[inline]
pub fn positive_power(u: f64, mu: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if mu == 0.0 {
        1.0
    } else if mu == 1.0 {
        u
    } else {
        u.powf(mu)
    }
}

/// Discretization of the drift `<b, Du>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftScheme {
    /// First-order upwind differences oriented by the sign of each component.
    #[default]
    Upwind,
    /// Second-order centred differences (not monotone; diagnostic only).
    Centered,
}

/// The assembled scheme for one parameter bundle on one domain: direction
/// lists, interior mask and per-node weights.
#[derive(Debug, Clone)]
pub struct Scheme<'a> {
    p: &'a ValidatedParams,
    grid: Grid,
    dirs: Vec<LatticeDir>,
    shape: Shape,
    /// Per-node linear weights (`dirs.len()` per node) for `tr(A D²u)`.
    weights: Vec<f64>,
    interior: Vec<bool>,
    grad_cutoff: f64,
    drift: DriftScheme,
}

#[derive(Debug, Clone)]
enum Shape {
    /// `Σ w_k δ_k`, weights shared (`shared == true`) or per node.
    Linear { shared: bool },
    /// Extremum over frames given as ranges into `dirs`.
    Pucci { frames: Vec<Range<usize>>, sign: PucciSign, lo: f64, hi: f64 },
}

const MAX_DIRS: usize = 8;

impl<'a> Scheme<'a> {
    /// Builds the scheme. A node is interior when it lies in `domain` and every
    /// stencil neighbour exists on the grid.
    pub fn new(p: &'a ValidatedParams, domain: &Domain, grad_cutoff: f64, drift: DriftScheme) -> Self {
        let grid = *p.grid();
        let dim = grid.dim();
        let axis = StencilFrame::axis(dim).frames()[0].clone();
        let (dirs, shape, weights) = match &p.params().operator {
            OperatorKind::Laplacian => {
                let w = vec![1.0; axis.len()];
                (axis, Shape::Linear { shared: true }, w)
            }
            OperatorKind::TraceA(_) => {
                let a = p.matrix().expect("sampled matrix field");
                if dim == 1 {
                    (axis, Shape::Linear { shared: false }, a.iter().map(|m| m[0][0]).collect())
                } else {
                    let dirs = vec![
                        LatticeDir::new(1, 0),
                        LatticeDir::new(0, 1),
                        LatticeDir::new(1, 1),
                        LatticeDir::new(1, -1),
                    ];
                    let mut w = Vec::with_capacity(4 * a.len());
                    for m in a {
                        let off = m[0][1];
                        let ao = off.abs();
                        let (wpp, wpm) = if off >= 0.0 { (2.0 * ao, 0.0) } else { (0.0, 2.0 * ao) };
                        w.extend_from_slice(&[m[0][0] - ao, m[1][1] - ao, wpp, wpm]);
                    }
                    (dirs, Shape::Linear { shared: false }, w)
                }
            }
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => {
                let sign = if matches!(p.params().operator, OperatorKind::PucciMinus) {
                    PucciSign::Minus
                } else {
                    PucciSign::Plus
                };
                let mut dirs = Vec::new();
                let mut frames = Vec::new();
                for f in p.frames().frames() {
                    let start = dirs.len();
                    dirs.extend_from_slice(f);
                    frames.push(start..dirs.len());
                }
                let lo = p.params().lambda_ell;
                let hi = p.params().big_lambda_ell;
                (dirs, Shape::Pucci { frames, sign, lo, hi }, Vec::new())
            }
        };
        debug_assert!(dirs.len() <= MAX_DIRS);
        let interior = (0..grid.len())
            .map(|idx| {
                domain.contains(grid.coord(idx), dim)
                    && dirs
                        .iter()
                        .all(|d| grid.offset(idx, d.dx, d.dy).is_some() && grid.offset(idx, -d.dx, -d.dy).is_some())
                    && grid.axis_neighbors(idx).count() == 2 * dim
            })
            .collect();
        Self { p, grid, dirs, shape, weights, interior, grad_cutoff, drift }
    }

    pub fn params(&self) -> &ValidatedParams {
        self.p
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn interior(&self) -> &[bool] {
        &self.interior
    }

    pub fn grad_cutoff(&self) -> f64 {
        self.grad_cutoff
    }

    /// Boundary nodes: non-interior nodes that some interior stencil touches.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut b = vec![false; self.grid.len()];
        for idx in (0..self.grid.len()).filter(|&i| self.interior[i]) {
            let mut mark = |j: usize| {
                if !self.interior[j] {
                    b[j] = true;
                }
            };
            for d in &self.dirs {
                mark(self.grid.offset(idx, d.dx, d.dy).unwrap());
                mark(self.grid.offset(idx, -d.dx, -d.dy).unwrap());
            }
            for j in self.grid.axis_neighbors(idx) {
                mark(j);
            }
        }
        b
    }

    /// Centred gradient at an interior node.
    #[inline]
    pub fn grad_at(&self, v: &[f64], idx: usize) -> Point {
        let g = &self.grid;
        let inv = 0.5 / g.h();
        let px = (v[g.offset(idx, 1, 0).unwrap()] - v[g.offset(idx, -1, 0).unwrap()]) * inv;
        let py = if g.dim() == 2 {
            (v[g.offset(idx, 0, 1).unwrap()] - v[g.offset(idx, 0, -1).unwrap()]) * inv
        } else {
            0.0
        };
        [px, py]
    }

    /// `|p|^γ` with the cutoff `max(|p|, ε_g)` applied whenever γ != 0.
    #[inline]
    pub fn factor(&self, grad_norm: f64) -> f64 {
        gradient_factor(grad_norm, self.p.gamma(), self.grad_cutoff)
    }

    /// Local view of the operator at an interior node as a function of the
    /// node's own value, all neighbours frozen at `v`.
    #[inline]
    pub fn local(&self, v: &[f64], idx: usize) -> LocalOp<'_> {
        self.local_with_grad(v, idx, self.grad_at(v, idx))
    }

    /// Same as [`Scheme::local`] with an externally supplied gradient for the
    /// degeneracy factor.
    pub fn local_with_grad(&self, v: &[f64], idx: usize, grad: Point) -> LocalOp<'_> {
        let g = &self.grid;
        let h = g.h();
        let h2 = h * h;
        let mut sums = [0.0; MAX_DIRS];
        let mut scales = [0.0; MAX_DIRS];
        for (k, d) in self.dirs.iter().enumerate() {
            let p = g.offset(idx, d.dx, d.dy).unwrap();
            let m = g.offset(idx, -d.dx, -d.dy).unwrap();
            sums[k] = v[p] + v[m];
            scales[k] = 1.0 / (d.len2() * h2);
        }
        let weights: &[f64] = match self.shape {
            Shape::Linear { shared: true } => &self.weights,
            Shape::Linear { shared: false } => {
                let n = self.dirs.len();
                &self.weights[idx * n..(idx + 1) * n]
            }
            Shape::Pucci { .. } => &[],
        };
        let b = self.p.drift()[idx];
        let (mut dc, mut ds) = (0.0, 0.0);
        for (k, &bk) in b.iter().enumerate().take(g.dim()) {
            if bk == 0.0 {
                continue;
            }
            let (dx, dy) = if k == 0 { (1, 0) } else { (0, 1) };
            let vp = v[g.offset(idx, dx, dy).unwrap()];
            let vm = v[g.offset(idx, -dx, -dy).unwrap()];
            match self.drift {
                DriftScheme::Upwind if bk > 0.0 => {
                    dc += bk * vp / h;
                    ds += bk / h;
                }
                DriftScheme::Upwind => {
                    dc += -bk * vm / h;
                    ds += -bk / h;
                }
                DriftScheme::Centered => dc += bk * (vp - vm) / (2.0 * h),
            }
        }
        LocalOp {
            scheme: self,
            factor: self.factor(norm(grad)),
            grad_norm: norm(grad),
            n: self.dirs.len(),
            sums,
            scales,
            weights,
            drift_const: dc,
            drift_slope: ds,
        }
    }
}

/// `max(|p|, ε)^γ` for γ != 0 and 1 for γ = 0.
#[inline]
pub fn gradient_factor(grad_norm: f64, gamma: f64, cutoff: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        grad_norm.max(cutoff).powf(gamma)
    }
}

/// The operator at one node with every neighbour frozen.
#[derive(Debug, Clone)]
pub struct LocalOp<'s> {
    scheme: &'s Scheme<'s>,
    pub factor: f64,
    pub grad_norm: f64,
    n: usize,
    sums: [f64; MAX_DIRS],
    scales: [f64; MAX_DIRS],
    weights: &'s [f64],
    drift_const: f64,
    drift_slope: f64,
}

impl LocalOp<'_> {
    /// Second-order part `F_h` at node value `u` and its derivative in `u`.
    #[inline]
    pub fn second_order(&self, u: f64) -> (f64, f64) {
        match &self.scheme.shape {
            Shape::Linear { .. } => {
                let mut val = 0.0;
                let mut der = 0.0;
                for k in 0..self.n {
                    let w = self.weights[k] * self.scales[k];
                    val += w * (self.sums[k] - 2.0 * u);
                    der -= 2.0 * w;
                }
                (val, der)
            }
            Shape::Pucci { frames, sign, lo, hi } => {
                let mut best: Option<(f64, f64)> = None;
                for f in frames {
                    let (mut val, mut der) = (0.0, 0.0);
                    for k in f.clone() {
                        let t = (self.sums[k] - 2.0 * u) * self.scales[k];
                        let (tv, c) = pucci_term(t, *lo, *hi, *sign);
                        val += tv;
                        der -= 2.0 * c * self.scales[k];
                    }
                    let better = match (best, sign) {
                        (None, _) => true,
                        (Some((b, _)), PucciSign::Minus) => val < b,
                        (Some((b, _)), PucciSign::Plus) => val > b,
                    };
                    if better {
                        best = Some((val, der));
                    }
                }
                best.unwrap_or((0.0, 0.0))
            }
        }
    }

    /// Drift part `<b, D_h u>` at node value `u` and its derivative.
    #[inline]
    pub fn drift(&self, u: f64) -> (f64, f64) {
        (self.drift_const - self.drift_slope * u, -self.drift_slope)
    }

    /// `G_h` at node value `u` and its derivative in `u` (always <= 0).
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64) {
        let (f, df) = self.second_order(u);
        let (d, dd) = self.drift(u);
        (self.factor * (f + d), self.factor * (df + dd))
    }

    /// Upper bound on `|∂G_h/∂u|`, used for the explicit step size.
    pub fn stiffness(&self) -> f64 {
        let f = match &self.scheme.shape {
            Shape::Linear { .. } => (0..self.n).map(|k| 2.0 * self.weights[k].abs() * self.scales[k]).sum(),
            Shape::Pucci { frames, hi, .. } => frames
                .iter()
                .map(|f| f.clone().map(|k| 2.0 * hi * self.scales[k]).sum::<f64>())
                .fold(0.0, f64::max),
        };
        self.factor * (f + self.drift_slope)
    }
}

/// Operator value and gradient magnitude on every node.
#[derive(Debug, Clone)]
pub struct OperatorEval {
    /// `G_h[u]`; 0 at nodes without a full stencil.
    pub value: ScalarField,
    /// `|D_h u|` (centred, one-sided at the edge).
    pub grad_norm: ScalarField,
}

/// Evaluates `G_h[u] = |D_h u|^γ (F_h(x, D²_h u) + <b, D_h u>)` over the whole
/// grid box with upwind drift.
pub fn degenerate_apply(p: &ValidatedParams, u: &ScalarField, grad_cutoff: f64) -> Result<OperatorEval> {
    if p.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let grads = gradient(u);
    apply_inner(p, u, &grads, grad_cutoff, DriftScheme::Upwind)
}

/// Like [`degenerate_apply`] but the degeneracy factor uses the supplied
/// gradient field instead of the discrete one.
pub fn degenerate_apply_with_gradient(
    p: &ValidatedParams,
    u: &ScalarField,
    grads: &[Point],
    grad_cutoff: f64,
) -> Result<OperatorEval> {
    if p.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    if grads.len() != u.grid().len() {
        return Err(Error::Shape { expected: u.grid().len(), found: grads.len() });
    }
    apply_inner(p, u, grads, grad_cutoff, DriftScheme::Upwind)
}

fn apply_inner(
    p: &ValidatedParams,
    u: &ScalarField,
    grads: &[Point],
    grad_cutoff: f64,
    drift: DriftScheme,
) -> Result<OperatorEval> {
    let scheme = Scheme::new(p, &Domain::Box, grad_cutoff, drift);
    let v = u.values();
    let g = *u.grid();
    let mut value = vec![0.0; g.len()];
    for idx in (0..g.len()).filter(|&i| scheme.interior[i]) {
        value[idx] = scheme.local_with_grad(v, idx, grads[idx]).eval(v[idx]).0;
    }
    let grad_norm = grads.iter().map(|&q| norm(q)).collect();
    Ok(OperatorEval { value: ScalarField::new(g, value)?, grad_norm: ScalarField::new(g, grad_norm)? })
}

impl ScalarField {
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField::new(grid, values).expect("finite values")
    }
}
