//! Uniform Cartesian lattices in one or two dimensions and the scalar
//! fields living on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane. One-dimensional grids only use the first slot.
pub type Point = [f64; 2];

/// Uniform lattice over an axis-aligned square (or segment) with the same
/// spacing along every axis.
///
/// Node coordinates are always computed as `origin[k] + index * h`, so any two
/// grids built from the same `(origin, h, n)` agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    origin: Point,
    n: usize,
    h: f64,
}

impl Grid {
    /// Builds a grid with `n` nodes per axis covering `[origin, origin + extent]`.
    pub fn new(dim: usize, origin: Point, extent: f64, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(dim));
        }
        if n < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes per axis, got {n}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Grid(format!("extent must be positive, got {extent}")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Grid("origin must be finite".into()));
        }
        let h = extent / (n - 1) as f64;
        let origin = if dim == 1 { [origin[0], 0.0] } else { origin };
        Ok(Self { dim, origin, n, h })
    }

    /// Grid whose box is centred at `center` with half side `half_width`.
    pub fn centered(dim: usize, center: Point, half_width: f64, n: usize) -> Result<Self> {
        let origin = [center[0] - half_width, center[1] - half_width];
        Self::new(dim, origin, 2.0 * half_width, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extent(&self) -> f64 {
        self.h * (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.n
        } else {
            self.n * self.n
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of the node with lattice coordinates `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.n
    }

    /// Lattice coordinates of a flat index.
    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Physical coordinates of a node.
    #[inline]
    pub fn coord(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        if self.dim == 1 {
            [self.origin[0] + i as f64 * self.h, 0.0]
        } else {
            [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
        }
    }

    /// Flat index of the node displaced by the integer offset `(dx, dy)`, if
    /// it lies on the grid.
    #[inline]
    pub fn offset(&self, idx: usize, dx: i32, dy: i32) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let ii = i as i64 + dx as i64;
        let jj = j as i64 + dy as i64;
        let n = self.n as i64;
        if ii < 0 || ii >= n {
            return None;
        }
        if self.dim == 1 {
            return if dy == 0 { Some(ii as usize) } else { None };
        }
        if jj < 0 || jj >= n {
            return None;
        }
        Some(self.index(ii as usize, jj as usize))
    }

    /// Whether the closed ball `B_r(x0)` fits inside the grid box.
    pub fn contains_ball(&self, x0: Point, r: f64) -> bool {
        let slack = 1e-9 * self.h;
        (0..self.dim).all(|k| {
            x0[k] - r >= self.origin[k] - slack && x0[k] + r <= self.origin[k] + self.extent() + slack
        })
    }

    /// Node indices inside the closed ball `|x - x0| <= r`, node centres only.
    pub fn nodes_in_ball(&self, x0: Point, r: f64) -> Vec<usize> {
        let r2 = r * r * (1.0 + 1e-12);
        let span = (r / self.h).ceil() as i64 + 1;
        let ci = ((x0[0] - self.origin[0]) / self.h).round() as i64;
        let cj = if self.dim == 2 { ((x0[1] - self.origin[1]) / self.h).round() as i64 } else { 0 };
        let n = self.n as i64;
        let mut out = Vec::new();
        let (jlo, jhi) = if self.dim == 2 { ((cj - span).max(0), (cj + span).min(n - 1)) } else { (0, 0) };
        for j in jlo..=jhi {
            for i in (ci - span).max(0)..=(ci + span).min(n - 1) {
                let idx = self.index(i as usize, j as usize);
                if dist2(self.coord(idx), x0, self.dim) <= r2 {
                    out.push(idx);
                }
            }
        }
        out
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: Point) -> usize {
        let clamp = |v: f64| v.round().clamp(0.0, (self.n - 1) as f64) as usize;
        let i = clamp((x[0] - self.origin[0]) / self.h);
        let j = if self.dim == 2 { clamp((x[1] - self.origin[1]) / self.h) } else { 0 };
        self.index(i, j)
    }

    /// Axis neighbours (2 in 1D, 4 in 2D) that exist on the grid.
    pub fn axis_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let offs: &[(i32, i32)] = if self.dim == 1 {
            &[(1, 0), (-1, 0)]
        } else {
            &[(1, 0), (-1, 0), (0, 1), (0, -1)]
        };
        offs.iter().filter_map(move |&(dx, dy)| self.offset(idx, dx, dy))
    }
}

/// Squared Euclidean distance using the first `dim` coordinates.
#[inline]
pub fn dist2(a: Point, b: Point, dim: usize) -> f64 {
    let dx = a[0] - b[0];
    if dim == 1 {
        dx * dx
    } else {
        let dy = a[1] - b[1];
        dx * dx + dy * dy
    }
}

#[inline]
pub fn dist(a: Point, b: Point, dim: usize) -> f64 {
    dist2(a, b, dim).sqrt()
}

/// The open set on which the equation is posed. Nodes outside it carry
/// Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Domain {
    /// The whole grid box; the outer node layer is the boundary.
    Box,
    /// Open ball; nodes with `|x - center| >= radius` are boundary nodes.
    Ball { center: Point, radius: f64 },
}

impl Domain {
    pub fn contains(&self, x: Point, dim: usize) -> bool {
        match *self {
            Domain::Box => true,
            Domain::Ball { center, radius } => dist(x, center, dim) < radius * (1.0 - 1e-12),
        }
    }
}

/// Real values attached to every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: values[i] });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at every node centre.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Nodewise map producing a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_are_reproducible() {
        let g = Grid::new(2, [-1.0, -1.0], 2.0, 5).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.len(), 25);
        let idx = g.index(3, 1);
        assert_eq!(g.coord(idx), [-1.0 + 3.0 * 0.5, -1.0 + 0.5]);
        let g2 = Grid::new(2, [-1.0, -1.0], 2.0, 5).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.coord(i).map(f64::to_bits), g2.coord(i).map(f64::to_bits));
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Grid::new(3, [0.0; 2], 1.0, 5), Err(Error::Dimension(3))));
        assert!(Grid::new(1, [0.0; 2], 1.0, 2).is_err());
        assert!(Grid::new(1, [0.0; 2], -1.0, 5).is_err());
        let g = Grid::new(1, [0.0; 2], 1.0, 5).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 4]).is_err());
        assert!(ScalarField::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn offsets_respect_edges() {
        let g = Grid::new(2, [0.0; 2], 1.0, 4).unwrap();
        let corner = g.index(0, 0);
        assert_eq!(g.offset(corner, -1, 0), None);
        assert_eq!(g.offset(corner, 1, 1), Some(g.index(1, 1)));
        assert_eq!(g.axis_neighbors(corner).count(), 2);
        let g1 = Grid::new(1, [0.0; 2], 1.0, 4).unwrap();
        assert_eq!(g1.offset(1, 0, 1), None);
    }

    #[test]
    fn ball_membership_uses_node_centres() {
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 21).unwrap();
        let nodes = g.nodes_in_ball([0.0, 0.0], 0.1);
        // centre plus the four axis neighbours at distance exactly h
        assert_eq!(nodes.len(), 5);
        assert!(g.contains_ball([0.0, 0.0], 1.0));
        assert!(!g.contains_ball([0.5, 0.0], 0.6));
    }
}
