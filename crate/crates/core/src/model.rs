//! Problem parameters, their validation, and the closed-form constants of the
//! dead-core model `|Du|^γ (F(x, D²u) + <b, Du>) = λ₀(x) u₊^μ`.

use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::operators::StencilFrame;

pub type Matrix2 = [[f64; 2]; 2];

/// A real coefficient given analytically and sampled at node centres.
#[derive(Clone)]
pub enum ScalarCoef {
    Constant(f64),
    Field(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl ScalarCoef {
    pub fn field(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarCoef::Field(Arc::new(f))
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            ScalarCoef::Constant(c) => *c,
            ScalarCoef::Field(f) => f(x),
        }
    }
}

impl fmt::Debug for ScalarCoef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarCoef::Constant(c) => write!(f, "Constant({c})"),
            ScalarCoef::Field(_) => f.write_str("Field(<fn>)"),
        }
    }
}

/// Drift field `b(x)`.
#[derive(Clone)]
pub enum VectorCoef {
    Constant(Point),
    Field(Arc<dyn Fn(Point) -> Point + Send + Sync>),
}

impl VectorCoef {
    pub fn zero() -> Self {
        VectorCoef::Constant([0.0, 0.0])
    }

    pub fn eval(&self, x: Point) -> Point {
        match self {
            VectorCoef::Constant(c) => *c,
            VectorCoef::Field(f) => f(x),
        }
    }
}

impl fmt::Debug for VectorCoef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorCoef::Constant(c) => write!(f, "Constant({c:?})"),
            VectorCoef::Field(_) => f.write_str("Field(<fn>)"),
        }
    }
}

/// Symmetric coefficient matrix `A(x)` for the linear operator `tr(A D²u)`.
#[derive(Clone)]
pub enum MatrixCoef {
    Constant(Matrix2),
    Field(Arc<dyn Fn(Point) -> Matrix2 + Send + Sync>),
}

impl MatrixCoef {
    pub fn eval(&self, x: Point) -> Matrix2 {
        match self {
            MatrixCoef::Constant(m) => *m,
            MatrixCoef::Field(f) => f(x),
        }
    }
}

impl fmt::Debug for MatrixCoef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixCoef::Constant(m) => write!(f, "Constant({m:?})"),
            MatrixCoef::Field(_) => f.write_str("Field(<fn>)"),
        }
    }
}

/// The second-order part `F(x, D²u)`.
#[derive(Debug, Clone)]
pub enum OperatorKind {
    Laplacian,
    TraceA(MatrixCoef),
    PucciMinus,
    PucciPlus,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Laplacian => "laplacian",
            OperatorKind::TraceA(_) => "trace_a",
            OperatorKind::PucciMinus => "pucci_minus",
            OperatorKind::PucciPlus => "pucci_plus",
        }
    }
}

/// Full coefficient bundle of the model equation.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub dim: usize,
    /// Degeneracy exponent γ > -1.
    pub gamma: f64,
    /// Absorption exponent, 0 <= μ <= γ + 1.
    pub mu: f64,
    /// Thiele modulus λ₀(x).
    pub lambda0: ScalarCoef,
    pub drift: VectorCoef,
    /// Lower ellipticity bound λ.
    pub lambda_ell: f64,
    /// Upper ellipticity bound Λ.
    pub big_lambda_ell: f64,
    pub operator: OperatorKind,
    /// Adds the (2,1) lattice frames to the default axis and diagonal frames.
    pub wide_frames: bool,
}

impl ProblemParams {
    /// Constant-coefficient Laplacian bundle without drift.
    pub fn laplacian(dim: usize, gamma: f64, mu: f64, lambda0: f64) -> Self {
        Self {
            dim,
            gamma,
            mu,
            lambda0: ScalarCoef::Constant(lambda0),
            drift: VectorCoef::zero(),
            lambda_ell: 1.0,
            big_lambda_ell: 1.0,
            operator: OperatorKind::Laplacian,
            wide_frames: false,
        }
    }

    pub fn with_operator(mut self, op: OperatorKind, lambda_ell: f64, big_lambda_ell: f64) -> Self {
        self.operator = op;
        self.lambda_ell = lambda_ell;
        self.big_lambda_ell = big_lambda_ell;
        self
    }

    pub fn with_drift(mut self, drift: VectorCoef) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_lambda0(mut self, lambda0: ScalarCoef) -> Self {
        self.lambda0 = lambda0;
        self
    }

    /// Growth exponent of this bundle.
    pub fn kappa(&self) -> Result<f64> {
        kappa(self.gamma, self.mu)
    }

    /// Checks every invariant that does not need a grid: exponents,
    /// ellipticity bounds and constant coefficients.
    pub fn validate(&self) -> std::result::Result<(), Vec<ParamError>> {
        let mut errs = Vec::new();
        if self.dim != 1 && self.dim != 2 {
            errs.push(ParamError::new("dim", self.dim as f64, "dimension must be 1 or 2"));
        }
        if !(self.gamma > -1.0) || !self.gamma.is_finite() {
            errs.push(ParamError::new("gamma", self.gamma, "gamma must exceed -1"));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            errs.push(ParamError::new("mu", self.mu, "mu must be non-negative"));
        } else if self.gamma.is_finite() && self.mu > self.gamma + 1.0 {
            errs.push(ParamError::new("mu", self.mu, "mu must not exceed gamma + 1"));
        }
        if !(self.lambda_ell > 0.0) || !self.lambda_ell.is_finite() {
            errs.push(ParamError::new("lambda_ell", self.lambda_ell, "lambda must be positive"));
        }
        if !self.big_lambda_ell.is_finite() || !(self.big_lambda_ell >= self.lambda_ell) {
            errs.push(ParamError::new(
                "Lambda_ell",
                self.big_lambda_ell,
                "Lambda must dominate lambda",
            ));
        }
        if let ScalarCoef::Constant(c) = self.lambda0 {
            check_lambda0(c, None, &mut errs);
        }
        if let VectorCoef::Constant(b) = self.drift {
            check_drift(b, None, &mut errs);
        }
        if let OperatorKind::TraceA(MatrixCoef::Constant(a)) = &self.operator {
            check_matrix(a, self.dim, self.lambda_ell, self.big_lambda_ell, None, &mut errs);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamError {
    pub field: &'static str,
    pub value: f64,
    pub message: String,
    /// Node index for nodewise coefficient checks.
    pub node: Option<usize>,
}

impl ParamError {
    fn new(field: &'static str, value: f64, message: &str) -> Self {
        Self { field, value, message: message.to_string(), node: None }
    }

    fn at(mut self, node: Option<usize>) -> Self {
        self.node = node;
        self
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (field {}, observed {})", self.message, self.field, self.value)?;
        if let Some(n) = self.node {
            write!(f, " at node {n}")?;
        }
        Ok(())
    }
}

fn check_lambda0(c: f64, node: Option<usize>, errs: &mut Vec<ParamError>) {
    if !c.is_finite() || c < 0.0 {
        errs.push(ParamError::new("lambda0", c, "lambda0 must be finite and non-negative").at(node));
    }
}

fn check_drift(b: Point, node: Option<usize>, errs: &mut Vec<ParamError>) {
    for v in b {
        if !v.is_finite() {
            errs.push(ParamError::new("drift", v, "drift must be finite").at(node));
        }
    }
}

fn check_matrix(a: &Matrix2, dim: usize, lo: f64, hi: f64, node: Option<usize>, errs: &mut Vec<ParamError>) {
    if a.iter().flatten().any(|v| !v.is_finite()) {
        errs.push(ParamError::new("matrix", f64::NAN, "matrix entries must be finite").at(node));
        return;
    }
    let tol = 1e-12 * (1.0 + hi.abs());
    if dim == 1 {
        let e = a[0][0];
        if e < lo - tol || e > hi + tol {
            errs.push(ParamError::new("matrix", e, "eigenvalues of A must lie in [lambda, Lambda]").at(node));
        }
        return;
    }
    if (a[0][1] - a[1][0]).abs() > tol {
        errs.push(ParamError::new("matrix", a[0][1] - a[1][0], "A must be symmetric").at(node));
    }
    let (e1, e2) = sym_eigenvalues(a);
    for e in [e1, e2] {
        if e < lo - tol || e > hi + tol {
            errs.push(ParamError::new("matrix", e, "eigenvalues of A must lie in [lambda, Lambda]").at(node));
        }
    }
    let off = a[0][1].abs();
    if a[0][0] < off - tol || a[1][1] < off - tol {
        errs.push(
            ParamError::new("matrix", off, "A must be diagonally dominant for a monotone discretization").at(node),
        );
    }
}

/// Eigenvalues (ascending) of a symmetric 2x2 matrix.
pub fn sym_eigenvalues(a: &Matrix2) -> (f64, f64) {
    let tr = a[0][0] + a[1][1];
    let diff = a[0][0] - a[1][1];
    let disc = (diff * diff + 4.0 * a[0][1] * a[1][0]).max(0.0).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// Parameters checked and sampled on a grid.
#[derive(Debug, Clone)]
pub struct ValidatedParams {
    params: ProblemParams,
    grid: Grid,
    lambda0: Vec<f64>,
    drift: Vec<Point>,
    matrix: Option<Vec<Matrix2>>,
    frames: StencilFrame,
}

/// Validates `p` and samples its coefficient fields on `grid`, collecting
/// every violated invariant.
pub fn validate_params(p: &ProblemParams, grid: &Grid) -> std::result::Result<ValidatedParams, Vec<ParamError>> {
    let mut errs = match p.validate() {
        Ok(()) => Vec::new(),
        Err(e) => e,
    };
    if grid.dim() != p.dim {
        errs.push(ParamError::new("dim", grid.dim() as f64, "grid dimension differs from parameter dimension"));
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let n = grid.len();
    let lambda0: Vec<f64> = (0..n).map(|i| p.lambda0.eval(grid.coord(i))).collect();
    let drift: Vec<Point> = (0..n)
        .map(|i| {
            let b = p.drift.eval(grid.coord(i));
            if p.dim == 1 {
                [b[0], 0.0]
            } else {
                b
            }
        })
        .collect();
    if matches!(p.lambda0, ScalarCoef::Field(_)) {
        for (i, &c) in lambda0.iter().enumerate() {
            check_lambda0(c, Some(i), &mut errs);
        }
    }
    if matches!(p.drift, VectorCoef::Field(_)) {
        for (i, &b) in drift.iter().enumerate() {
            check_drift(b, Some(i), &mut errs);
        }
    }
    let matrix = match &p.operator {
        OperatorKind::TraceA(m) => {
            let a: Vec<Matrix2> = (0..n).map(|i| m.eval(grid.coord(i))).collect();
            if matches!(m, MatrixCoef::Field(_)) {
                for (i, ai) in a.iter().enumerate() {
                    check_matrix(ai, p.dim, p.lambda_ell, p.big_lambda_ell, Some(i), &mut errs);
                }
            }
            Some(a)
        }
        _ => None,
    };
    if !errs.is_empty() {
        return Err(errs);
    }
    let frames = StencilFrame::for_dim(p.dim, p.wide_frames);
    Ok(ValidatedParams { params: p.clone(), grid: *grid, lambda0, drift, matrix, frames })
}

impl ValidatedParams {
    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn lambda0(&self) -> &[f64] {
        &self.lambda0
    }

    pub fn drift(&self) -> &[Point] {
        &self.drift
    }

    pub fn matrix(&self) -> Option<&[Matrix2]> {
        self.matrix.as_deref()
    }

    pub fn frames(&self) -> &StencilFrame {
        &self.frames
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|b| b[0] != 0.0 || b[1] != 0.0)
    }

    pub fn kappa(&self) -> Result<f64> {
        kappa(self.params.gamma, self.params.mu)
    }

    /// Copy with the Thiele modulus multiplied by `s`.
    pub fn scaled_lambda0(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.lambda0.iter_mut().for_each(|v| *v *= s);
        out.params.lambda0 = match &self.params.lambda0 {
            ScalarCoef::Constant(c) => ScalarCoef::Constant(c * s),
            ScalarCoef::Field(f) => {
                let f = f.clone();
                ScalarCoef::field(move |x| s * f(x))
            }
        };
        out
    }
}

fn exponent_pre(gamma: f64, mu: f64) -> Result<()> {
    let mut errs = Vec::new();
    if !(gamma > -1.0) || !gamma.is_finite() {
        errs.push(ParamError::new("gamma", gamma, "gamma must exceed -1"));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        errs.push(ParamError::new("mu", mu, "mu must be non-negative"));
    }
    if !errs.is_empty() {
        return Err(Error::Params(errs));
    }
    if mu >= gamma + 1.0 {
        return Err(Error::BorderlineExponent { gamma, mu });
    }
    Ok(())
}

/// Sharp growth exponent `(γ + 2) / (γ + 1 - μ)` at free boundary points.
pub fn kappa(gamma: f64, mu: f64) -> Result<f64> {
    exponent_pre(gamma, mu)?;
    Ok((gamma + 2.0) / (gamma + 1.0 - mu))
}

/// Liouville threshold amplitude
/// `[λ₀ (γ+1-μ)^(γ+2) / (N Λ (μ+1) (γ+2)^(γ+1))]^(1/(γ+1-μ))`.
pub fn theta_liouville(n: u32, big_lambda: f64, lambda0_inf: f64, gamma: f64, mu: f64) -> Result<f64> {
    exponent_pre(gamma, mu)?;
    let mut errs = Vec::new();
    if n < 1 {
        errs.push(ParamError::new("N", n as f64, "dimension must be at least 1"));
    }
    if !(big_lambda > 0.0) {
        errs.push(ParamError::new("Lambda_ell", big_lambda, "Lambda must be positive"));
    }
    if !(lambda0_inf > 0.0) || !lambda0_inf.is_finite() {
        errs.push(ParamError::new("lambda0_inf", lambda0_inf, "lambda0 infimum must be positive"));
    }
    if !errs.is_empty() {
        return Err(Error::Params(errs));
    }
    let gap = gamma + 1.0 - mu;
    let base = lambda0_inf * gap.powf(gamma + 2.0)
        / (n as f64 * big_lambda * (mu + 1.0) * (gamma + 2.0).powf(gamma + 1.0));
    Ok(base.powf(1.0 / gap))
}

/// `base^exponent` with an exact rational base and a rational exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPower {
    pub base: BigRational,
    pub exponent: Ratio<i64>,
}

impl ExactPower {
    pub fn to_f64(&self) -> f64 {
        let b = self.base.to_f64().unwrap_or(f64::NAN);
        b.powf(*self.exponent.numer() as f64 / *self.exponent.denom() as f64)
    }
}

/// Exact-rational route for [`theta_liouville`] when γ is a non-negative
/// integer and the remaining inputs are rational. The result is
/// `Θ = base^(1/(γ+1-μ))` with `base` computed without rounding.
pub fn theta_liouville_exact(
    n: u32,
    big_lambda: Ratio<i64>,
    lambda0_inf: Ratio<i64>,
    gamma: u32,
    mu: Ratio<i64>,
) -> Result<ExactPower> {
    let g = Ratio::from_integer(gamma as i64);
    let gap = g + Ratio::one() - mu;
    if mu.is_negative() || !gap.is_positive() {
        return Err(Error::BorderlineExponent {
            gamma: gamma as f64,
            mu: mu.to_f64().unwrap_or(f64::NAN),
        });
    }
    if n < 1 || !big_lambda.is_positive() || !lambda0_inf.is_positive() {
        return Err(Error::Params(vec![ParamError::new(
            "lambda0_inf",
            lambda0_inf.to_f64().unwrap_or(f64::NAN),
            "N, Lambda and lambda0 infimum must be positive",
        )]));
    }
    let big = |r: Ratio<i64>| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let pow = |r: &BigRational, k: u32| (0..k).fold(BigRational::one(), |acc, _| acc * r);
    let num = big(lambda0_inf) * pow(&big(gap), gamma + 2);
    let den = BigRational::from_integer(BigInt::from(n))
        * big(big_lambda)
        * big(mu + Ratio::one())
        * pow(&BigRational::from_integer(BigInt::from(gamma + 2)), gamma + 1);
    debug_assert!(!den.is_zero());
    Ok(ExactPower { base: num / den, exponent: gap.recip() })
}

/// Measured exponent and constant from a log-log regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub exponent_hat: f64,
    pub constant_hat: f64,
    /// `(radius, measurement)` pairs sorted by decreasing radius.
    pub samples: Vec<(f64, f64)>,
    pub regression_rmse: f64,
}
