//! Monotone iterative solution of the Dirichlet problem
//! `G_h[u] = λ₀ u₊^μ` in the domain, `u = g` outside it.
//!
//! Two marching modes share the same discrete equation:
//!
//! * `Sor`: nonlinear projected successive over-relaxation. Each sweep solves
//!   the scalar equation at every node exactly (neighbours frozen), relaxes,
//!   and clips to `[0, max g]`. This is pseudo-time marching with the local
//!   step taken to infinity.
//! * `Explicit`: Jacobi-style forward Euler in pseudo time with
//!   `dt = dt_safety / max_x ∂G_h/∂u`, absorption treated implicitly per node.
//!
//! For μ = 0 the indicator `χ{u>0}` is read as its maximal monotone graph at
//! `u = 0` (any value in `[0, λ₀]`), which is what makes a discrete dead core
//! a fixed point. Convergence is declared on the sup norm of the PDE residual.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Point, ScalarField};
use crate::model::ValidatedParams;
use crate::operators::{positive_power, DriftScheme, LocalOp, Scheme};

/// Dirichlet data as an analytic function evaluated at boundary nodes.
#[derive(Clone)]
pub struct BoundaryData(Arc<dyn Fn(Point) -> f64 + Send + Sync>);

impl BoundaryData {
    pub fn constant(c: f64) -> Self {
        Self(Arc::new(move |_| c))
    }

    pub fn from_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.0)(x)
    }

    /// Pointwise `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.0.clone();
        Self(Arc::new(move |x| f(x) + c))
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryData(<fn>)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Marching {
    #[default]
    Sor,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Sup-norm residual at which iteration stops.
    pub tol: f64,
    pub max_iters: usize,
    /// Fraction of the stability limit used by explicit steps, in (0, 1].
    pub dt_safety: f64,
    /// Gradient cutoff ε_g; `None` means the grid spacing.
    pub grad_cutoff: Option<f64>,
    /// Steps between bracket checks during explicit marching; SOR checks
    /// only the converged field.
    pub bracket_check_every: usize,
    pub method: Marching,
    /// Relaxation factor for `Sor`; `None` picks the Laplacian optimum.
    pub omega: Option<f64>,
    pub drift_scheme: DriftScheme,
    /// Solve a second time from the lower bracket and report the discrepancy.
    pub check_uniqueness: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 2_000_000,
            dt_safety: 0.9,
            grad_cutoff: None,
            bracket_check_every: 50,
            method: Marching::Sor,
            omega: None,
            drift_scheme: DriftScheme::Upwind,
            check_uniqueness: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.tol > 0.0) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety));
        }
        if let Some(e) = self.grad_cutoff {
            if !(e > 0.0) {
                return Err(format!("grad_cutoff must be positive, got {e}"));
            }
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(format!("omega must lie in (0, 2), got {w}"));
            }
        }
        if self.bracket_check_every == 0 {
            return Err("bracket_check_every must be positive".into());
        }
        Ok(())
    }
}

/// Parameters, domain and boundary data of one Dirichlet problem.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub params: ValidatedParams,
    pub domain: Domain,
    pub boundary: BoundaryData,
}

impl DirichletProblem {
    pub fn new(params: ValidatedParams, domain: Domain, boundary: BoundaryData) -> Self {
        Self { params, domain, boundary }
    }

    pub fn with_boundary(&self, boundary: BoundaryData) -> Self {
        Self { params: self.params.clone(), domain: self.domain, boundary }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepSummary {
    pub method: Marching,
    pub omega: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub dt_last: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BracketDiagnostics {
    pub checks: usize,
    pub violations: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub u: ScalarField,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub steps: StepSummary,
    pub bracket: BracketDiagnostics,
    pub dead_core_volume_fraction: f64,
    /// Values at or below this count as dead core.
    pub dead_core_threshold: f64,
    pub grad_cutoff: f64,
    /// `(iteration, residual)` at each residual check.
    pub residual_trace: Vec<(usize, f64)>,
    /// Sup distance between solutions started from the upper and the lower
    /// bracket, when requested.
    pub init_discrepancy: Option<f64>,
    /// Set when `init_discrepancy` exceeds `100 tol`.
    pub uniqueness_flag: bool,
    #[serde(skip)]
    pub u_flat: ScalarField,
    #[serde(skip)]
    pub u_sharp: ScalarField,
    pub wall_seconds: f64,
}

/// Right-hand side of the discrete equation.
#[derive(Debug, Clone, Copy)]
enum Source {
    /// `λ₀(x) u₊^μ` with clipping to `[0, max g]`.
    Absorption,
    /// A constant, no clipping.
    Constant(f64),
}

struct Engine<'a> {
    scheme: Scheme<'a>,
    source: Source,
    mu: f64,
    lambda0: &'a [f64],
    lo: f64,
    hi: f64,
    interior_nodes: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a DirichletProblem, cfg: &SolverConfig, source: Source, gmax: f64) -> Self {
        let p = &problem.params;
        let cutoff = cfg.grad_cutoff.unwrap_or(p.grid().h());
        let scheme = Scheme::new(p, &problem.domain, cutoff, cfg.drift_scheme);
        let interior_nodes = (0..p.grid().len()).filter(|&i| scheme.interior()[i]).collect();
        let (lo, hi) = match source {
            Source::Absorption => (0.0, gmax),
            Source::Constant(_) => (f64::NEG_INFINITY, f64::INFINITY),
        };
        Self { scheme, source, mu: p.mu(), lambda0: p.lambda0(), lo, hi, interior_nodes }
    }

    /// Source value and derivative at `u`; for μ = 0, `u = 0` returns the
    /// lower end of the graph.
    #[inline]
    fn source(&self, idx: usize, u: f64) -> (f64, f64) {
        match self.source {
            Source::Constant(c) => (c, 0.0),
            Source::Absorption => {
                let l = self.lambda0[idx];
                if u <= 0.0 {
                    (0.0, 0.0)
                } else if self.mu == 0.0 {
                    (l, 0.0)
                } else if self.mu == 1.0 {
                    (l * u, l)
                } else {
                    (l * u.powf(self.mu), l * self.mu * u.powf(self.mu - 1.0))
                }
            }
        }
    }

    /// Width of the source graph at `u = 0`: `λ₀` for μ = 0, and otherwise
    /// the source at the smallest positive double. A root below that double
    /// is stored as zero, so `G(0)` up to this value counts as solved; the
    /// width only matters for very small μ.
    #[inline]
    fn zero_jump(&self, idx: usize) -> f64 {
        self.lambda0[idx] * positive_power(f64::from_bits(1), self.mu)
    }

    /// Residual of the node equation at the current value.
    #[inline]
    fn node_residual(&self, op: &LocalOp<'_>, idx: usize, u: f64) -> f64 {
        let (g, _) = op.eval(u);
        match self.source {
            Source::Constant(c) => g - c,
            Source::Absorption if u <= 0.0 => {
                let jump = self.zero_jump(idx);
                if g < 0.0 {
                    g
                } else {
                    (g - jump).max(0.0)
                }
            }
            Source::Absorption => g - self.source(idx, u).0,
        }
    }

    fn residual(&self, v: &[f64]) -> f64 {
        self.interior_nodes
            .iter()
            .map(|&idx| {
                let op = self.scheme.local(v, idx);
                self.node_residual(&op, idx, v[idx]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Root of `G(u) - S(u)` in the node value, neighbours frozen.
    fn local_root(&self, op: &LocalOp<'_>, idx: usize, u0: f64) -> f64 {
        let r = |u: f64| {
            let (g, dg) = op.eval(u);
            let (s, ds) = self.source(idx, u);
            (g - s, dg - ds)
        };
        let mut lo = f64::NAN;
        let mut hi;
        if let Source::Absorption = self.source {
            let jump = self.zero_jump(idx);
            let (g0, dg0) = op.eval(0.0);
            if g0 - jump <= 0.0 {
                return 0.0;
            }
            lo = 0.0;
            let l = self.lambda0[idx];
            if self.mu > 0.0 && self.mu < 1.0 && l > 0.0 && dg0 < 0.0 {
                // With G linear near 0 the root sits between the roots of the
                // two-term balances and half of them. Starting from the low
                // end keeps Newton on the convex side, where it cannot jump
                // below zero.
                let balance = |a: f64| (a / -dg0).min((a / l).powf(1.0 / self.mu));
                let (down, up) = (balance(0.5 * g0), balance(g0));
                if up == 0.0 {
                    // below the smallest positive double
                    return 0.0;
                }
                if up.is_finite() && r(up).0 <= 0.0 {
                    if down == 0.0 {
                        // the root underflows; |R| at `up` is below G(0)
                        return up;
                    }
                    if r(down).0 >= 0.0 {
                        return safeguarded_newton(&r, down, up, down);
                    }
                }
            }
        }
        let (r0, dr0) = r(u0);
        if r0 == 0.0 {
            return u0;
        }
        // Expand a bracket around u0 (R is non-increasing in u), starting from
        // a slightly lengthened Newton step.
        let newton = if dr0 < 0.0 { 1.5 * (r0 / dr0).abs() } else { f64::NAN };
        let mut step = if newton.is_finite() && newton > 0.0 { newton } else { u0.abs().max(1e-12) };
        if r0 > 0.0 {
            lo = u0.max(if lo.is_nan() { f64::NEG_INFINITY } else { lo });
            let mut k = 0;
            loop {
                let cand = u0 + step;
                if r(cand).0 <= 0.0 {
                    hi = cand;
                    break;
                }
                lo = cand;
                // The clip ceiling bounds every absorption root; jump there
                // before growing geometrically from a possibly tiny seed.
                step = if k == 0 && self.hi.is_finite() && self.hi > cand { self.hi - u0 } else { 4.0 * step };
                k += 1;
                if k > 200 {
                    return u0;
                }
            }
        } else {
            hi = u0;
            if lo.is_nan() {
                let mut k = 0;
                loop {
                    let cand = u0 - step;
                    if r(cand).0 >= 0.0 {
                        lo = cand;
                        break;
                    }
                    hi = cand;
                    step *= 4.0;
                    k += 1;
                    if k > 200 {
                        return u0;
                    }
                }
            }
        }
        safeguarded_newton(&r, lo, hi, if r0 > 0.0 { lo } else { hi })
    }

    fn clip(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    fn sor_sweep(&self, v: &mut [f64], omega: f64) {
        for &idx in &self.interior_nodes {
            let op = self.scheme.local(v, idx);
            let old = v[idx];
            let target = self.local_root(&op, idx, old);
            // Written around `target` so that ω = 1 returns it exactly; the
            // other form cancels tiny roots against `old`. An over-relaxed
            // step that would hit the lower clip falls back to the plain
            // update, otherwise nodes next to the free boundary flip between
            // zero and a tiny positive root.
            let relaxed = target + (omega - 1.0) * (target - old);
            v[idx] = if relaxed < self.lo { target } else { self.clip(relaxed) };
        }
    }

    /// One explicit step; returns `(dt, residual of the incoming iterate)`.
    fn explicit_step(&self, v: &mut Vec<f64>, scratch: &mut Vec<f64>, safety: f64) -> (f64, f64) {
        let mut stiff: f64 = 0.0;
        let mut res: f64 = 0.0;
        let mut gvals = Vec::with_capacity(self.interior_nodes.len());
        for &idx in &self.interior_nodes {
            let op = self.scheme.local(v, idx);
            stiff = stiff.max(op.stiffness());
            res = res.max(self.node_residual(&op, idx, v[idx]).abs());
            gvals.push(op.eval(v[idx]).0);
        }
        let dt = if stiff > 0.0 { safety / stiff } else { safety };
        scratch.clone_from(v);
        for (k, &idx) in self.interior_nodes.iter().enumerate() {
            let w = v[idx] + dt * gvals[k];
            let next = match self.source {
                Source::Constant(c) => w - dt * c,
                Source::Absorption => self.implicit_absorption(idx, w, dt),
            };
            scratch[idx] = self.clip(next);
        }
        std::mem::swap(v, scratch);
        (dt, res)
    }

    /// Solves `x + dt λ₀ x₊^μ = w` for `x`.
    fn implicit_absorption(&self, idx: usize, w: f64, dt: f64) -> f64 {
        let a = dt * self.lambda0[idx];
        if w <= 0.0 || a == 0.0 {
            return w;
        }
        let mu = self.mu;
        if mu == 0.0 {
            return (w - a).max(0.0);
        }
        if mu == 1.0 {
            return w / (1.0 + a);
        }
        let (mut lo, mut hi) = (0.0, w);
        let mut x = w;
        for _ in 0..200 {
            let f = x + a * positive_power(x, mu) - w;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let df = 1.0 + a * mu * x.powf(mu - 1.0);
            let mut next = x - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Newton on a non-increasing `r` with the root kept inside `[lo, hi]`;
/// steps leaving the bracket fall back to bisection, geometric when the
/// bracket spans several orders of magnitude.
fn safeguarded_newton(r: &impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, mut x: f64) -> f64 {
    for _ in 0..100 {
        let (rv, dr) = r(x);
        if rv == 0.0 {
            return x;
        }
        if rv > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // x^(μ-1) overflows for subnormal x; such slopes carry no step.
        let usable = dr < 0.0 && dr.is_finite();
        if usable && (rv / dr).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300) {
            return x;
        }
        let mut next = if usable { x - rv / dr } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if lo > 0.0 && hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        }
        if (hi - lo) <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

struct RunOutcome {
    values: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
    steps: StepSummary,
    trace: Vec<(usize, f64)>,
    bracket: BracketDiagnostics,
}

const CHECK_EVERY: usize = 10;

fn run(
    engine: &Engine<'_>,
    mut v: Vec<f64>,
    cfg: &SolverConfig,
    what: &'static str,
    bracket: Option<(&[f64], &[f64])>,
) -> Result<RunOutcome> {
    let grid = engine.scheme.grid();
    let mut trace = Vec::new();
    let mut diag = BracketDiagnostics::default();
    let check_bracket = |v: &[f64], diag: &mut BracketDiagnostics| {
        if let Some((lo, hi)) = bracket {
            diag.checks += 1;
            let slack = 10.0 * cfg.tol;
            for &idx in &engine.interior_nodes {
                let viol = (lo[idx] - slack - v[idx]).max(v[idx] - hi[idx] - slack);
                if viol > 0.0 {
                    diag.violations += 1;
                    diag.max_violation = diag.max_violation.max(viol);
                }
            }
        }
    };
    let r0 = engine.residual(&v);
    trace.push((0, r0));
    let mut steps = StepSummary { method: cfg.method, ..Default::default() };
    if r0 <= cfg.tol {
        check_bracket(&v, &mut diag);
        return Ok(RunOutcome { values: v, iterations: 0, converged: true, residual: r0, steps, trace, bracket: diag });
    }
    let blowup = |r: f64| !r.is_finite() || r > 1e8 * r0.max(1.0);
    let mut iters = 0;
    let mut residual;
    match cfg.method {
        Marching::Sor => {
            let n_axis = (grid.n() - 1) as f64;
            let mut omega = cfg.omega.unwrap_or_else(|| 2.0 / (1.0 + (std::f64::consts::PI / n_axis).sin()));
            // SOR residuals are not monotone during the first O(n) sweeps, so
            // progress is judged over windows of ~2n sweeps. A window that
            // ends above its starting residual means the relaxation is too
            // aggressive for the nonlinearity.
            let window = 20usize.max(2 * grid.n() / CHECK_EVERY);
            let mut window_start = (0usize, r0);
            let mut checks = 0usize;
            while iters < cfg.max_iters {
                engine.sor_sweep(&mut v, omega);
                iters += 1;
                if iters % CHECK_EVERY == 0 {
                    checks += 1;
                    residual = engine.residual(&v);
                    trace.push((iters, residual));
                    if blowup(residual) {
                        return Err(Error::Diverged { what, iterations: iters, trace: tail(&trace) });
                    }
                    if residual <= cfg.tol {
                        break;
                    }
                    if checks - window_start.0 >= window {
                        if residual >= window_start.1 && omega > 1.0 {
                            omega = 1.0 + 0.75 * (omega - 1.0);
                        }
                        window_start = (checks, residual);
                    }
                }
            }
            steps.omega = Some(omega);
        }
        Marching::Explicit => {
            let mut scratch = v.clone();
            let (mut dmin, mut dmax, mut dlast) = (f64::INFINITY, 0.0f64, 0.0);
            while iters < cfg.max_iters {
                let (dt, res_in) = engine.explicit_step(&mut v, &mut scratch, cfg.dt_safety);
                iters += 1;
                dmin = dmin.min(dt);
                dmax = dmax.max(dt);
                dlast = dt;
                residual = res_in;
                if blowup(residual) {
                    return Err(Error::Diverged { what, iterations: iters, trace: tail(&trace) });
                }
                if iters % cfg.bracket_check_every == 0 {
                    check_bracket(&v, &mut diag);
                }
                if iters % (CHECK_EVERY * 100) == 0 {
                    trace.push((iters, residual));
                }
                if residual <= cfg.tol {
                    break;
                }
            }
            steps.dt_min = Some(dmin);
            steps.dt_max = Some(dmax);
            steps.dt_last = Some(dlast);
        }
    }
    residual = engine.residual(&v);
    trace.push((iters, residual));
    check_bracket(&v, &mut diag);
    Ok(RunOutcome {
        values: v,
        iterations: iters,
        converged: residual <= cfg.tol,
        residual,
        steps,
        trace,
        bracket: diag,
    })
}

fn tail(trace: &[(usize, f64)]) -> Vec<f64> {
    trace.iter().rev().take(20).rev().map(|t| t.1).collect()
}

/// Values of the boundary data at every non-interior node, plus the initial
/// field for interior nodes, and the max of `g` over the boundary layer.
fn dirichlet_layout(problem: &DirichletProblem, scheme: &Scheme<'_>) -> (Vec<f64>, f64) {
    let grid = scheme.grid();
    let boundary = scheme.boundary_nodes();
    let mut v = vec![0.0; grid.len()];
    let mut gmax = 0.0f64;
    for idx in 0..grid.len() {
        if !scheme.interior()[idx] {
            v[idx] = problem.boundary.eval(grid.coord(idx));
            if boundary[idx] {
                gmax = gmax.max(v[idx]);
            }
        }
    }
    (v, gmax)
}

/// Sub- and super-solution pair: `u_sharp` solves `G = 0` and `u_flat` solves
/// `G = sup λ₀ · ‖g‖^μ`, both with data `g`.
#[derive(Debug, Clone)]
pub struct PerronBracket {
    pub u_flat: ScalarField,
    pub u_sharp: ScalarField,
    /// Constant right-hand side used for `u_flat`.
    pub flat_rhs: f64,
    pub iterations: (usize, usize),
    /// Set when the lower solve stalled and `u_flat` is the trivial
    /// subsolution.
    pub trivial_flat: bool,
}

pub fn perron_bracket(problem: &DirichletProblem, cfg: &SolverConfig) -> Result<PerronBracket> {
    let p = &problem.params;
    let grid = *p.grid();
    let probe = Scheme::new(p, &problem.domain, 1.0, cfg.drift_scheme);
    check_boundary(problem, probe.interior())?;
    let (init, gmax) = dirichlet_layout(problem, &probe);
    let lmax = p.lambda0().iter().copied().fold(0.0, f64::max);
    let flat_rhs = lmax * positive_power(gmax, p.mu());

    let sharp_engine = Engine::new(problem, cfg, Source::Constant(0.0), gmax);
    let mut start = init.clone();
    for &i in &sharp_engine.interior_nodes {
        start[i] = gmax;
    }
    let sharp = run(&sharp_engine, start, cfg, "upper bracket solve", None)?;
    if !sharp.converged {
        return Err(Error::NotConverged { what: "upper bracket solve", iterations: sharp.iterations, trace: tail(&sharp.trace) });
    }
    let flat_engine = Engine::new(problem, cfg, Source::Constant(flat_rhs), gmax);
    // For γ != 0 the centred factor vanishes at a kinked interior minimum of
    // u_flat, and the discrete problem can lack a solution. The solve is then
    // capped and replaced by the trivial subsolution: zero inside, g outside.
    // G ≥ 0 there and every iterate is clipped at 0, so the sandwich holds.
    let first = if p.gamma() != 0.0 {
        SolverConfig { max_iters: cfg.max_iters.min(20_000.max(40 * grid.n())), ..cfg.clone() }
    } else {
        cfg.clone()
    };
    let mut flat = run(&flat_engine, sharp.values.clone(), &first, "lower bracket solve", None)?;
    let mut trivial_flat = false;
    if !flat.converged && p.gamma() != 0.0 {
        flat.values = init.clone();
        flat.converged = true;
        trivial_flat = true;
    }
    if !flat.converged {
        return Err(Error::NotConverged { what: "lower bracket solve", iterations: flat.iterations, trace: tail(&flat.trace) });
    }
    Ok(PerronBracket {
        u_flat: ScalarField::new(grid, flat.values)?,
        u_sharp: ScalarField::new(grid, sharp.values)?,
        flat_rhs,
        iterations: (flat.iterations, sharp.iterations),
        trivial_flat,
    })
}

fn check_boundary(problem: &DirichletProblem, interior: &[bool]) -> Result<()> {
    let grid = problem.params.grid();
    for (idx, _) in interior.iter().enumerate().filter(|(_, inside)| !**inside) {
        let x = grid.coord(idx);
        let g = problem.boundary.eval(x);
        if !g.is_finite() || g < 0.0 {
            return Err(Error::Domain(format!("boundary data must be finite and non-negative, got {g} at {x:?}")));
        }
    }
    Ok(())
}

/// Solves the dead-core Dirichlet problem, starting from the upper Perron
/// bracket and checking the sandwich `u_flat <= u <= u_sharp` along the way.
pub fn solve_dirichlet(problem: &DirichletProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate().map_err(Error::Domain)?;
    let t0 = Instant::now();
    let bracket = perron_bracket(problem, cfg)?;
    let mut rep = solve_with_bracket(problem, cfg, &bracket)?;
    rep.wall_seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

/// Main solve given a precomputed bracket.
pub fn solve_with_bracket(problem: &DirichletProblem, cfg: &SolverConfig, bracket: &PerronBracket) -> Result<SolveReport> {
    cfg.validate().map_err(Error::Domain)?;
    let t0 = Instant::now();
    let p = &problem.params;
    let grid = *p.grid();
    let probe = Scheme::new(p, &problem.domain, 1.0, cfg.drift_scheme);
    let (_, gmax) = dirichlet_layout(problem, &probe);
    let engine = Engine::new(problem, cfg, Source::Absorption, gmax);
    let start = clip_interior(&engine, bracket.u_sharp.values().to_vec());
    let bounds = (bracket.u_flat.values(), bracket.u_sharp.values());
    let out = run(&engine, start, cfg, "dead-core solve", Some(bounds))?;

    let (init_discrepancy, uniqueness_flag) = if cfg.check_uniqueness {
        let alt_start = clip_interior(&engine, bracket.u_flat.values().to_vec());
        let alt = run(&engine, alt_start, cfg, "dead-core solve (lower start)", None)?;
        let d = out.values.iter().zip(&alt.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (Some(d), d > 100.0 * cfg.tol)
    } else {
        (None, false)
    };

    let threshold = 100.0 * cfg.tol;
    let n_int = engine.interior_nodes.len().max(1);
    let dead = engine.interior_nodes.iter().filter(|&&i| out.values[i] <= threshold).count();
    Ok(SolveReport {
        u: ScalarField::new(grid, out.values)?,
        iterations: out.iterations,
        converged: out.converged,
        final_residual: out.residual,
        steps: out.steps,
        bracket: out.bracket,
        dead_core_volume_fraction: dead as f64 / n_int as f64,
        dead_core_threshold: threshold,
        grad_cutoff: engine.scheme.grad_cutoff(),
        residual_trace: out.trace,
        init_discrepancy,
        uniqueness_flag,
        u_flat: bracket.u_flat.clone(),
        u_sharp: bracket.u_sharp.clone(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

fn clip_interior(engine: &Engine<'_>, mut v: Vec<f64>) -> Vec<f64> {
    for &i in &engine.interior_nodes {
        v[i] = engine.clip(v[i]);
    }
    v
}

/// Sup-norm residual `|G_h[u] - λ₀ u₊^μ|` over interior nodes (graph reading
/// of the indicator at `u = 0` when μ = 0).
pub fn residual_norm(problem: &DirichletProblem, u: &ScalarField, cfg: &SolverConfig) -> Result<f64> {
    if u.grid() != problem.params.grid() {
        return Err(Error::GridMismatch);
    }
    let engine = Engine::new(problem, cfg, Source::Absorption, f64::INFINITY);
    Ok(engine.residual(u.values()))
}

/// Nodes where `u1 > u2 + tolerance`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub violations: Vec<(usize, f64)>,
    pub max_excess: f64,
}

impl ComparisonReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_comparison(u1: &ScalarField, u2: &ScalarField, tolerance: f64) -> Result<ComparisonReport> {
    u1.same_grid(u2)?;
    let mut rep = ComparisonReport::default();
    for (idx, (&a, &b)) in u1.values().iter().zip(u2.values()).enumerate() {
        let excess = a - b;
        if excess > tolerance {
            rep.violations.push((idx, excess));
            rep.max_excess = rep.max_excess.max(excess);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::{validate_params, ProblemParams};

    fn problem_1d(n: usize, gamma: f64, mu: f64, lambda0: f64, a: f64, b: f64, g: f64) -> DirichletProblem {
        let grid = Grid::new(1, [a, 0.0], b - a, n).unwrap();
        let p = validate_params(&ProblemParams::laplacian(1, gamma, mu, lambda0), &grid).unwrap();
        DirichletProblem::new(p, Domain::Box, BoundaryData::constant(g))
    }

    #[test]
    fn zero_data_gives_zero_everything() {
        let pr = problem_1d(33, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0);
        let cfg = SolverConfig::default();
        let br = perron_bracket(&pr, &cfg).unwrap();
        assert!(br.u_flat.values().iter().all(|&v| v == 0.0));
        assert!(br.u_sharp.values().iter().all(|&v| v == 0.0));
        let rep = solve_dirichlet(&pr, &cfg).unwrap();
        assert!(rep.u.values().iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.dead_core_volume_fraction, 1.0);
    }

    #[test]
    fn perron_pair_linear_case() {
        let pr = problem_1d(65, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0);
        let cfg = SolverConfig { tol: 1e-11, ..Default::default() };
        let br = perron_bracket(&pr, &cfg).unwrap();
        let g = *pr.params.grid();
        for idx in 0..g.len() {
            let x = g.coord(idx)[0];
            // the scheme is exact on quadratics
            assert!((br.u_flat.get(idx) - (1.0 + x * (x - 1.0) / 2.0)).abs() < 1e-9);
            assert!((br.u_sharp.get(idx) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_quadratic_dead_core_1d() {
        let pr = problem_1d(129, 0.0, 0.0, 1.0, -1.0, 1.0, 0.5);
        let cfg = SolverConfig::default();
        let rep = solve_dirichlet(&pr, &cfg).unwrap();
        assert!(rep.converged);
        let g = *pr.params.grid();
        let err = (0..g.len()).map(|i| (rep.u.get(i) - 0.5 * g.coord(i)[0].powi(2)).abs()).fold(0.0, f64::max);
        assert!(err <= 2.0 * g.h() * g.h(), "err {err}");
        assert_eq!(rep.bracket.violations, 0);
    }

    #[test]
    fn explicit_and_sor_agree() {
        let pr = problem_1d(33, 0.0, 0.5, 4.0, -1.0, 1.0, 0.3);
        let sor = solve_dirichlet(&pr, &SolverConfig::default()).unwrap();
        let exp = solve_dirichlet(&pr, &SolverConfig { method: Marching::Explicit, ..Default::default() }).unwrap();
        assert!(sor.converged && exp.converged);
        let d = sor.u.values().iter().zip(exp.u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-7, "{d}");
        assert!(exp.steps.dt_min.unwrap() > 0.0);
    }

    #[test]
    fn comparison_reports() {
        let g = Grid::new(1, [0.0, 0.0], 1.0, 11).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0]);
        assert!(check_comparison(&u, &u, 0.0).unwrap().is_empty());
        let mut vals = u.values().to_vec();
        let h2 = g.h() * g.h();
        vals[4] += h2;
        let bumped = ScalarField::new(g, vals).unwrap();
        let rep = check_comparison(&bumped, &u, 0.5 * h2).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].0, 4);
        let other = ScalarField::zeros(Grid::new(1, [0.0, 0.0], 1.0, 12).unwrap());
        assert!(check_comparison(&u, &other, 0.0).is_err());
    }

    #[test]
    fn negative_boundary_data_rejected() {
        let pr = problem_1d(17, 0.0, 0.0, 1.0, -1.0, 1.0, -0.1);
        assert!(solve_dirichlet(&pr, &SolverConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_gives_partial_report() {
        let pr = problem_1d(65, 0.0, 0.0, 1.0, -1.0, 1.0, 0.5);
        let br = perron_bracket(&pr, &SolverConfig::default()).unwrap();
        let rep = solve_with_bracket(&pr, &SolverConfig { max_iters: 3, ..Default::default() }, &br).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn tiny_roots_near_the_free_boundary_converge() {
        // Sublinear absorption with roots of order 1e-68 and 1e-262.
        for (gamma, mu, lambda0) in [(1.0, 0.1, 10.0), (0.12, 0.005, 12.8)] {
            let grid = Grid::new(1, [-1.0, 0.0], 2.0, 33).unwrap();
            let p = validate_params(&ProblemParams::laplacian(1, gamma, mu, lambda0), &grid).unwrap();
            let pr = DirichletProblem::new(p, Domain::Box, BoundaryData::from_fn(|x| (0.3 * x[0]).max(0.0)));
            let rep = solve_dirichlet(&pr, &SolverConfig::default()).unwrap();
            assert!(rep.converged, "gamma {gamma} mu {mu}: residual {}", rep.final_residual);
        }
    }

    #[test]
    fn lower_bracket_survives_a_kinked_minimum() {
        let grid = Grid::new(1, [-1.0, 0.0], 2.0, 65).unwrap();
        let p = validate_params(&ProblemParams::laplacian(1, 1.0, 2.0, 2.0), &grid).unwrap();
        let rate = 2f64.powf(1.0 / 3.0);
        let pr = DirichletProblem::new(p, Domain::Box, BoundaryData::from_fn(move |x| (rate * x[0]).exp()));
        let br = perron_bracket(&pr, &SolverConfig::default()).unwrap();
        assert!(br.trivial_flat);
        assert!(br.u_flat.values().iter().zip(br.u_sharp.values()).all(|(a, b)| a <= b));
    }
}
