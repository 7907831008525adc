//! Solves plus measurements: single runs, parameter sweeps, the Liouville
//! decay table and the borderline dichotomy.

use deadcore::analysis::{
    default_eps_fb, dyadic_radii, extract_free_boundary, fit_sup_growth, gradient_decay_fit, nondegeneracy_constant,
    porosity_constant, positive_density, sup_over_ball, FreeBoundarySet, NondegeneracyReport,
};
use deadcore::radial::theta_radial_exact;
use deadcore::{solve_dirichlet, FitResult, Point, ScalarField, SolveReport, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AnalysisConfig, BoundaryConfig, DomainShape, ExperimentConfig, InstanceConfig};
use crate::emit::{num, opt, Bundle, Plot, Table};
use crate::error::{CliError, Result};
use crate::instance::{build, Instance};

/// Nodes where `u` leaves `[u_flat - 10 tol, u_sharp + 10 tol]`.
pub fn bracket_violations(r: &SolveReport, tol: f64) -> usize {
    let slack = 10.0 * tol;
    r.u.values()
        .iter()
        .zip(r.u_flat.values().iter().zip(r.u_sharp.values()))
        .filter(|(u, (lo, hi))| **u < **lo - slack || **u > **hi + slack)
        .count()
}

fn interior_min(inst: &Instance, u: &ScalarField) -> f64 {
    let g = u.grid();
    (0..g.len())
        .filter(|&i| is_interior(inst, i))
        .map(|i| u.get(i))
        .fold(f64::INFINITY, f64::min)
}

fn is_interior(inst: &Instance, i: usize) -> bool {
    let g = inst.grid();
    let (a, b) = g.ij(i);
    let edge = |k: usize| k == 0 || k + 1 == g.n();
    let on_edge = edge(a) || (g.dim() == 2 && edge(b));
    !on_edge && inst.problem.domain.contains(g.coord(i), g.dim())
}

/// Radii from the dyadic schedule whose balls around `x0` fit in the grid.
pub fn usable_radii(u: &ScalarField, x0: Point, r_max: f64, levels: usize) -> Vec<f64> {
    let g = u.grid();
    dyadic_radii(r_max, levels, g.h()).into_iter().filter(|&r| g.contains_ball(x0, r)).collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Measurements {
    pub x0: Point,
    pub eps_fb: f64,
    pub fb_nodes: usize,
    pub growth: Option<FitResult>,
    pub gradient: Option<FitResult>,
    pub nondegeneracy: Option<NondegeneracyReport>,
    pub density_min: Option<f64>,
    pub porosity: Option<f64>,
    /// Why a requested measurement is missing.
    pub notes: Vec<String>,
}

/// Growth point: the configured one, else the centre when it is dead and
/// the dead set around it fits inside the smallest fitted ball (radius 4h),
/// else the free-boundary node nearest the centre.
fn growth_point(u: &ScalarField, fb: &FreeBoundarySet, a: &AnalysisConfig, center: Point) -> Point {
    if let Some(x) = a.x0 {
        return x;
    }
    let g = u.grid();
    let c = g.nearest(center);
    let d = |i: usize| deadcore::grid::dist(g.coord(i), center, g.dim());
    let Some(best) = fb.fb_nodes.iter().copied().min_by(|&p, &q| d(p).total_cmp(&d(q)).then(p.cmp(&q))) else {
        return center;
    };
    // A point-like dead set is the numerical trace of an isolated zero; the
    // extracted nodes around it would bias the small radii.
    if u.get(c) <= fb.epsilon_fb && d(best) <= 4.0 * g.h() {
        return center;
    }
    g.coord(best)
}

/// Smallest positivity fraction over sampled free-boundary nodes and the
/// radii whose balls fit in the grid.
pub fn density_min(u: &ScalarField, fb: &FreeBoundarySet, rhos: &[f64], stride: usize) -> Option<f64> {
    let g = u.grid();
    let mut best: Option<f64> = None;
    for &x in fb.fb_nodes.iter().step_by(stride.max(1)) {
        let cx = g.coord(x);
        let fit: Vec<f64> = rhos.iter().copied().filter(|&r| g.contains_ball(cx, r)).collect();
        if let Ok(d) = positive_density(u, cx, &fit, fb.epsilon_fb) {
            for v in d {
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}

pub fn measure(inst: &Instance, report: &SolveReport, a: &AnalysisConfig, tol: f64, center: Point) -> Measurements {
    let u = &report.u;
    let g = u.grid();
    let eps_fb = a.eps_fb.unwrap_or_else(|| default_eps_fb(tol, g.h(), inst.kappa));
    let fb = extract_free_boundary(u, eps_fb);
    let x0 = growth_point(u, &fb, a, center);
    let radii = usable_radii(u, x0, a.r_max, a.levels);
    let mut m = Measurements { x0, eps_fb, fb_nodes: fb.len(), ..Default::default() };
    let mut note = |what: &str, e: deadcore::Error| m.notes.push(format!("{what}: {e}"));
    let growth = if a.growth { fit_sup_growth(u, x0, &radii).map_err(|e| note("growth", e)).ok() } else { None };
    let gradient = if a.gradient { gradient_decay_fit(u, x0, &radii).map_err(|e| note("gradient", e)).ok() } else { None };
    let nondegeneracy = match (a.nondegeneracy, inst.kappa) {
        (true, Some(k)) => nondegeneracy_constant(u, x0, &radii, k).map_err(|e| note("nondegeneracy", e)).ok(),
        _ => None,
    };
    let rhos = dyadic_radii(a.r_max, a.levels, g.h());
    let porosity = if a.porosity && !fb.is_empty() {
        porosity_constant(&fb, u, &rhos, a.fb_stride).map_err(|e| note("porosity", e)).ok().map(|p| p.epsilon)
    } else {
        None
    };
    m.growth = growth;
    m.gradient = gradient;
    m.nondegeneracy = nondegeneracy;
    m.porosity = porosity;
    if a.density && !fb.is_empty() {
        m.density_min = density_min(u, &fb, &rhos, a.fb_stride);
    }
    m
}

/// One solved and measured instance.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub instance: Instance,
    pub report: SolveReport,
    pub measurements: Measurements,
    pub max_error: Option<f64>,
    pub bracket_violations: usize,
    pub min_u: f64,
}

pub fn solve_instance(ic: &InstanceConfig, solver: &SolverConfig) -> Result<(Instance, SolveReport)> {
    let inst = build(ic)?;
    let report = solve_dirichlet(&inst.problem, solver)?;
    Ok((inst, report))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_with(&cfg.instance, &cfg.solver, Some(&cfg.analysis))
}

pub fn run_with(ic: &InstanceConfig, solver: &SolverConfig, analysis: Option<&AnalysisConfig>) -> Result<RunOutcome> {
    let (instance, report) = solve_instance(ic, solver)?;
    let measurements = match analysis {
        Some(a) => measure(&instance, &report, a, solver.tol, ic.center),
        None => Measurements::default(),
    };
    let max_error = instance.exact.map(|p| {
        report.u.values().iter().enumerate().map(|(i, v)| (v - p.eval(report.u.grid().coord(i))).abs()).fold(0.0, f64::max)
    });
    let bracket_violations = bracket_violations(&report, solver.tol);
    let min_u = interior_min(&instance, &report.u);
    Ok(RunOutcome { instance, report, measurements, max_error, bracket_violations, min_u })
}

pub const SUMMARY_COLUMNS: &[&str] = &[
    "dim",
    "gamma",
    "mu",
    "lambda0",
    "n",
    "h",
    "kappa",
    "exponent_hat",
    "constant_hat",
    "gradient_slope",
    "gradient_slope_theory",
    "nondegeneracy",
    "nondegeneracy_variation",
    "density_min",
    "porosity",
    "fb_nodes",
    "eps_fb",
    "dead_core_fraction",
    "min_u",
    "max_error",
    "iterations",
    "converged",
    "residual",
    "bracket_violations",
];

fn summary_row(ic: &InstanceConfig, o: &RunOutcome) -> Vec<String> {
    let m = &o.measurements;
    let k = o.instance.kappa;
    vec![
        ic.dim.to_string(),
        num(ic.gamma),
        num(ic.mu),
        num(ic.lambda0),
        ic.n.to_string(),
        num(o.instance.grid().h()),
        opt(k),
        opt(m.growth.as_ref().map(|f| f.exponent_hat)),
        opt(m.growth.as_ref().map(|f| f.constant_hat)),
        opt(m.gradient.as_ref().map(|f| f.exponent_hat)),
        opt(k.map(|k| k - 1.0)),
        opt(m.nondegeneracy.as_ref().map(|n| n.constant)),
        opt(m.nondegeneracy.as_ref().map(|n| n.variation())),
        opt(m.density_min),
        opt(m.porosity),
        m.fb_nodes.to_string(),
        num(m.eps_fb),
        num(o.report.dead_core_volume_fraction),
        num(o.min_u),
        opt(o.max_error),
        o.report.iterations.to_string(),
        o.report.converged.to_string(),
        num(o.report.final_residual),
        o.bracket_violations.to_string(),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

/// Pass/fail of the checks implied by the measurements that were taken.
pub fn run_checks(o: &RunOutcome) -> Vec<Check> {
    let m = &o.measurements;
    let mut out = vec![
        check("converged", o.report.converged, format!("residual {}", num(o.report.final_residual))),
        check("perron_bracket", o.bracket_violations == 0, format!("{} violations", o.bracket_violations)),
    ];
    if let Some(k) = o.instance.kappa {
        if let Some(f) = &m.growth {
            let rel = (f.exponent_hat - k).abs() / k;
            out.push(check("growth_exponent_within_10pct", rel <= 0.10, format!("exponent {} vs {}", num(f.exponent_hat), num(k))));
        }
        if let Some(f) = &m.gradient {
            let t = k - 1.0;
            let rel = (f.exponent_hat - t).abs() / t;
            out.push(check("gradient_slope_within_15pct", rel <= 0.15, format!("slope {} vs {}", num(f.exponent_hat), num(t))));
        }
        if let Some(n) = &m.nondegeneracy {
            out.push(check("nondegenerate", n.constant > 0.0, format!("constant {}", num(n.constant))));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub kappa: Option<f64>,
    pub h: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub omega: Option<f64>,
    pub dead_core_fraction: f64,
    pub min_u: f64,
    pub max_error: Option<f64>,
    pub bracket_violations: usize,
    pub measurements: &'a Measurements,
    pub checks: Vec<Check>,
}

/// Tables, plots and summary for `solve` (with the nodal solution) or `fit`.
pub fn run_bundle(command: &str, cfg: &ExperimentConfig, o: &RunOutcome, with_solution: bool) -> Bundle {
    let summary = RunSummary {
        command,
        seed: cfg.seed,
        config: cfg.recorded(),
        kappa: o.instance.kappa,
        h: o.instance.grid().h(),
        iterations: o.report.iterations,
        converged: o.report.converged,
        residual: o.report.final_residual,
        omega: o.report.steps.omega,
        dead_core_fraction: o.report.dead_core_volume_fraction,
        min_u: o.min_u,
        max_error: o.max_error,
        bracket_violations: o.bracket_violations,
        measurements: &o.measurements,
        checks: run_checks(o),
    };
    let mut b = Bundle::with_summary(&summary);
    let mut s = Table::new("summary", SUMMARY_COLUMNS);
    s.push(summary_row(&cfg.instance, o));
    b.tables.push(s);
    let m = &o.measurements;
    if let Some(f) = &m.growth {
        let mut t = Table::new("growth", &["radius", "sup_u", "fitted", "ratio"]);
        for (r, v) in &f.samples {
            let ratio = o.instance.kappa.map(|k| v / r.powf(k));
            t.push(vec![num(*r), num(*v), num(f.constant_hat * r.powf(f.exponent_hat)), opt(ratio)]);
        }
        b.tables.push(t);
        b.plots.push(Plot::from_fit("growth", "sup of u over B_r", "sup u", f));
    }
    if let Some(f) = &m.gradient {
        let mut t = Table::new("gradient", &["radius", "sup_grad", "fitted"]);
        for (r, v) in &f.samples {
            t.push(vec![num(*r), num(*v), num(f.constant_hat * r.powf(f.exponent_hat))]);
        }
        b.tables.push(t);
        b.plots.push(Plot::from_fit("gradient", "sup of |Du| over B_r", "sup |Du|", f));
    }
    if with_solution {
        let g = o.report.u.grid();
        let mut t = Table::new("solution", &["node", "x", "y", "u", "u_flat", "u_sharp", "u_exact"]);
        for i in 0..g.len() {
            let x = g.coord(i);
            t.push(vec![
                i.to_string(),
                num(x[0]),
                num(x[1]),
                num(o.report.u.get(i)),
                num(o.report.u_flat.get(i)),
                num(o.report.u_sharp.get(i)),
                opt(o.instance.exact.map(|p| p.eval(x))),
            ]);
        }
        b.tables.push(t);
    }
    b
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "index",
    "gamma",
    "mu",
    "lambda0",
    "lambda_scale",
    "kappa",
    "exponent_hat",
    "nondegeneracy",
    "density_min",
    "porosity",
    "dead_core_fraction",
    "iterations",
    "converged",
    "bracket_violations",
    "status",
];

/// One instance per axis entry, solved in parallel and merged in axis order.
/// Failures become rows with their error in `status`.
pub fn sweep(cfg: &ExperimentConfig) -> Bundle {
    let base = &cfg.instance;
    let axis: Vec<(InstanceConfig, f64)> = if !cfg.sweep.pairs.is_empty() {
        cfg.sweep.pairs.iter().map(|[g, m]| (InstanceConfig { gamma: *g, mu: *m, ..base.clone() }, 1.0)).collect()
    } else {
        cfg.sweep
            .lambda_scales
            .iter()
            .map(|s| (InstanceConfig { lambda0: base.lambda0 * s, ..base.clone() }, *s))
            .collect()
    };
    let results: Vec<Result<RunOutcome>> =
        axis.par_iter().map(|(ic, _)| run_with(ic, &cfg.solver, Some(&cfg.analysis))).collect();
    let mut t = Table::new("sweep", SWEEP_COLUMNS);
    let mut statuses = Vec::new();
    for (k, ((ic, scale), res)) in axis.iter().zip(&results).enumerate() {
        let kappa = deadcore::kappa(ic.gamma, ic.mu).ok();
        let mut row = vec![k.to_string(), num(ic.gamma), num(ic.mu), num(ic.lambda0), num(*scale), opt(kappa)];
        match res {
            Ok(o) => {
                let m = &o.measurements;
                let status = if o.report.converged { "ok".to_string() } else { "not_converged".to_string() };
                row.extend([
                    opt(m.growth.as_ref().map(|f| f.exponent_hat)),
                    opt(m.nondegeneracy.as_ref().map(|n| n.constant)),
                    opt(m.density_min),
                    opt(m.porosity),
                    num(o.report.dead_core_volume_fraction),
                    o.report.iterations.to_string(),
                    o.report.converged.to_string(),
                    o.bracket_violations.to_string(),
                    status.clone(),
                ]);
                statuses.push(status);
            }
            Err(e) => {
                let status = format!("error: {e}");
                row.extend(std::iter::repeat_n(String::new(), 8).chain([status.clone()]));
                statuses.push(status);
            }
        }
        t.push(row);
    }
    let mut b = Bundle::with_summary(&serde_json::json!({
        "command": "sweep",
        "seed": cfg.seed,
        "config": cfg.recorded(),
        "instances": t.rows.len(),
        "statuses": statuses,
    }));
    b.tables.push(t);
    b
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleRow {
    pub big_r: f64,
    pub c: f64,
    pub n: usize,
    pub h: f64,
    pub sup_inner: Option<f64>,
    pub profile_inner: f64,
    pub comparison_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub bracket_violations: usize,
    pub status: String,
    #[serde(skip)]
    pub nondegeneracy: Option<f64>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Solves on `B_R` with data `c Θ |x|^κ` for every `(R, c)` and records the
/// sup over the inner ball.
pub fn liouville_experiment(cfg: &ExperimentConfig, radii: &[f64], cs: &[f64]) -> Result<Vec<LiouvilleRow>> {
    let ic = &cfg.instance;
    let kappa = deadcore::kappa(ic.gamma, ic.mu)?;
    let theta = theta_radial_exact(ic.dim as u32, ic.lambda0, ic.gamma, ic.mu)?;
    let r_in = cfg.liouville.inner_radius;
    let jobs: Vec<(f64, f64)> = radii.iter().flat_map(|&r| cs.iter().map(move |&c| (r, c))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(big_r, c)| {
            let inst = InstanceConfig {
                half_width: big_r,
                domain: DomainShape::Ball,
                boundary: BoundaryConfig::ExactProfile { scale: c, r0: 0.0 },
                ..ic.clone()
            };
            let shrink = big_r * (1.0 - c.powf(1.0 / kappa));
            let mut row = LiouvilleRow {
                big_r,
                c,
                n: inst.n,
                h: 2.0 * big_r / (inst.n - 1) as f64,
                sup_inner: None,
                profile_inner: theta * r_in.powf(kappa),
                comparison_bound: theta * (r_in - shrink).max(0.0).powf(kappa),
                iterations: 0,
                converged: false,
                bracket_violations: 0,
                status: "ok".into(),
                nondegeneracy: None,
                seconds: 0.0,
            };
            match run_with(&inst, &cfg.solver, None) {
                Ok(o) => {
                    row.sup_inner = sup_over_ball(&o.report.u, ic.center, r_in).ok();
                    row.iterations = o.report.iterations;
                    row.converged = o.report.converged;
                    row.bracket_violations = o.bracket_violations;
                    row.seconds = o.report.wall_seconds;
                    if !o.report.converged {
                        row.status = "not_converged".into();
                    }
                    let a = AnalysisConfig { r_max: r_in / 2.0, ..Default::default() };
                    let m = measure(&o.instance, &o.report, &a, cfg.solver.tol, ic.center);
                    row.nondegeneracy = m.nondegeneracy.map(|n| n.constant);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    Ok(rows)
}

pub const LIOUVILLE_COLUMNS: &[&str] = &[
    "big_r",
    "c",
    "n",
    "h",
    "sup_inner",
    "profile_inner",
    "comparison_bound",
    "iterations",
    "converged",
    "bracket_violations",
    "status",
];

pub fn liouville_bundle(cfg: &ExperimentConfig, rows: &[LiouvilleRow]) -> Bundle {
    let mut t = Table::new("liouville", LIOUVILLE_COLUMNS);
    for r in rows {
        t.push(vec![
            num(r.big_r),
            num(r.c),
            r.n.to_string(),
            num(r.h),
            opt(r.sup_inner),
            num(r.profile_inner),
            num(r.comparison_bound),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.bracket_violations.to_string(),
            r.status.clone(),
        ]);
    }
    let mut b = Bundle::with_summary(&serde_json::json!({
        "command": "liouville",
        "seed": cfg.seed,
        "config": cfg.recorded(),
        "rows": rows,
    }));
    b.tables.push(t);
    b
}

#[derive(Debug, Clone, Serialize)]
pub struct BorderlineRow {
    pub role: &'static str,
    pub gamma: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub min_u: f64,
    pub eps_fb: f64,
    pub branch: &'static str,
    pub dead_core_fraction: f64,
    pub r0_hand: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub bracket_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BorderlineReport {
    pub borderline: BorderlineRow,
    pub twin: BorderlineRow,
    /// The borderline instance lands on one side of the dichotomy, on the
    /// side its boundary data dictate.
    pub dichotomy_holds: bool,
    #[serde(skip)]
    pub seconds: f64,
}

/// Hand value of the 1D dead-core radius for the `μ = 0` twin on `(-L, L)`
/// with constant data `g`: `L - (g/Θ)^{1/κ}`, clamped at 0.
pub fn hand_dead_core_radius(lambda0: f64, gamma: f64, g: f64, half_width: f64) -> Result<f64> {
    let theta = theta_radial_exact(1, lambda0, gamma, 0.0)?;
    let kappa = deadcore::kappa(gamma, 0.0)?;
    Ok((half_width - (g / theta).powf(1.0 / kappa)).max(0.0))
}

pub fn borderline_experiment(cfg: &ExperimentConfig) -> Result<BorderlineReport> {
    let ic = &cfg.instance;
    if (ic.mu - (ic.gamma + 1.0)).abs() > 1e-12 {
        return Err(CliError::Invalid(format!("borderline needs mu = gamma + 1, got gamma {} mu {}", ic.gamma, ic.mu)));
    }
    let g = match ic.boundary {
        BoundaryConfig::Constant { value } if value >= 0.0 => value,
        _ => return Err(CliError::Invalid("borderline needs constant non-negative boundary data".into())),
    };
    let twin_cfg = InstanceConfig { mu: 0.0, ..ic.clone() };
    let eps = cfg.analysis.eps_fb.unwrap_or(100.0 * cfg.solver.tol);
    let mut seconds = 0.0;
    let mut row = |role: &'static str, c: &InstanceConfig| -> Result<BorderlineRow> {
        let o = run_with(c, &cfg.solver, None)?;
        seconds += o.report.wall_seconds;
        let max_u = (0..o.report.u.grid().len())
            .filter(|&i| is_interior(&o.instance, i))
            .map(|i| o.report.u.get(i))
            .fold(0.0, f64::max);
        let branch = if max_u <= eps {
            "zero"
        } else if o.min_u > eps {
            "positive"
        } else {
            "mixed"
        };
        let r0_hand = if c.dim == 1 && c.mu == 0.0 { Some(hand_dead_core_radius(c.lambda0, c.gamma, g, c.half_width)?) } else { None };
        Ok(BorderlineRow {
            role,
            gamma: c.gamma,
            mu: c.mu,
            lambda0: c.lambda0,
            min_u: o.min_u,
            eps_fb: eps,
            branch,
            dead_core_fraction: o.report.dead_core_volume_fraction,
            r0_hand,
            iterations: o.report.iterations,
            converged: o.report.converged,
            bracket_violations: o.bracket_violations,
        })
    };
    let borderline = row("borderline", ic)?;
    let twin = row("twin", &twin_cfg)?;
    let expected = if g > 0.0 { "positive" } else { "zero" };
    let dichotomy_holds = borderline.branch == expected;
    Ok(BorderlineReport { borderline, twin, dichotomy_holds, seconds })
}

pub const BORDERLINE_COLUMNS: &[&str] = &[
    "role",
    "gamma",
    "mu",
    "lambda0",
    "min_u",
    "eps_fb",
    "branch",
    "dead_core_fraction",
    "r0_hand",
    "iterations",
    "converged",
    "bracket_violations",
];

pub fn borderline_bundle(cfg: &ExperimentConfig, rep: &BorderlineReport) -> Bundle {
    let mut t = Table::new("borderline", BORDERLINE_COLUMNS);
    for r in [&rep.borderline, &rep.twin] {
        t.push(vec![
            r.role.to_string(),
            num(r.gamma),
            num(r.mu),
            num(r.lambda0),
            num(r.min_u),
            num(r.eps_fb),
            r.branch.to_string(),
            num(r.dead_core_fraction),
            opt(r.r0_hand),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.bracket_violations.to_string(),
        ]);
    }
    let mut b = Bundle::with_summary(&serde_json::json!({
        "command": "borderline",
        "seed": cfg.seed,
        "config": cfg.recorded(),
        "report": rep,
    }));
    b.tables.push(t);
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(n: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.instance.dim = 1;
        c.instance.n = n;
        c.instance.domain = DomainShape::Box;
        c.analysis.r_max = 0.5;
        c
    }

    #[test]
    fn minimal_one_d_run_recovers_exponent_two() {
        let cfg = one_d(129);
        let o = run(&cfg).unwrap();
        let f = o.measurements.growth.as_ref().unwrap();
        assert!((f.exponent_hat - 2.0).abs() < 0.05, "{}", f.exponent_hat);
        let b = run_bundle("fit", &cfg, &o, false);
        let csv = b.tables[0].to_csv();
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        let col = header.iter().position(|h| *h == "exponent_hat").unwrap();
        let v: f64 = csv.lines().nth(1).unwrap().split(',').nth(col).unwrap().parse().unwrap();
        assert!((v - 2.0).abs() < 0.05);
        assert!(run_checks(&o).iter().all(|c| c.passed));
    }

    #[test]
    fn empty_sweep_axis_gives_header_only() {
        let cfg = one_d(33);
        let b = sweep(&cfg);
        assert_eq!(b.tables[0].to_csv().lines().count(), 1);
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let mut cfg = one_d(33);
        cfg.sweep.pairs = vec![[0.0, 0.0], [-2.0, 0.0], [1.0, 0.0]];
        let b = sweep(&cfg);
        let t = &b.tables[0];
        assert_eq!(t.rows.len(), 3);
        let status = t.columns.iter().position(|c| *c == "status").unwrap();
        assert_eq!(t.rows[0][status], "ok");
        assert!(t.rows[1][status].starts_with("error"));
        assert_eq!(t.rows[2][status], "ok");
        assert_eq!(t.rows[2][5], "1.5");
    }

    #[test]
    fn lambda_sweep_dead_core_is_monotone() {
        let mut cfg = one_d(65);
        cfg.instance.boundary = BoundaryConfig::Constant { value: 0.2 };
        cfg.sweep.lambda_scales = vec![1.0, 4.0, 16.0];
        let b = sweep(&cfg);
        let t = &b.tables[0];
        let col = t.columns.iter().position(|c| *c == "dead_core_fraction").unwrap();
        let v: Vec<f64> = t.rows.iter().map(|r| r[col].parse().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
        assert!(v[2] > 0.0);
    }

    #[test]
    fn zero_data_gives_zero_liouville_column() {
        let mut cfg = ExperimentConfig::default();
        cfg.instance.dim = 1;
        cfg.instance.n = 33;
        let rows = liouville_experiment(&cfg, &[4.0], &[0.0]).unwrap();
        assert_eq!(rows[0].sup_inner, Some(0.0));
    }

    #[test]
    fn borderline_zero_data_is_zero_branch() {
        let mut cfg = one_d(33);
        cfg.instance.mu = 1.0;
        cfg.instance.boundary = BoundaryConfig::Constant { value: 0.0 };
        let rep = borderline_experiment(&cfg).unwrap();
        assert_eq!(rep.borderline.branch, "zero");
        assert!(rep.dichotomy_holds);
    }

    #[test]
    fn borderline_rejects_non_borderline_exponent() {
        let cfg = one_d(33);
        assert_eq!(borderline_experiment(&cfg).unwrap_err().exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn hand_radius_matches_worked_value() {
        let r0 = hand_dead_core_radius(25.0, 0.0, 1.0, 1.0).unwrap();
        assert!((r0 - (1.0 - (2.0f64 / 25.0).sqrt())).abs() < 1e-12);
    }
}
