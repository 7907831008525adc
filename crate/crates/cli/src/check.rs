//! The acceptance suite. Every criterion produces a verdict, a detail line
//! and tables; the solve log feeds the cross-cutting criteria (the Perron
//! bracket on every solve, non-degeneracy on every instance with a growth
//! exponent). Reported files carry no timings so reruns are byte-identical.

use std::time::Instant;

use deadcore::analysis::{dyadic_radii, extract_free_boundary, default_eps_fb, porosity_constant};
use deadcore::radial::{default_sample_radii, radial_residual, theta_radial_exact, RadialProfile};
use deadcore::solver::check_comparison;
use deadcore::{solve_dirichlet, BoundaryData, ProblemParams, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{AnalysisConfig, BoundaryConfig, DomainShape, ExperimentConfig, Format, InstanceConfig, LiouvilleConfig};
use crate::emit::{num, opt, validate_csv, validate_svg, Bundle, Plot, Table};
use crate::error::Result;
use crate::experiments::{
    borderline_experiment, bracket_violations, density_min, liouville_experiment, measure, run_with, RunOutcome,
};
use crate::instance::build;

pub const ALL: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub const GROWTH_PAIRS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (2.0, 1.0)];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("criterion {:>2} {:<24} {}  {}", self.criterion, self.name, if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

/// One solve seen by the suite.
#[derive(Debug, Clone)]
struct LogEntry {
    label: String,
    bracket_violations: usize,
    /// `min_r sup u / r^κ` where a growth exponent and point exist.
    nondegeneracy: Option<f64>,
}

#[derive(Debug, Default)]
struct Part {
    results: Vec<CriterionResult>,
    tables: Vec<Table>,
    plots: Vec<Plot>,
    log: Vec<LogEntry>,
}

fn verdict(criterion: u8, name: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { criterion, name, passed, detail }
}

fn fmt_list(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", s.join(", "))
}

fn solver(cfg: &ExperimentConfig) -> SolverConfig {
    cfg.solver.clone()
}

fn log_outcome(label: String, o: &RunOutcome) -> LogEntry {
    LogEntry {
        label,
        bracket_violations: o.bracket_violations,
        nondegeneracy: o.measurements.nondegeneracy.as_ref().map(|n| n.constant),
    }
}

fn only_at(x0: [f64; 2], r_max: f64) -> AnalysisConfig {
    AnalysisConfig { x0: Some(x0), r_max, levels: 24, density: false, porosity: false, ..Default::default() }
}

/// Exact 1D reproduction of `x²/2` and its observed order.
fn exact_1d(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut t = Table::new("c01_exact_1d", &["n", "h", "max_error", "error_bound", "order", "seconds_ok"]);
    let mut errors = Vec::new();
    let mut ok = true;
    let mut failures = Vec::new();
    for n in [129usize, 257, 513] {
        let ic = InstanceConfig {
            dim: 1,
            n,
            domain: DomainShape::Box,
            boundary: BoundaryConfig::Constant { value: 0.5 },
            ..Default::default()
        };
        let t0 = Instant::now();
        match run_with(&ic, &solver(cfg), Some(&only_at([0.0, 0.0], 0.5))) {
            Ok(o) => {
                let secs_ok = t0.elapsed().as_secs_f64() <= 10.0;
                let h = o.instance.grid().h();
                let err = o.report.u.values().iter().enumerate()
                    .map(|(i, v)| (v - 0.5 * o.report.u.grid().coord(i)[0].powi(2)).abs())
                    .fold(0.0, f64::max);
                let order = errors.last().map(|&e: &f64| (e / err).log2());
                ok &= o.report.converged && err <= 2.0 * h * h && secs_ok;
                if let Some(p) = order {
                    ok &= p >= 1.8;
                }
                t.push(vec![n.to_string(), num(h), num(err), num(2.0 * h * h), opt(order), secs_ok.to_string()]);
                errors.push(err);
                part.log.push(log_outcome(format!("c01 n={n}"), &o));
            }
            Err(e) => {
                ok = false;
                failures.push(format!("n={n}: {e}"));
            }
        }
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mut detail = format!("max errors {} orders {}", fmt_list(&errors), fmt_list(&orders));
    if !errors.is_empty() && errors.iter().all(|&e| e <= 100.0 * cfg.solver.tol) {
        // The three-point scheme is exact on quadratics, so only the solver
        // tolerance is left and the ratios carry no order.
        detail.push_str("; errors at the solver tolerance floor");
    }
    if !failures.is_empty() {
        detail.push_str(&format!(" failures: {}", failures.join("; ")));
    }
    part.results.push(verdict(1, "exact_1d", ok, detail));
    part.tables.push(t);
    part
}

/// Analytic residual of the exact radial profiles.
fn radial_oracles() -> Part {
    let mut part = Part::default();
    let mut t = Table::new("c02_radial_residual", &["dim", "gamma", "mu", "r0", "theta_exact", "residual_max"]);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (gamma, mu) in GROWTH_PAIRS {
        for dim in [1usize, 2] {
            // A shifted profile solves the equation only in 1D; in 2D the
            // curvature term (N-1)/r no longer matches.
            let shifts: &[f64] = if dim == 1 { &[0.0, 0.5] } else { &[0.0] };
            for &r0 in shifts {
                let p = ProblemParams::laplacian(dim, gamma, mu, 1.0);
                match RadialProfile::exact(dim, 1.0, gamma, mu, r0, [0.0, 0.0]) {
                    Ok(prof) => {
                        let res = radial_residual(&prof, &p, &default_sample_radii(r0));
                        ok &= res <= 1e-10;
                        worst = worst.max(res);
                        t.push(vec![dim.to_string(), num(gamma), num(mu), num(r0), num(prof.theta), num(res)]);
                    }
                    Err(_) => ok = false,
                }
            }
        }
    }
    part.results.push(verdict(2, "radial_oracles", ok, format!("worst residual {worst:.3e} over {} profiles", t.rows.len())));
    part.tables.push(t);
    part
}

/// Growth, gradient decay and non-degeneracy on the exact-profile instances.
fn growth_suite(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut t = Table::new(
        "c03_growth",
        &[
            "gamma",
            "mu",
            "kappa",
            "exponent_hat",
            "gradient_slope",
            "gradient_slope_theory",
            "nondegeneracy",
            "theta_exact",
            "nondegeneracy_variation",
            "max_error",
            "iterations",
            "seconds_ok",
            "status",
        ],
    );
    let (mut ok3, mut ok4, mut ok5) = (true, true, true);
    let (mut d3, mut d4, mut d5) = (Vec::new(), Vec::new(), Vec::new());
    for (gamma, mu) in GROWTH_PAIRS {
        let ic = InstanceConfig {
            gamma,
            mu,
            n: 257,
            half_width: 2.0,
            domain: DomainShape::Ball,
            boundary: BoundaryConfig::ExactProfile { scale: 1.0, r0: 0.0 },
            ..Default::default()
        };
        let kappa = deadcore::kappa(gamma, mu).expect("growth pairs are below the borderline");
        let theta = theta_radial_exact(2, 1.0, gamma, mu).expect("valid exponents");
        let t0 = Instant::now();
        let tag = format!("({gamma},{mu})");
        match run_with(&ic, &solver(cfg), Some(&only_at([0.0, 0.0], 0.5))) {
            Ok(o) => {
                let secs_ok = t0.elapsed().as_secs_f64() <= 300.0;
                let m = &o.measurements;
                let alpha = m.growth.as_ref().map(|f| f.exponent_hat);
                let slope = m.gradient.as_ref().map(|f| f.exponent_hat);
                let nd = m.nondegeneracy.as_ref().map(|n| n.constant);
                let var = m.nondegeneracy.as_ref().map(|n| n.variation());
                let g_ok = o.report.converged && secs_ok && alpha.is_some_and(|a| (a - kappa).abs() <= 0.10 * kappa);
                let s_ok = slope.is_some_and(|s| (s - (kappa - 1.0)).abs() <= 0.15 * (kappa - 1.0));
                let n_ok = nd.is_some_and(|c| c >= 0.25 * theta) && var.is_some_and(|v| v <= 2.0);
                ok3 &= g_ok;
                ok4 &= s_ok;
                ok5 &= n_ok;
                d3.push(format!("{tag} {}", opt(alpha.map(|a| (a * 1e4).round() / 1e4))));
                d4.push(format!("{tag} {}", opt(slope.map(|a| (a * 1e4).round() / 1e4))));
                d5.push(format!("{tag} {}", opt(nd.map(|c| (c / theta * 1e4).round() / 1e4))));
                t.push(vec![
                    num(gamma),
                    num(mu),
                    num(kappa),
                    opt(alpha),
                    opt(slope),
                    num(kappa - 1.0),
                    opt(nd),
                    num(theta),
                    opt(var),
                    opt(o.max_error),
                    o.report.iterations.to_string(),
                    secs_ok.to_string(),
                    if o.report.converged { "ok".into() } else { "not_converged".into() },
                ]);
                if let Some(f) = &m.growth {
                    part.plots.push(Plot::from_fit(&format!("c03_growth_g{gamma}_m{mu}"), &format!("growth {tag}"), "sup u", f));
                }
                if let Some(f) = &m.gradient {
                    part.plots.push(Plot::from_fit(&format!("c04_gradient_g{gamma}_m{mu}"), &format!("gradient {tag}"), "sup |Du|", f));
                }
                part.log.push(log_outcome(format!("c03 {tag}"), &o));
            }
            Err(e) => {
                ok3 = false;
                ok4 = false;
                ok5 = false;
                d3.push(format!("{tag} error: {e}"));
                let mut row = vec![num(gamma), num(mu), num(kappa)];
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(format!("error: {e}"));
                t.push(row);
            }
        }
    }
    part.results.push(verdict(3, "growth_exponent", ok3, format!("exponent_hat {} vs kappa 2, 1.5, 4, 2", d3.join(" "))));
    part.results.push(verdict(4, "gradient_decay", ok4, format!("slope {} vs 1, 0.5, 3, 1", d4.join(" "))));
    part.results.push(verdict(5, "nondegeneracy", ok5, format!("C/theta {}", d5.join(" "))));
    part.tables.push(t);
    part
}

/// Ordered boundary data must give ordered solutions.
fn comparison(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut t = Table::new(
        "c06_comparison",
        &["index", "dim", "gamma", "mu", "lambda0", "n", "violations", "max_excess", "status"],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = cfg.solver.tol;
    let mut total = 0usize;
    let mut ok = true;
    for k in 0..20 {
        let dim: usize = rng.gen_range(1..=2);
        let gamma: f64 = rng.gen_range(0.0..2.0);
        let mu: f64 = rng.gen_range(0.0..0.9) * (gamma + 1.0);
        let lambda0: f64 = rng.gen_range(0.5..20.0);
        let n = if dim == 1 { 65 } else { 33 };
        let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let (d, e): (f64, f64) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
        let ic = InstanceConfig {
            dim,
            gamma,
            mu,
            lambda0,
            n,
            domain: DomainShape::Box,
            boundary: BoundaryConfig::Constant { value: 0.0 },
            ..Default::default()
        };
        let low = move |x: [f64; 2]| (a + b * x[0] + c * x[1]).max(0.0);
        let high = move |x: [f64; 2]| low(x) + d + e * 0.5 * (1.0 + x[0]);
        let solved = build(&ic).and_then(|inst| {
            let p1 = inst.problem.with_boundary(BoundaryData::from_fn(low));
            let p2 = inst.problem.with_boundary(BoundaryData::from_fn(high));
            let r1 = solve_dirichlet(&p1, &cfg.solver)?;
            let r2 = solve_dirichlet(&p2, &cfg.solver)?;
            Ok((r1, r2))
        });
        let mut row = vec![k.to_string(), dim.to_string(), num(gamma), num(mu), num(lambda0), n.to_string()];
        match solved {
            Ok((r1, r2)) => {
                let rep = check_comparison(&r1.u, &r2.u, 10.0 * tol).expect("same grid");
                total += rep.violations.len();
                ok &= r1.converged && r2.converged;
                for (i, r) in [&r1, &r2].into_iter().enumerate() {
                    part.log.push(LogEntry {
                        label: format!("c06 pair {k} side {i}"),
                        bracket_violations: bracket_violations(r, tol),
                        nondegeneracy: None,
                    });
                }
                let status = if r1.converged && r2.converged { "ok" } else { "not_converged" };
                row.extend([rep.violations.len().to_string(), num(rep.max_excess), status.to_string()]);
            }
            Err(e) => {
                ok = false;
                row.extend([String::new(), String::new(), format!("error: {e}")]);
            }
        }
        t.push(row);
    }
    ok &= total == 0;
    part.results.push(verdict(6, "comparison", ok, format!("{total} violations beyond 10 tol over 20 pairs (seed {})", cfg.seed)));
    part.tables.push(t);
    part
}

/// Collapse of `sup_{B_1} u` for `c < 1` and the exact profile for `c = 1`.
fn liouville(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut c = cfg.clone();
    c.instance = InstanceConfig { n: 129, ..Default::default() };
    c.liouville = LiouvilleConfig::default();
    let t0 = Instant::now();
    let rows = match liouville_experiment(&c, &[4.0, 8.0, 16.0], &[0.5, 1.0]) {
        Ok(r) => r,
        Err(e) => {
            part.results.push(verdict(8, "liouville", false, format!("error: {e}")));
            return part;
        }
    };
    let secs_ok = t0.elapsed().as_secs_f64() <= 600.0;
    let half: Vec<f64> = rows.iter().filter(|r| r.c == 0.5).map(|r| r.sup_inner.unwrap_or(f64::NAN)).collect();
    let full: Vec<(f64, f64)> = rows.iter().filter(|r| r.c == 1.0).map(|r| (r.sup_inner.unwrap_or(f64::NAN), r.profile_inner)).collect();
    let decreasing = half.windows(2).all(|w| w[1] <= w[0]) && half.last().is_some_and(|v| *v <= 1e-3);
    let matches = full.iter().all(|(s, p)| (s - p).abs() <= 0.2 * p);
    let converged = rows.iter().all(|r| r.converged);
    let ok = decreasing && matches && converged && secs_ok;
    let full_s: Vec<f64> = full.iter().map(|f| f.0).collect();
    part.results.push(verdict(
        8,
        "liouville",
        ok,
        format!("c=0.5 sup_B1 {} ; c=1 sup_B1 {} vs profile {}", fmt_list(&half), fmt_list(&full_s), full.first().map_or(String::new(), |f| num(f.1))),
    ));
    for r in &rows {
        part.log.push(LogEntry {
            label: format!("c08 R={} c={}", r.big_r, r.c),
            bracket_violations: r.bracket_violations,
            nondegeneracy: r.nondegeneracy,
        });
    }
    let mut b = crate::experiments::liouville_bundle(&c, &rows);
    part.tables.append(&mut b.tables);
    if let Some(t) = part.tables.last_mut() {
        t.name = "c08_liouville".into();
    }
    part
}

/// The borderline instance stays positive; its `μ = 0` twin grows a dead core.
fn borderline(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut t = Table::new(
        "c09_borderline",
        &["dim", "role", "mu", "min_u", "eps_fb", "branch", "dead_core_fraction", "r0_hand", "converged"],
    );
    let mut ok = true;
    let mut details = Vec::new();
    for (dim, n) in [(1usize, 257usize), (2, 129)] {
        let mut c = cfg.clone();
        c.instance = InstanceConfig {
            dim,
            n,
            gamma: 0.0,
            mu: 1.0,
            lambda0: 25.0,
            domain: DomainShape::Box,
            boundary: BoundaryConfig::Constant { value: 1.0 },
            ..Default::default()
        };
        c.analysis.eps_fb = None;
        match borderline_experiment(&c) {
            Ok(rep) => {
                let b = &rep.borderline;
                let tw = &rep.twin;
                let mut here = b.branch == "positive" && b.min_u > b.eps_fb && b.converged && tw.converged;
                if dim == 1 {
                    let r0 = tw.r0_hand.unwrap_or(f64::NAN);
                    here &= (tw.dead_core_fraction - r0).abs() <= 0.15 * r0;
                    details.push(format!("1D min_u {:.4e} dead fraction {:.4} vs r0 {:.4}", b.min_u, tw.dead_core_fraction, r0));
                } else {
                    here &= tw.dead_core_fraction > 0.0;
                    details.push(format!("2D min_u {:.4e} dead fraction {:.4}", b.min_u, tw.dead_core_fraction));
                }
                ok &= here;
                for r in [b, tw] {
                    t.push(vec![
                        dim.to_string(),
                        r.role.to_string(),
                        num(r.mu),
                        num(r.min_u),
                        num(r.eps_fb),
                        r.branch.to_string(),
                        num(r.dead_core_fraction),
                        opt(r.r0_hand),
                        r.converged.to_string(),
                    ]);
                    part.log.push(LogEntry {
                        label: format!("c09 {dim}D {}", r.role),
                        bracket_violations: r.bracket_violations,
                        nondegeneracy: None,
                    });
                }
            }
            Err(e) => {
                ok = false;
                details.push(format!("{dim}D error: {e}"));
            }
        }
    }
    part.results.push(verdict(9, "borderline", ok, details.join("; ")));
    part.tables.push(t);
    part
}

/// Radial dead-core instances for density and porosity.
pub const DEAD_CORE_INSTANCES: [(f64, f64, f64, f64); 2] = [(0.0, 0.0, 10.0, 1.0), (0.0, 0.5, 16.0, 0.0625)];

fn density_porosity(cfg: &ExperimentConfig) -> Part {
    let mut part = Part::default();
    let mut t = Table::new(
        "c10_density_porosity",
        &["gamma", "mu", "lambda0", "n", "h", "r0", "fb_nodes", "density_min", "porosity", "status"],
    );
    let mut ok = true;
    let mut details = Vec::new();
    for (gamma, mu, lambda0, g) in DEAD_CORE_INSTANCES {
        let mut eps = Vec::new();
        for n in [129usize, 257] {
            let ic = InstanceConfig {
                gamma,
                mu,
                lambda0,
                n,
                domain: DomainShape::Ball,
                boundary: BoundaryConfig::Constant { value: g },
                ..Default::default()
            };
            let mut row = vec![num(gamma), num(mu), num(lambda0), n.to_string()];
            let o = match run_with(&ic, &solver(cfg), None) {
                Ok(o) => o,
                Err(e) => {
                    ok = false;
                    row.extend(std::iter::repeat_n(String::new(), 5).chain([format!("error: {e}")]));
                    t.push(row);
                    continue;
                }
            };
            let grid = *o.instance.grid();
            let h = grid.h();
            let fb = extract_free_boundary(&o.report.u, default_eps_fb(cfg.solver.tol, h, o.instance.kappa));
            if fb.is_empty() {
                ok = false;
                row.extend([num(h), String::new(), "0".into(), String::new(), String::new(), "no free boundary".into()]);
                t.push(row);
                continue;
            }
            let r0 = fb.fb_nodes.iter().map(|&i| deadcore::grid::dist(grid.coord(i), [0.0, 0.0], 2)).sum::<f64>() / fb.len() as f64;
            let rhos = dyadic_radii(r0 / 2.0, 24, h);
            let dens = density_min(&o.report.u, &fb, &rhos, 1);
            let por = porosity_constant(&fb, &o.report.u, &rhos, 4).ok().map(|p| p.epsilon);
            ok &= o.report.converged && dens.is_some_and(|d| d >= 0.25) && por.is_some_and(|p| p >= 0.05);
            eps.push(por.unwrap_or(f64::NAN));
            let a = AnalysisConfig { r_max: r0 / 2.0, density: false, porosity: false, ..Default::default() };
            let m = measure(&o.instance, &o.report, &a, cfg.solver.tol, [0.0, 0.0]);
            part.log.push(LogEntry {
                label: format!("c10 ({gamma},{mu}) n={n}"),
                bracket_violations: o.bracket_violations,
                nondegeneracy: m.nondegeneracy.map(|n| n.constant),
            });
            details.push(format!("({gamma},{mu}) n={n} r0 {r0:.3} density {} porosity {}", opt(dens.map(|d| (d * 1e4).round() / 1e4)), opt(por.map(|p| (p * 1e4).round() / 1e4))));
            row.extend([num(h), num(r0), fb.len().to_string(), opt(dens), opt(por), "ok".into()]);
            t.push(row);
        }
        let stable = eps.len() == 2 && eps[0] / eps[1] <= 2.0 && eps[1] / eps[0] <= 2.0;
        ok &= stable;
    }
    part.results.push(verdict(10, "density_porosity", ok, details.join("; ")));
    part.tables.push(t);
    part
}

fn bracket_summary(log: &[LogEntry]) -> CriterionResult {
    let bad: Vec<&LogEntry> = log.iter().filter(|e| e.bracket_violations > 0).collect();
    let detail = if bad.is_empty() {
        format!("{} solves inside [u_flat - 10 tol, u_sharp + 10 tol]", log.len())
    } else {
        let names: Vec<String> = bad.iter().map(|e| format!("{} ({})", e.label, e.bracket_violations)).collect();
        format!("violations in {}", names.join(", "))
    };
    verdict(7, "perron_bracket", bad.is_empty() && !log.is_empty(), detail)
}

fn nondegeneracy_everywhere(prior: CriterionResult, log: &[LogEntry]) -> CriterionResult {
    let measured: Vec<&LogEntry> = log.iter().filter(|e| e.nondegeneracy.is_some()).collect();
    let bad: Vec<String> = measured.iter().filter(|e| !(e.nondegeneracy.unwrap() > 0.0)).map(|e| e.label.clone()).collect();
    let passed = prior.passed && bad.is_empty();
    let mut detail = format!("{}; positive on {}/{} measured suite instances", prior.detail, measured.len() - bad.len(), measured.len());
    if !bad.is_empty() {
        detail.push_str(&format!(" (vanishing: {})", bad.join(", ")));
    }
    verdict(5, prior.name, passed, detail)
}

/// Outcome of a suite run.
#[derive(Debug, Clone)]
pub struct CheckRun {
    pub results: Vec<CriterionResult>,
    pub bundle: Bundle,
}

impl CheckRun {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn deterministic_parts(cfg: &ExperimentConfig) -> Vec<Part> {
    vec![exact_1d(cfg), radial_oracles(), comparison(cfg), borderline(cfg)]
}

/// Runs the selected criteria. Criteria 4 and 5 share the solves of 3;
/// criterion 7 covers every solve of the run.
pub fn run_suite(cfg: &ExperimentConfig, selection: &[u8]) -> CheckRun {
    let wants = |k: u8| selection.contains(&k);
    let mut parts: Vec<Part> = Vec::new();
    if wants(1) {
        parts.push(exact_1d(cfg));
    }
    if wants(2) {
        parts.push(radial_oracles());
    }
    if wants(3) || wants(4) || wants(5) {
        parts.push(growth_suite(cfg));
    }
    if wants(6) {
        parts.push(comparison(cfg));
    }
    if wants(8) {
        parts.push(liouville(cfg));
    }
    if wants(9) {
        parts.push(borderline(cfg));
    }
    if wants(10) {
        parts.push(density_porosity(cfg));
    }
    let log: Vec<LogEntry> = parts.iter().flat_map(|p| p.log.clone()).collect();
    let mut results: Vec<CriterionResult> = parts.iter().flat_map(|p| p.results.clone()).collect();
    if let Some(r5) = results.iter_mut().find(|r| r.criterion == 5) {
        *r5 = nondegeneracy_everywhere(r5.clone(), &log);
    }
    if wants(7) {
        results.push(bracket_summary(&log));
    }
    results.retain(|r| wants(r.criterion));

    let mut bundle = Bundle::default();
    for p in parts {
        bundle.tables.extend(p.tables);
        bundle.plots.extend(p.plots);
    }
    if wants(11) {
        results.push(formats_and_determinism(cfg, &bundle));
    }
    results.sort_by_key(|r| r.criterion);
    let mut table = Table::new("check", &["criterion", "name", "passed", "detail"]);
    for r in &results {
        table.push(vec![r.criterion.to_string(), r.name.to_string(), r.passed.to_string(), r.detail.clone()]);
    }
    bundle.tables.insert(0, table);
    bundle.summary = serde_json::json!({
        "command": "check",
        "seed": cfg.seed,
        "config": cfg.recorded(),
        "criteria": results,
        "passed": results.iter().all(|r| r.passed),
    });
    CheckRun { results, bundle }
}

/// Every emitted CSV and SVG obeys the output contract, and a second
/// evaluation of the solver-backed criteria reproduces their tables byte for
/// byte.
fn formats_and_determinism(cfg: &ExperimentConfig, bundle: &Bundle) -> CriterionResult {
    let mut problems = Vec::new();
    for t in &bundle.tables {
        if let Err(e) = validate_csv(&t.to_csv()) {
            problems.push(format!("{}.csv: {e}", t.name));
        }
        if let Some(c) = t.columns.iter().find(|c| crate::emit::describe(c).is_none()) {
            problems.push(format!("{}.csv: column {c} undocumented", t.name));
        }
    }
    for p in &bundle.plots {
        if let Err(e) = validate_svg(&crate::emit::loglog_svg(p)) {
            problems.push(format!("{}.svg: {e}", p.name));
        }
    }
    let first: Vec<Table> = deterministic_parts(cfg).into_iter().flat_map(|p| p.tables).collect();
    let second: Vec<Table> = deterministic_parts(cfg).into_iter().flat_map(|p| p.tables).collect();
    let differing: Vec<String> =
        first.iter().zip(&second).filter(|(a, b)| a.to_csv() != b.to_csv()).map(|(a, _)| a.name.clone()).collect();
    if !differing.is_empty() {
        problems.push(format!("rerun differs in {}", differing.join(", ")));
    }
    let detail = if problems.is_empty() {
        format!("{} tables and {} plots conform; {} rerun tables identical", bundle.tables.len(), bundle.plots.len(), first.len())
    } else {
        problems.join("; ")
    };
    verdict(11, "determinism_formats", problems.is_empty(), detail)
}

/// Parses a comma-separated criterion list such as `1,2,9`.
pub fn parse_selection(s: &str) -> std::result::Result<Vec<u8>, String> {
    let mut v = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let k: u8 = part.parse().map_err(|_| format!("not a criterion number: {part}"))?;
        if !(1..=11).contains(&k) {
            return Err(format!("criterion {k} out of range 1..=11"));
        }
        v.push(k);
    }
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

pub fn emit_check(run: &CheckRun, cfg: &ExperimentConfig) -> Result<Vec<std::path::PathBuf>> {
    let formats: Vec<Format> = cfg.output.formats.clone();
    crate::emit::emit_to(&run.bundle, &cfg.output.dir, &formats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_parsing() {
        assert_eq!(parse_selection("9, 1,2,2").unwrap(), vec![1, 2, 9]);
        assert!(parse_selection("12").is_err());
        assert!(parse_selection("x").is_err());
    }

    #[test]
    fn radial_oracles_pass() {
        let p = radial_oracles();
        assert!(p.results[0].passed, "{}", p.results[0].detail);
        assert_eq!(p.tables[0].rows.len(), 12);
    }

    #[test]
    fn check_table_columns_are_documented() {
        let run = run_suite(&ExperimentConfig::default(), &[2]);
        for t in &run.bundle.tables {
            for c in &t.columns {
                assert!(crate::emit::describe(c).is_some(), "{}: {c}", t.name);
            }
        }
    }
}
