//! Artifact writers: RFC-4180 CSV with LF line endings, a small log-log SVG
//! plotter, a JSON summary and the data dictionary for every CSV column.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use deadcore::FitResult;
use serde::Serialize;

use crate::config::{Format, OutputConfig};
use crate::error::{CliError, Result};

/// One CSV file: a header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }
}

/// Shortest round-trip decimal representation; never locale dependent.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A log-log plot of measurements with an optional fitted power law.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub samples: Vec<(f64, f64)>,
    pub fit: Option<(f64, f64)>,
}

impl Plot {
    pub fn from_fit(name: &str, title: &str, y_label: &str, fit: &FitResult) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            x_label: "r".into(),
            y_label: y_label.into(),
            samples: fit.samples.clone(),
            fit: Some((fit.exponent_hat, fit.constant_hat)),
        }
    }
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

pub fn loglog_svg(plot: &Plot) -> String {
    let pts: Vec<(f64, f64)> =
        plot.samples.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.log10(), y.log10())).collect();
    let (x0, x1) = padded_range(pts.iter().map(|p| p.0));
    let (y0, y1) = padded_range(pts.iter().map(|p| p.1));
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&plot.title));
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = sx(d as f64);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">1e{d}</text>"#, H - BOTTOM + 18.0);
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = sy(d as f64);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="gray"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">1e{d}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 10.0, escape(&plot.x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&plot.y_label)
    );
    if let (Some((a, c)), false) = (plot.fit, pts.is_empty()) {
        if c > 0.0 {
            let (xa, xb) = padded_range(pts.iter().map(|p| p.0));
            let line: Vec<String> = [xa, xb].iter().map(|&x| format!("{:.2},{:.2}", sx(x), sy(c.log10() + a * x))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, line.join(" "));
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">slope {a:.4}</text>"#, LEFT + 8.0, TOP + 16.0);
        }
    }
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="firebrick"/>"#, sx(*x), sy(*y));
    }
    s.push_str("</svg>\n");
    s
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, Default)]
pub struct Bundle {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    pub summary: serde_json::Value,
}

impl Bundle {
    pub fn with_summary(summary: &impl Serialize) -> Self {
        Self { summary: serde_json::to_value(summary).expect("summary serializes"), ..Default::default() }
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes the bundle in the requested formats and returns the paths written.
/// The data dictionary accompanies the CSV files.
pub fn emit(bundle: &Bundle, out: &OutputConfig) -> Result<Vec<PathBuf>> {
    emit_to(bundle, &out.dir, &out.formats)
}

pub fn emit_to(bundle: &Bundle, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        for t in &bundle.tables {
            written.push(write(dir.join(format!("{}.csv", t.name)), &t.to_csv())?);
        }
        written.push(write(dir.join("data_dictionary.md"), &data_dictionary(&bundle.tables))?);
    }
    if formats.contains(&Format::Svg) {
        for p in &bundle.plots {
            written.push(write(dir.join(format!("{}.svg", p.name)), &loglog_svg(p))?);
        }
    }
    if formats.contains(&Format::Json) {
        let mut text = serde_json::to_string_pretty(&bundle.summary).expect("summary serializes");
        text.push('\n');
        written.push(write(dir.join("summary.json"), &text)?);
    }
    Ok(written)
}

/// Column meanings shared by every table.
const COLUMNS: &[(&str, &str)] = &[
    ("index", "zero-based row or instance index"),
    ("node", "flat grid node index (row-major, x fastest)"),
    ("x", "first coordinate of the node"),
    ("y", "second coordinate of the node (0 in 1D)"),
    ("u", "computed solution value"),
    ("u_flat", "lower Perron bracket value"),
    ("u_sharp", "upper Perron bracket value"),
    ("u_exact", "closed-form solution value when known, empty otherwise"),
    ("radius", "ball radius r of the measurement"),
    ("sup_u", "max of u over the closed ball B_r(x0)"),
    ("sup_grad", "max of the central-difference gradient norm over B_r(x0)"),
    ("fitted", "value of the fitted power law C r^alpha at this radius"),
    ("ratio", "sup_u / r^kappa"),
    ("dim", "space dimension"),
    ("gamma", "degeneracy exponent gamma"),
    ("mu", "absorption exponent mu"),
    ("lambda0", "absorption coefficient lambda0"),
    ("lambda_scale", "multiplier applied to the configured lambda0"),
    ("n", "nodes per axis"),
    ("h", "grid spacing"),
    ("kappa", "theoretical growth exponent (gamma+2)/(gamma+1-mu); empty when mu >= gamma+1"),
    ("exponent_hat", "fitted exponent of sup_{B_r} u against r"),
    ("constant_hat", "fitted prefactor of sup_{B_r} u against r"),
    ("gradient_slope", "fitted exponent of sup_{B_r} |Du| against r"),
    ("gradient_slope_theory", "theoretical gradient exponent (1+mu)/(gamma+1-mu)"),
    ("nondegeneracy", "min over radii of sup_{B_r} u / r^kappa"),
    ("nondegeneracy_variation", "largest over smallest sup_{B_r} u / r^kappa across radii"),
    ("theta_exact", "amplitude of the exact radial profile"),
    ("density_min", "smallest positivity fraction over sampled free-boundary nodes and radii"),
    ("porosity", "smallest relative hole radius over sampled free-boundary nodes and radii"),
    ("fb_nodes", "number of free-boundary nodes"),
    ("eps_fb", "threshold separating zero from positive values"),
    ("dead_core_fraction", "fraction of interior nodes with u at most 100 tol"),
    ("min_u", "minimum of u over interior nodes"),
    ("max_error", "max nodal difference to the closed-form solution"),
    ("iterations", "solver sweeps of the main solve"),
    ("converged", "whether the residual reached the tolerance"),
    ("residual", "final sup-norm residual"),
    ("bracket_violations", "nodes outside the Perron bracket by more than 10 tol"),
    ("status", "ok, or the error that stopped this instance"),
    ("big_r", "radius R of the domain B_R"),
    ("c", "boundary data multiplier c in g = c Theta R^kappa"),
    ("sup_inner", "max of u over the inner ball"),
    ("profile_inner", "exact profile maximum over the inner ball"),
    ("comparison_bound", "upper bound Theta (r_in - (1 - c^(1/kappa)) R)_+^kappa"),
    ("role", "borderline instance or its mu = 0 twin"),
    ("branch", "dichotomy branch: positive, zero, or mixed"),
    ("r0_hand", "hand-computed 1D dead-core radius, empty in 2D"),
    ("criterion", "acceptance criterion number"),
    ("name", "short criterion name"),
    ("passed", "true when the criterion holds"),
    ("detail", "measured quantities behind the verdict"),
    ("rho", "ball radius used for density"),
    ("density", "positivity fraction in B_rho"),
    ("violations", "nodes where u1 exceeds u2 by more than 10 tol"),
    ("max_excess", "largest u1 - u2 over interior nodes"),
    ("order", "observed convergence order log2(e_coarse / e_fine)"),
    ("error_bound", "allowed error 2 h^2"),
    ("residual_max", "max analytic residual over the sample radii"),
    ("r0", "dead-core radius"),
    ("seconds_ok", "whether the runtime limit held"),
];

pub fn describe(column: &str) -> Option<&'static str> {
    COLUMNS.iter().find(|c| c.0 == column).map(|c| c.1)
}

pub fn data_dictionary(tables: &[Table]) -> String {
    let mut s = String::from("# Data dictionary\n");
    for t in tables {
        let _ = write!(s, "\n## {}.csv\n\n| column | meaning |\n| --- | --- |\n", t.name);
        for c in &t.columns {
            let _ = writeln!(s, "| {c} | {} |", describe(c).unwrap_or("undocumented"));
        }
    }
    s
}

/// Checks a CSV file against the output contract: LF endings, header row,
/// rectangular rows and '.' decimals.
pub fn validate_csv(text: &str) -> std::result::Result<usize, String> {
    if text.contains('\r') {
        return Err("CR found; line endings must be LF".into());
    }
    if !text.ends_with('\n') {
        return Err("missing final newline".into());
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let width = r.headers().map_err(|e| e.to_string())?.len();
    if width == 0 {
        return Err("empty header".into());
    }
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != width {
            return Err(format!("row {rows} has {} fields, header has {width}", rec.len()));
        }
        for cell in rec.iter() {
            let looks_numeric = cell.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-');
            if looks_numeric && cell.contains(',') {
                return Err(format!("comma decimal in {cell:?}"));
            }
        }
        rows += 1;
    }
    Ok(rows)
}

pub fn validate_svg(text: &str) -> std::result::Result<(), String> {
    if !text.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\"") {
        return Err("missing svg root".into());
    }
    if !text.ends_with("</svg>\n") {
        return Err("unterminated svg".into());
    }
    if text.matches("<svg").count() != 1 {
        return Err("nested svg roots".into());
    }
    Ok(())
}
