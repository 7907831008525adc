//! Experiment configuration read from TOML. Every section and key has a
//! default; unknown keys are rejected so typos cannot silently fall back.

use std::path::{Path, PathBuf};

use deadcore::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed for randomized instance generation; echoed in every summary.
    pub seed: u64,
    pub instance: InstanceConfig,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub liouville: LiouvilleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_611,
            instance: InstanceConfig::default(),
            solver: SolverConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
            sweep: SweepConfig::default(),
            liouville: LiouvilleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceConfig {
    pub dim: usize,
    pub gamma: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub drift: [f64; 2],
    pub operator: OperatorConfig,
    /// Ellipticity bounds `[λ, Λ]` of the Pucci operators.
    pub ellipticity: [f64; 2],
    pub wide_frames: bool,
    /// Nodes per axis.
    pub n: usize,
    pub center: [f64; 2],
    /// Half side of the grid box; also the ball radius for `domain = "ball"`.
    pub half_width: f64,
    pub domain: DomainShape,
    pub boundary: BoundaryConfig,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            gamma: 0.0,
            mu: 0.0,
            lambda0: 1.0,
            drift: [0.0, 0.0],
            operator: OperatorConfig::Laplacian,
            ellipticity: [1.0, 1.0],
            wide_frames: false,
            n: 129,
            center: [0.0, 0.0],
            half_width: 1.0,
            domain: DomainShape::Ball,
            boundary: BoundaryConfig::ExactProfile { scale: 1.0, r0: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum OperatorConfig {
    Laplacian,
    PucciMinus,
    PucciPlus,
    TraceA { matrix: [[f64; 2]; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    Box,
    Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant { value: f64 },
    /// `scale` times the exact radial profile centred at the instance centre
    /// with dead-core radius `r0`.
    ExactProfile { scale: f64, r0: f64 },
    /// Drift-free exponential solution along an axis (borderline `μ = γ + 1`).
    Exponential { direction: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Point at which growth is measured; the instance centre when absent.
    pub x0: Option<[f64; 2]>,
    /// Largest regression radius.
    pub r_max: f64,
    /// Number of dyadic halvings of `r_max` (radii below `4h` are dropped).
    pub levels: usize,
    pub growth: bool,
    pub gradient: bool,
    pub nondegeneracy: bool,
    pub density: bool,
    pub porosity: bool,
    /// Every `stride`-th free-boundary node is sampled for density and porosity.
    pub fb_stride: usize,
    /// Free-boundary threshold; `max(100 tol, h^κ)` when absent.
    pub eps_fb: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            x0: None,
            r_max: 0.5,
            levels: 12,
            growth: true,
            gradient: true,
            nondegeneracy: true,
            density: true,
            porosity: true,
            fb_stride: 8,
            eps_fb: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Svg, Format::Json] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `(γ, μ)` pairs; takes precedence over `lambda_scales` when non-empty.
    pub pairs: Vec<[f64; 2]>,
    /// Multipliers applied to the instance `λ₀`.
    pub lambda_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiouvilleConfig {
    pub radii: Vec<f64>,
    pub c: Vec<f64>,
    pub inner_radius: f64,
}

impl Default for LiouvilleConfig {
    fn default() -> Self {
        Self { radii: vec![4.0, 8.0, 16.0], c: vec![0.5, 1.0], inner_radius: 1.0 }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// The configuration as written to `summary.json`. The output directory
    /// is left out so runs into different directories produce equal bytes.
    pub fn recorded(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.get_mut("output").and_then(|o| o.as_object_mut()) {
            o.remove("dir");
        }
        v
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config { path: origin.to_string(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(n) = o.grid {
            self.instance.n = n;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        self.validate()
    }

    /// Checks that do not need a grid; parameter validation proper happens
    /// when the instance is built.
    pub fn validate(&self) -> Result<()> {
        let i = &self.instance;
        if i.n < 3 {
            return Err(CliError::Invalid(format!("instance.n must be at least 3, got {}", i.n)));
        }
        if !(i.half_width > 0.0) {
            return Err(CliError::Invalid(format!("instance.half_width must be positive, got {}", i.half_width)));
        }
        if let BoundaryConfig::ExactProfile { scale, r0 } = i.boundary {
            if !(scale >= 0.0 && r0 >= 0.0) {
                return Err(CliError::Invalid("instance.boundary: scale and r0 must be non-negative".into()));
            }
        }
        self.solver.validate().map_err(|m| CliError::Invalid(format!("solver: {m}")))?;
        let a = &self.analysis;
        if !(a.r_max > 0.0) || a.levels == 0 || a.fb_stride == 0 {
            return Err(CliError::Invalid("analysis: r_max, levels and fb_stride must be positive".into()));
        }
        if self.liouville.radii.iter().any(|r| !(*r > self.liouville.inner_radius)) {
            return Err(CliError::Invalid("liouville: every radius must exceed inner_radius".into()));
        }
        if self.liouville.c.iter().any(|c| !(*c >= 0.0)) {
            return Err(CliError::Invalid("liouville: c must be non-negative".into()));
        }
        if self.sweep.lambda_scales.iter().any(|s| !(*s > 0.0)) {
            return Err(CliError::Invalid("sweep: lambda scales must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_materializes_defaults() {
        let cfg = ExperimentConfig::from_toml("", "mem").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = ExperimentConfig::from_toml("[instance]\ngamma = 1.0\nmuu = 0.5\n", "x.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("muu"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn tagged_sections_parse() {
        let text = r#"
            [instance]
            dim = 1
            operator = { kind = "trace_a", matrix = [[1.0, 0.0], [0.0, 2.0]] }
            boundary = { kind = "constant", value = 0.5 }
            [solver]
            tol = 1e-9
            method = "explicit"
        "#;
        let cfg = ExperimentConfig::from_toml(text, "mem").unwrap();
        assert_eq!(cfg.instance.boundary, BoundaryConfig::Constant { value: 0.5 });
        assert_eq!(cfg.solver.tol, 1e-9);
        assert!(matches!(cfg.instance.operator, OperatorConfig::TraceA { .. }));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides { out: Some("elsewhere".into()), grid: Some(65), seed: Some(7) }).unwrap();
        assert_eq!((cfg.instance.n, cfg.seed), (65, 7));
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
        assert!(cfg.apply(&Overrides { grid: Some(2), ..Default::default() }).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text, "mem").unwrap(), cfg);
    }
}
