use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deadcore_cli::check::{emit_check, parse_selection, run_suite, ALL};
use deadcore_cli::emit::emit;
use deadcore_cli::error::{CliError, EXIT_OK};
use deadcore_cli::experiments::{
    borderline_bundle, borderline_experiment, liouville_bundle, liouville_experiment, run, run_bundle, sweep,
};
use deadcore_cli::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "deadcore", version, about = "Dead-core free boundary experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults apply when omitted.
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for randomized instances.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the nodal solution.
    Solve(Common),
    /// Solve one instance and measure growth, gradient decay, non-degeneracy,
    /// density and porosity.
    Fit(Common),
    /// Run one instance per (gamma, mu) pair or lambda0 scale.
    Sweep(Common),
    /// Sup over the inner ball for boundary data c Theta R^kappa on B_R.
    Liouville(Common),
    /// Borderline instance against its mu = 0 twin.
    Borderline(Common),
    /// Run the acceptance suite.
    Check {
        #[command(flatten)]
        common: Common,
        /// Comma-separated criteria to run; all when omitted.
        #[arg(long)]
        only: Option<String>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides { out: c.out.clone(), grid: c.grid, seed: c.seed })?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(c) => single("solve", &c, true),
        Command::Fit(c) => single("fit", &c, false),
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let b = sweep(&cfg);
            report(emit(&b, &cfg.output)?);
            Ok(())
        }
        Command::Liouville(c) => {
            let cfg = load(&c)?;
            let rows = liouville_experiment(&cfg, &cfg.liouville.radii, &cfg.liouville.c)?;
            report(emit(&liouville_bundle(&cfg, &rows), &cfg.output)?);
            match rows.iter().find(|r| r.status != "ok") {
                Some(r) => Err(CliError::NotConverged(format!("R = {}, c = {}: {}", r.big_r, r.c, r.status))),
                None => Ok(()),
            }
        }
        Command::Borderline(c) => {
            let cfg = load(&c)?;
            let rep = borderline_experiment(&cfg)?;
            report(emit(&borderline_bundle(&cfg, &rep), &cfg.output)?);
            if rep.borderline.converged && rep.twin.converged {
                println!("branch {} (dichotomy {})", rep.borderline.branch, if rep.dichotomy_holds { "holds" } else { "violated" });
                Ok(())
            } else {
                Err(CliError::NotConverged("borderline experiment".into()))
            }
        }
        Command::Check { common, only } => {
            let cfg = load(&common)?;
            let selection = match only {
                Some(s) => parse_selection(&s).map_err(CliError::Invalid)?,
                None => ALL.to_vec(),
            };
            let run = run_suite(&cfg, &selection);
            for r in &run.results {
                println!("{}", r.line());
            }
            report(emit_check(&run, &cfg)?);
            if run.passed() {
                Ok(())
            } else {
                let failed: Vec<String> = run.results.iter().filter(|r| !r.passed).map(|r| r.criterion.to_string()).collect();
                Err(CliError::Acceptance(format!("criteria {}", failed.join(", "))))
            }
        }
    }
}

fn single(command: &str, c: &Common, with_solution: bool) -> Result<(), CliError> {
    let mut cfg = load(c)?;
    if with_solution {
        let a = &mut cfg.analysis;
        (a.growth, a.gradient, a.nondegeneracy, a.density, a.porosity) = (false, false, false, false, false);
    }
    let o = run(&cfg)?;
    report(emit(&run_bundle(command, &cfg, &o, with_solution), &cfg.output)?);
    if let Some(f) = &o.measurements.growth {
        println!("exponent_hat {}", f.exponent_hat);
    }
    if o.report.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("residual {} after {} iterations", o.report.final_residual, o.report.iterations)))
    }
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
