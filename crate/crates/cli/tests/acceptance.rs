//! Acceptance suite: runs criteria 1 to 11 and prints one pass/fail line per
//! criterion. The whole suite is run twice; criterion 11 also requires the
//! two emitted artifact sets to be byte-identical.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use deadcore_cli::check::{emit_check, run_suite, CheckRun, ALL};
use deadcore_cli::ExperimentConfig;

fn run_into(dir: &Path) -> CheckRun {
    let mut cfg = ExperimentConfig::default();
    cfg.output.dir = dir.to_path_buf();
    let run = run_suite(&cfg, &ALL);
    emit_check(&run, &cfg).expect("artifacts written");
    run
}

fn differing_files(a: &Path, b: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    let count_b = fs::read_dir(b).unwrap().count();
    let mut out: Vec<String> = names.into_iter().filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok()).collect();
    if count_b != fs::read_dir(a).unwrap().count() {
        out.push("file sets differ".into());
    }
    out
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (da, db) = (tmp.path().join("first"), tmp.path().join("second"));
    let first = run_into(&da);
    let second = run_into(&db);
    let diff = differing_files(&da, &db);

    let mut all = true;
    for r in &first.results {
        let mut r = r.clone();
        if r.criterion == 11 && !diff.is_empty() {
            r.passed = false;
            r.detail = format!("{}; repeated check differs in {}", r.detail, diff.join(", "));
        } else if r.criterion == 11 {
            r.detail = format!("{}; repeated full check byte-identical", r.detail);
        }
        all &= r.passed;
        println!("{}", r.line());
    }
    if !second.passed() && first.passed() {
        println!("second run failed where the first passed");
        all = false;
    }
    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failures above");
        ExitCode::FAILURE
    }
}
