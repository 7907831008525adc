use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deadcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deadcore")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL_1D: &str = r#"
[instance]
dim = 1
n = 129
domain = "box"
boundary = { kind = "constant", value = 0.5 }
"#;

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn fit_minimal_1d_reports_exponent_two_and_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), MINIMAL_1D);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = deadcore(&["fit", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    let e: f64 = column(&summary, "exponent_hat")[0].parse().unwrap();
    assert!((e - 2.0).abs() < 0.05, "{e}");
    for name in ["summary.csv", "growth.csv", "gradient.csv", "growth.svg", "summary.json", "data_dictionary.md"] {
        assert_eq!(fs::read_to_string(a.join(name)).unwrap(), fs::read_to_string(b.join(name)).unwrap(), "{name}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["solver"]["tol"], 1e-8);
    assert_eq!(json["config"]["analysis"]["levels"], 12);
    assert!(json["seed"].is_u64());
    let dict = fs::read_to_string(a.join("data_dictionary.md")).unwrap();
    assert!(!dict.contains("undocumented"));
}

#[test]
fn negative_gamma_exits_with_config_code_before_solving() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[instance]\ngamma = -1.0\n");
    let out = d.path().join("out");
    let o = deadcore(&["solve", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_key_reports_its_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "seed = 3\n[solver]\ntolerance = 1e-6\n");
    let o = deadcore(&["fit", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tolerance") && err.contains("line 3"), "{err}");
}

#[test]
fn non_convergence_has_its_own_exit_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), &format!("{MINIMAL_1D}\n[solver]\nmax_iters = 3\n"));
    let o = deadcore(&["solve", &cfg, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_over_exponent_pairs_lists_kappa() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("{MINIMAL_1D}\n[sweep]\npairs = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.5], [2.0, 1.0]]\n");
    let cfg = write_config(d.path(), &body.replace("value = 0.5", "value = 0.2"));
    let out = d.path().join("s");
    let o = deadcore(&["sweep", &cfg, "--out", out.to_str().unwrap(), "--grid", "65"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(column(&csv, "kappa"), ["2.0", "1.5", "4.0", "2.0"]);
    assert!(column(&csv, "status").iter().all(|s| s == "ok"));
}

#[test]
fn empty_sweep_writes_header_only() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("s");
    let o = deadcore(&["sweep", "--out", out.to_str().unwrap(), "--grid", "17"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("index,gamma,mu,"));
}

#[test]
fn liouville_with_zero_data_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[instance]\nn = 33\n[liouville]\nradii = [4.0, 8.0]\nc = [0.0]\n");
    let out = d.path().join("l");
    let o = deadcore(&["liouville", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("liouville.csv")).unwrap();
    assert_eq!(column(&csv, "sup_inner"), ["0.0", "0.0"]);
}

#[test]
fn borderline_one_d_stays_positive() {
    let d = tempfile::tempdir().unwrap();
    let body = "[instance]\ndim = 1\nn = 129\nmu = 1.0\nlambda0 = 25.0\ndomain = \"box\"\nboundary = { kind = \"constant\", value = 1.0 }\n";
    let cfg = write_config(d.path(), body);
    let out = d.path().join("b");
    let o = deadcore(&["borderline", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("borderline.csv")).unwrap();
    assert_eq!(column(&csv, "branch")[0], "positive");
    let frac: f64 = column(&csv, "dead_core_fraction")[1].parse().unwrap();
    assert!(frac > 0.6 && frac < 0.8, "{frac}");
}

#[test]
fn check_subset_passes_and_rejects_bad_selection() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("c");
    let o = deadcore(&["check", "--only", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("PASS"));
    assert!(out.join("check.csv").exists());
    let bad = deadcore(&["check", "--only", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}
