use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    code: i32,
    report: toml::Table,
    csv: String,
    stderr: String,
}

fn run_at(cmd: &str, config: &Path, seed: Option<u64>, out: &Path) -> Run {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hartman"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out);
    if let Some(s) = seed {
        c.arg("--seed").arg(s.to_string());
    }
    let o = c.output().expect("spawn hartman");
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap_or_default();
    Run {
        code: o.status.code().unwrap_or(-1),
        report: toml::from_str(&text).unwrap_or_default(),
        csv: std::fs::read_to_string(out.join("residuals.csv")).unwrap_or_default(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn run(cmd: &str, config: &Path) -> Run {
    let dir = TempDir::new().unwrap();
    run_at(cmd, config, None, dir.path())
}

fn inline(text: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, text).unwrap();
    (dir, p)
}

fn float(t: &toml::Table, section: &str, key: &str) -> f64 {
    t[section][key].as_float().unwrap_or_else(|| panic!("{section}.{key} missing"))
}

const STANDARD: &str = r#"
[field]
kind = "real"
[space]
dim = 2
dim_s = 1
[matrix]
rows = [[0.5, 0], [0, 2]]
"#;

#[test]
fn solve_constant_perturbation() {
    let r = run("solve", &configs().join("constant.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(float(&r.report, "empirical", "v_sup") <= 0.25);
    assert_eq!(float(&r.report, "bounds", "a_priori_sup_v"), 0.25);
    assert_eq!(r.report["checks"]["v_residual"].as_bool(), Some(true));
    assert_eq!(r.report["meta"]["seed"].as_integer(), Some(0));
    let mut lines = r.csv.lines();
    assert_eq!(lines.next(), Some("point_index,radius,residual,bound"));
    assert_eq!(lines.count(), 1000);
}

#[test]
fn check_rejects_non_hyperbolic() {
    let r = run("check", &configs().join("not_hyperbolic.toml"));
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("not hyperbolic"));
    assert_eq!(r.report["summary"]["pass"].as_bool(), Some(false));
}

#[test]
fn holder_reports_upper_endpoint() {
    let r = run("holder", &configs().join("holder_worked.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let alpha_max = float(&r.report, "bounds", "alpha_max");
    assert!((alpha_max - 0.6f64.ln() / 0.5f64.ln()).abs() < 1e-6);
    assert!(float(&r.report, "bounds", "alpha") < alpha_max);
}

#[test]
fn renorm_and_linearize_configs_pass() {
    for (cmd, cfg) in [("renorm", "renorm_q3.toml"), ("linearize", "linearize_q3.toml"), ("sweep", "sweep_constant.toml")] {
        let r = run(cmd, &configs().join(cfg));
        assert_eq!(r.code, 0, "{cmd} {cfg}: {}", r.stderr);
    }
}

#[test]
fn reports_are_deterministic() {
    let cfg = configs().join("constant.toml");
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    let ra = run_at("solve", &cfg, Some(7), a.path());
    let rb = run_at("solve", &cfg, Some(7), b.path());
    let rc = run_at("solve", &cfg, Some(8), c.path());
    assert_eq!(ra.report, rb.report);
    assert_eq!(ra.csv, rb.csv);
    assert_eq!(ra.report["meta"]["seed"].as_integer(), Some(7));
    assert_eq!(rc.report["meta"]["seed"].as_integer(), Some(8));
    assert_ne!(ra.csv, rc.csv);
}

#[test]
fn config_errors_exit_two() {
    let r = run("solve", Path::new("/nonexistent/config.toml"));
    assert_eq!(r.code, 2);

    let (_d, p) = inline(&format!("{STANDARD}\n[solve]\ntarget_trunk = 1e-3\n"));
    let r = run("solve", &p);
    assert_eq!(r.code, 2, "{}", r.stderr);

    let (_d, p) = inline(&format!("{STANDARD}\n[perturbation]\nkind = \"expr\"\nexpr = \"x + 1\"\nsup = 1\nlip = 1\n"));
    let r = run("solve", &p);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("type error"), "{}", r.stderr);

    // expression without certified bounds
    let (_d, p) = inline(&format!("{STANDARD}\n[perturbation]\nkind = \"expr\"\nexpr = \"(x1, x2)\"\n"));
    assert_eq!(run("solve", &p).code, 2);
}

#[test]
fn field_gate_in_config() {
    let text = r#"
[field]
kind = "padic"
prime = 3
[space]
dim = 1
dim_s = 1
[matrix]
rows = [["3:1:1"]]
[perturbation]
kind = "expr"
expr = "tanh(x1)"
sup = 1
lip = 1
"#;
    let (_d, p) = inline(text);
    let r = run("check", &p);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("field error"), "{}", r.stderr);
}

#[test]
fn infeasible_contraction_exit_four() {
    let (_d, p) = inline(&format!("{STANDARD}\n[perturbation]\nkind = \"constant\"\nc = [0.1, 0.1]\nlip = 0.6\n"));
    assert_eq!(run("solve", &p).code, 4);
}

#[test]
fn refuted_certificate_fails_check() {
    // sin has slope 1 at 0, so a Lipschitz certificate of 0.01 is wrong
    let (_d, p) = inline(&format!(
        "{STANDARD}\n[perturbation]\nkind = \"expr\"\nexpr = \"(0.1 * sin(x2), 0.1 * sin(x1))\"\nsup = 0.1\nlip = 0.01\n"
    ));
    let r = run("check", &p);
    assert_eq!(r.code, 1);
    assert_eq!(r.report["checks"]["g_certificate_not_refuted"].as_bool(), Some(false));
}
