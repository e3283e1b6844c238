use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cwwr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwwr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cwwr_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwwr"))
        .env("CWWR_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_of(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

struct Row {
    mu0: f64,
    mu1: f64,
    roots: u32,
}

fn parse_scan(csv: &str) -> Vec<Row> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mu0,mu1,region,root_count,y_star,rho0,rho1,p"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Row {
                mu0: f[0].parse().unwrap(),
                mu1: f[1].parse().unwrap(),
                roots: f[3].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn classify_coexistence_lists_two_phases() {
    let v = json_of(&cwwr(&["classify", "--a", "1", "--mu0", "2", "--mu1", "2", "--format", "json"]));
    assert_eq!(v["region"], "Coexistence");
    let phases = v["phases"].as_array().unwrap();
    assert_eq!(phases.len(), 2);
    let (p0, p1) = (&phases[0], &phases[1]);
    assert_eq!(p0["rho0"], p1["rho1"]);
    let ybar = v["order_parameter"].as_f64().unwrap();
    assert!((ybar - 7.349473057081898).abs() < 1e-12);
}

#[test]
fn classify_symmetric_single_phase() {
    let v = json_of(&cwwr(&["classify", "--a", "1", "--mu0", "0", "--mu1", "0", "--format", "json"]));
    assert_eq!(v["region"], "SinglePhase");
    assert_eq!(v["phases"][0]["y_star"].as_f64(), Some(0.0));
    let text = stdout(&cwwr(&["classify", "--a", "1", "--mu0", "0", "--mu1", "0"]));
    assert!(text.contains("region: SinglePhase"));
    assert!(text.contains("y_star = 0e0"));
}

#[test]
fn classify_free_gas() {
    let v = json_of(&cwwr(&["classify", "--a", "0", "--mu0", "0", "--mu1", "0", "--format", "json"]));
    assert_eq!(v["phases"][0]["rho0"].as_f64(), Some(1.0));
    assert_eq!(v["phases"][0]["rho1"].as_f64(), Some(1.0));
    assert_eq!(v["pressure"].as_f64(), Some(2.0));
}

#[test]
fn classify_critical_point_uses_tolerance() {
    let mu = (1.0 - 2f64.ln() + 1e-9).to_string();
    let strict = json_of(&cwwr(&["classify", "--a", "2", "--mu0", &mu, "--mu1", &mu, "--format", "json"]));
    assert_eq!(strict["region"], "Coexistence");
    let loose = json_of(&cwwr(&[
        "classify", "--a", "2", "--mu0", &mu, "--mu1", &mu, "--format", "json", "--tol", "1e-6",
    ]));
    assert_eq!(loose["region"], "Critical");
}

#[test]
fn exit_codes() {
    assert_eq!(cwwr(&["classify", "--a", "1", "--mu0", "x", "--mu1", "0"]).status.code(), Some(2));
    assert_eq!(cwwr(&["classify", "--a", "1"]).status.code(), Some(2));
    assert_eq!(cwwr(&["classify", "--a", "-1", "--mu0", "0", "--mu1", "0"]).status.code(), Some(2));
    assert_eq!(cwwr(&["phase-diagram", "--a", "1", "--mu0-steps", "1"]).status.code(), Some(2));
    assert_eq!(cwwr(&["isotherm", "--a", "1", "--theta", "1", "--rho-min", "0", "--rho-max", "1"]).status.code(), Some(2));
    let bad = cwwr(&["phase-diagram", "--a", "1", "--mu0-steps", "3", "--mu1-steps", "3", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(bad.status.code(), Some(4));
    let failing = cwwr(&["oracle-check", "--suite", "convergence", "--volumes", "25,50", "--tol", "1e-9"]);
    assert_eq!(failing.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&failing.stdout).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
    let bad_threads = cwwr_threads("many", &["classify", "--a", "1", "--mu0", "0", "--mu1", "0"]);
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let args = ["phase-diagram", "--a", "1", "--mu0-steps", "31", "--mu1-steps", "29"];
    let one = cwwr_threads("1", &args);
    let four = cwwr_threads("4", &args);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    assert_eq!(cwwr_threads("1", &json_args).stdout, cwwr_threads("3", &json_args).stdout);
}

#[test]
fn scan_root_counts_are_symmetric_with_apex_at_critical_point() {
    for (a, apex) in [("1", 1.0), ("2", 1.0 - 2f64.ln())] {
        let o = cwwr(&["phase-diagram", "--a", a, "--mu0-steps", "41", "--mu1-steps", "41"]);
        let rows = parse_scan(&stdout(&o));
        assert_eq!(rows.len(), 41 * 41);
        assert!(rows.iter().all(|r| (1..=3).contains(&r.roots)));
        for (k, r) in rows.iter().enumerate() {
            let (i, j) = (k % 41, k / 41);
            assert_eq!(r.roots, rows[i * 41 + j].roots, "asymmetric at ({}, {})", r.mu0, r.mu1);
        }
        let gray: Vec<&Row> = rows.iter().filter(|r| r.roots == 3).collect();
        assert!(!gray.is_empty());
        let lowest = gray.iter().map(|r| 0.5 * (r.mu0 + r.mu1)).fold(f64::INFINITY, f64::min);
        assert!(lowest > apex && lowest < apex + 0.25, "a={a}: lowest three-root mean mu {lowest}");
    }
}

#[test]
fn scan_file_output_has_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = cwwr(&["phase-diagram", "--a", "1", "--mu0-steps", "5", "--mu1-steps", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 26);
    assert!(!body.contains('\r'));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(side["command"], "phase-diagram");
    assert_eq!(side["parameters"]["mu0_steps"], 5);
    assert!(side["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert!(side["tolerances"]["eq"].is_number());
}

#[test]
fn scan_svg_is_self_contained() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.svg");
    let o = cwwr(&["phase-diagram", "--a", "1", "--mu0-steps", "21", "--mu1-steps", "21", "--format", "svg", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<metadata>") && svg.contains("#c8c8c8") && svg.contains("<circle"));
    assert!(!svg.contains("href"));
    assert!(Path::new(&format!("{}.manifest.json", out.display())).exists());
}

fn isotherm_rows(theta: &str) -> Vec<(f64, f64, String)> {
    let o = cwwr(&["isotherm", "--a", "1", "--theta", theta, "--rho-min", "0.001", "--rho-max", "10", "--points", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,p_hat,branch"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect()
}

#[test]
fn isotherm_plateau_rows() {
    let rows = isotherm_rows("7.38905609893065");
    let plateau: Vec<_> = rows.iter().filter(|r| r.2 == "plateau").collect();
    assert!(plateau.len() >= 2);
    let p_star = plateau[0].1;
    assert!(plateau.iter().all(|r| r.1 == p_star));
    for w in rows.windows(2) {
        if w[0].2 != w[1].2 {
            assert_eq!(w[0].0, w[1].0, "branch change without duplicated endpoint");
            assert!((w[0].1 - w[1].1).abs() <= 1e-10);
        }
    }
    assert!(rows.iter().any(|r| r.2 == "low") && rows.iter().any(|r| r.2 == "high"));
}

#[test]
fn isotherm_without_transition_has_no_plateau() {
    let rows = isotherm_rows("2.7");
    assert!(rows.iter().all(|r| r.2 == "low"));
    assert!(rows.windows(2).all(|w| w[1].1 > w[0].1));
}

#[test]
fn order_parameter_curve() {
    let o = cwwr(&["order-parameter", "--a", "1", "--mu-min", "0", "--mu-max", "2", "--points", "5", "--format", "json"]);
    let v = json_of(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let (mu, ybar) = (r["mu"].as_f64().unwrap(), r["ybar"].as_f64().unwrap());
        if mu <= 1.0 {
            assert_eq!(ybar, 0.0);
        } else {
            assert!(ybar > 0.0);
            assert!((r["delta_rho"].as_f64().unwrap() - ybar).abs() < 1e-12 * ybar.max(1.0));
        }
    }
    let last = &rows[4];
    assert!((last["z_plus"].as_f64().unwrap() - 7.354201301513358).abs() < 1e-12);
}

#[test]
fn oracle_reports_follow_schema() {
    for suite in ["identity-4a", "identity-20", "moments"] {
        let v = json_of(&cwwr(&["oracle-check", "--suite", suite, "--volumes", "10"]));
        assert_eq!(v["suite"], suite);
        assert!(v["manifest"].is_object());
        let checks = v["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        for c in checks {
            for key in ["name", "params", "residual", "tolerance", "pass"] {
                assert!(c.get(key).is_some(), "{suite}: missing {key}");
            }
            assert_eq!(c["pass"], true, "{suite}: {c}");
        }
    }
}

#[test]
fn oracle_convergence_default_volumes() {
    let v = json_of(&cwwr(&["oracle-check", "--suite", "convergence"]));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|c| c["pass"] == true));
}
