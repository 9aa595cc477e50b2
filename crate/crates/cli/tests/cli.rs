use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dispersionlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value of a `# key = value ...` header line.
fn header(csv: &str, key: &str) -> f64 {
    let prefix = format!("# {key} = ");
    let line = csv.lines().find(|l| l.starts_with(&prefix)).unwrap_or_else(|| panic!("no header {key}"));
    line[prefix.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

/// Data rows as numbers, skipping comments and the header row.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn h2_bits(d: f64) -> f64 {
    -d * d.log2() - (1.0 - d) * (1.0 - d).log2()
}

#[test]
fn capacity_of_bundled_stuck_at_spec() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cap.json");
    let o = run(&["gp-capacity", "--spec", "builtin:stuck-at", "--aux-size", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bits/use"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["units"], "bits");
    assert!((v["capacity"].as_f64().unwrap() - 0.45007).abs() <= 1e-4);
    assert!(dir.path().join("cap.json.manifest.json").exists());
}

#[test]
fn fixed_parameters_match_closed_form() {
    let o = run(&["gp-capacity", "--spec", "builtin:stuck-at", "--fixed"]);
    assert!(o.status.success());
    let line = stdout(&o);
    let c: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((c - 0.9 * (1.0 - h2_bits(0.11))).abs() < 1e-9);
}

#[test]
fn single_state_spec_gives_bsc_capacity() {
    let dir = TempDir::new().unwrap();
    let d = 0.2;
    let spec = write(&dir, "bsc.json", &format!(
        r#"{{"state_dist": [1.0], "kernel": [[[{a}, {d}]], [[{d}, {a}]]]}}"#,
        a = 1.0 - d
    ));
    let out = dir.path().join("r.json");
    let o = run(&["gp-capacity", "--spec", s(&spec), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["capacity_bits"].as_f64().unwrap() - (1.0 - h2_bits(d))).abs() < 1e-6);
}

#[test]
fn malformed_specs_are_ingestion_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.json", "");
    let o = run(&["gp-capacity", "--spec", s(&empty)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"));
    let broken = write(&dir, "broken.json", "{\n  \"state_dist\": [1.0],\n  \"kernel\": [[[0.5, 0.5]]\n");
    let o = run(&["gp-capacity", "--spec", s(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"));
    let bad = write(&dir, "bad.json", r#"{"state_dist": [0.5, 0.6], "kernel": [[[1.0], [1.0]]]}"#);
    let o = run(&["gp-capacity", "--spec", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("state_dist"));
    let o = run(&["gp-capacity", "--spec", s(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn second_order_header_reports_both_coefficients() {
    let o = run(&["gp-second-order", "--spec", "builtin:stuck-at", "--fixed", "--eps", "0.001", "--n-min", "100", "--n-max", "500", "--n-step", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!((header(&csv, "sqrt(V)*Qinv(eps)") - 2.81).abs() <= 0.01);
    assert!((header(&csv, "R_tilde") - 4.16).abs() <= 0.01);
    assert!(csv.lines().any(|l| l == "n,normal_approx_bits,iid_expansion_bits"));
    assert!(!csv.contains('\r'));
    assert_eq!(rows(&csv).len(), 5);
}

#[test]
fn second_order_curves_at_median_and_ordering() {
    let args = |eps: &'static str| {
        vec!["gp-second-order", "--spec", "builtin:stuck-at", "--fixed", "--eps", eps, "--n-min", "50", "--n-max", "250", "--n-step", "50"]
    };
    let half = stdout(&run(&args("0.5")));
    let c = header(&half, "C");
    for r in rows(&half) {
        assert!((r[1] - r[0] * c).abs() <= 1e-9 * r[0] * c);
        // the i.i.d. curve keeps a positive sqrt(n) backoff even at eps = 1/2
        assert!(r[2] < r[1]);
    }
    let loose = rows(&stdout(&run(&args("0.2"))));
    let tight = rows(&stdout(&run(&args("0.001"))));
    for (a, b) in loose.iter().zip(&tight) {
        assert!(a[1] > b[1]);
    }
}

#[test]
fn dpc_curve_header_and_median() {
    let o = run(&["dpc-curve", "-P", "1", "--eps", "0.5", "--n-min", "10", "--n-max", "100", "--n-step", "30", "--units", "nats"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!((header(&csv, "V") - 0.375).abs() < 1e-12);
    for r in rows(&csv) {
        assert!((r[1] - r[0] * 0.5 * 2f64.ln()).abs() < 1e-9);
    }
    let o = run(&["dpc-curve", "-P", "1", "--eps", "0.1", "--state-power", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_replayable() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "tail.json", r#"{"operation": "gp_spectrum_tail", "spec": "builtin:stuck-at",
        "state_counts": [2, 2, 36], "gammas": [-5.0, 10.0, "inf"], "trials": 2000}"#);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", s(&cfg), "--seed", "3", "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("inf,1.00000000000,0,2000"), "{last}");
    let c = dir.path().join("c.csv");
    let manifest = dir.path().join("a.csv.manifest.json");
    let o = run(&["replay", "--manifest", s(&manifest), "--out", s(&c)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(text, std::fs::read_to_string(&c).unwrap());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["command"], "simulate");
}

#[test]
fn simulate_dpc_mean_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "dpc.json", r#"{"operation": "dpc_spectrum_tail", "power": 1.0, "state_power": 2.0,
        "n": 100, "gammas": [0.0], "trials": 20000}"#);
    let o = run(&["simulate", "--config", s(&cfg), "--units", "nats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let line = csv.lines().find(|l| l.starts_with("# sample mean")).unwrap();
    let nums: Vec<f64> = line.split_whitespace().filter_map(|w| w.trim_end_matches(',').parse().ok()).collect();
    let (mean, var) = (nums[0], nums[1]);
    // I(U;Y) at P = 1, P_S = 2, alpha = 1/2: (P + P_S + 1)(P + alpha^2 P_S) / D = 4 * 1.5 / 2
    let want = 100.0 * 0.5 * 3f64.ln();
    assert!((mean - want).abs() <= 4.0 * (var / 20000.0).sqrt());
}

#[test]
fn simulate_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.json", r#"{"operation": "teleport", "trials": 1}"#);
    let o = run(&["simulate", "--config", s(&unknown)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown operation"));
    let big = write(&dir, "g.json", r#"{"operation": "gp_full_sim", "spec": "builtin:stuck-at", "n": 400, "m": 2, "trials": 1}"#);
    let o = run(&["simulate", "--config", s(&big)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("gp_spectrum_tail"));
}

#[test]
fn thread_cap_is_validated() {
    let o = bin().env("DISPERSIONLAB_THREADS", "1").args(["dpc-curve", "-P", "2", "--eps", "0.01", "--n-max", "20"]).output().unwrap();
    assert!(o.status.success());
    let o = bin().env("DISPERSIONLAB_THREADS", "0").args(["dpc-curve", "-P", "2", "--eps", "0.01"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
