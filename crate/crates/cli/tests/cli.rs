use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wqflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqflow")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = wqflow(&["simulate", "--set", "N=64", "--set", "T=1.1", "--dump-fields", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass,"));
    assert!(csv.lines().count() > 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["N"], "64");
    for f in ["rho_initial.field", "rho_final.field", "phi_initial.field", "phi_final.field"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let d = wqflow(&[
        "distance1d",
        "--rho0",
        path(&out.join("rho_initial.field")),
        "--rho1",
        path(&out.join("rho_final.field")),
        "--out",
        path(&dir.path().join("dist")),
    ]);
    assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));
    let value: f64 = String::from_utf8(d.stdout).unwrap().trim().parse().unwrap();
    assert!(value > 0.0 && value < 1.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = wqflow(&["simulate", "--set", "N=64", "--set", "seed=3", "--set", "p=3", "--set", "c=1", "--out", path(&out)]);
        assert!(o.status.success());
        fs::read(out.join("diagnostics.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "p = 3\nc = 1\nN = 48\nT = 1.05\n").unwrap();
    let out = dir.path().join("o");
    let o = wqflow(&["simulate", "--config", path(&cfg), "--set", "N=32", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["N"], "32");
    assert_eq!(json["config"]["p"], "3");
    assert_eq!(json["config"]["regime"], "langevin");
}

#[test]
fn verify_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = wqflow(&["verify", "--check", "conservation", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS kinetic energy drift")));
    assert!(out.join("diagnostics.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
}

#[test]
fn verify_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = wqflow(&["verify", "--check", "wentropy", "--set", "p=1.5", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("violated"));
    assert!(out.join("run.json").exists());
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cases: [&[&str]; 5] = [
        &["bogus"],
        &["verify", "--check", "nonsense", "--out", "x"],
        &["simulate", "--config", "/nonexistent.cfg", "--out", path(&out)],
        &["simulate", "--set", "unknown=1", "--out", path(&out)],
        &["simulate", "--set", "p=0.5", "--out", path(&out)],
    ];
    for args in cases {
        let o = wqflow(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert!(!out.exists());
    assert_eq!(wqflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn ode_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ode");
    let o = wqflow(&["ode", "--p", "3", "--c", "1", "--T", "1.5", "--out", path(&out)]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("ode.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t", "w", "wdot", "alpha", "beta", "eta", "pode", "alphaeq", "eta_residual"]);
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[6..].iter().all(|r| r.is_nan() || r.abs() <= 1e-8), "{l}");
    }
}

#[test]
fn special_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp");
    let o = wqflow(&["special", "--p", "2", "--c", "1", "--t", "1.3", "--out", path(&out)]);
    assert!(o.status.success());
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    let diff = |k: &str| (j[k]["closed_form"].as_f64().unwrap() - j[k]["quadrature"].as_f64().unwrap()).abs();
    assert!(diff("entropy") < 1e-5);
    assert!(diff("fisher") < 1e-4);
    assert!(out.join("rho.field").exists());
}
