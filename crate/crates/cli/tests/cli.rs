use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_holomenta"));
    c.env_remove("HOLOMENTA_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn analyze_json(args: &[&str], dir: &Path, tag: &str) -> (i32, Value, Vec<u8>) {
    let report: PathBuf = dir.join(format!("{tag}.json"));
    let mut all = vec!["analyze"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--report", report.to_str().unwrap()]);
    let o = run(&all);
    let bytes = std::fs::read(&report).unwrap_or_default();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (code(&o), value, bytes)
}

#[test]
fn simulate_particle_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&[
        "simulate", "--builtin", "particle", "--q0", "0,0,0", "--v0", "1,1", "--t-final", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["t", "x", "y", "z", "v_0", "v_1", "energy"]);
    assert_eq!(rows.len(), 201);
    let last = rows.last().unwrap();
    // The second quasi-velocity of the particle is p_x.
    let px: f64 = last[column(&header, "v_1")].parse().unwrap();
    assert!((px - 0.5f64.sqrt()).abs() < 1e-8, "{px}");
    let y: f64 = last[column(&header, "y")].parse().unwrap();
    assert!((y - 1.0).abs() < 1e-8);
    // Only the target file remains.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn csv_values_round_trip() {
    let o = run(&["simulate", "--builtin", "ball", "--t-final", "1", "--samples", "11"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        for cell in line.split(',') {
            let x: f64 = cell.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), cell);
            let digits = cell.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(digits.len(), 17, "{cell}");
        }
    }
}

#[test]
fn simulate_errors() {
    let o = run(&["simulate", "--builtin", "helix", "--t-final", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown builtin"));

    let o = run(&["simulate", "--builtin", "disk", "--t-final", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("t_final must be positive"));

    for bad in [
        vec!["simulate", "--builtin", "disk", "--q0", "0,0", "--v0", "1,1"],
        vec!["simulate", "--builtin", "disk", "--q0", "0,0,0,x"],
        vec!["simulate", "--builtin", "disk", "--dt", "0.01", "--integrator", "rk45"],
        vec!["simulate", "--builtin", "disk", "--tol", "-1"],
        vec!["simulate", "--builtin", "disk", "--config", "x.json"],
        vec!["simulate", "--config", "/nonexistent.json"],
        vec!["simulate", "--builtin", "particle", "--complement", "Wq"],
        vec!["simulate"],
    ] {
        assert_eq!(code(&run(&bad)), 2, "{bad:?}");
    }
}

#[test]
fn simulate_integration_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.json");
    // ẍ = 4x³ escapes to infinity in finite time.
    std::fs::write(
        &cfg,
        r#"{"name": "blowup", "coordinates": ["x"], "metric": [[1]], "potential": "-x^4",
            "distribution": [["1"]], "vertical_complement": [], "action_generators": [],
            "chart_box": [[-1, 1]]}"#,
    )
    .unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--q0", "1", "--v0", "1", "--t-final", "10"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--q0", "1", "--v0", "1", "--dt", "0.1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn simulate_with_rk4_and_auto_observables() {
    let o = run(&["simulate", "--builtin", "disk", "--dt", "0.01", "--t-final", "3", "--observables", "auto"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t", "x", "y", "phi", "psi", "v_0", "v_1", "energy", "gauge_0", "gauge_1"]);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    for col in [7, 8, 9] {
        let first = rows[0][col];
        assert!(rows.iter().all(|r| (r[col] - first).abs() < 1e-9));
    }

    // The particle's only candidate is not certified, so nothing is appended.
    let o = run(&["simulate", "--builtin", "particle", "--t-final", "1", "--observables", "auto"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x,y,z,v_0,v_1,energy");
}

#[test]
fn analyze_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let (c, r, _) = analyze_json(&["--builtin", "disk"], dir.path(), "disk");
    assert_eq!(c, 0);
    assert_eq!(r["rank_S"], 2);
    assert_eq!(r["vertical_symmetry"], true);
    assert_eq!(r["dimension_assumption"], true);
    let cands = r["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 2);
    assert!(cands.iter().all(|c| c["verdict"] == "certified"));
    assert_eq!(r["samples"]["count"], 50);
    assert_eq!(r["tolerances"]["residual"], 1e-7);

    let (c, r, _) = analyze_json(&["--builtin", "particle"], dir.path(), "particle");
    assert_eq!(c, 1);
    assert_eq!(r["candidates"].as_array().unwrap().len(), 1);
    assert_eq!(r["candidates"][0]["verdict"], "residual_failed");

    let (c, r, _) = analyze_json(&["--builtin", "particle", "--complement", "Wpaper"], dir.path(), "wpaper");
    assert_eq!(c, 1);
    assert_eq!(r["vertical_symmetry"], false);
    assert_eq!(r["candidates"][0]["verdict"], "empirical_only");

    let (c, r, _) = analyze_json(&["--builtin", "ball"], dir.path(), "ball");
    assert_eq!(c, 0);
    assert_eq!(r["rank_S"], 1);
    assert_eq!(r["candidates"][0]["verdict"], "certified");
}

#[test]
fn analyze_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, a) = analyze_json(&["--builtin", "particle", "--seed", "7"], dir.path(), "a");
    let (_, _, b) = analyze_json(&["--builtin", "particle", "--seed", "7"], dir.path(), "b");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (_, r, c) = analyze_json(&["--builtin", "particle", "--seed", "8"], dir.path(), "c");
    assert_ne!(a, c);
    assert_eq!(r["samples"]["seed"], 8);
}

#[test]
fn analyze_configs() {
    let dir = tempfile::tempdir().unwrap();
    let (c, r, _) = analyze_json(&["--config", &config("disk.json")], dir.path(), "disk");
    assert_eq!(c, 0);
    assert_eq!(r["rank_S"], 2);
    assert_eq!(r["samples"]["source"], "sample_points");
    assert_eq!(r["samples"]["count"], 5);

    let (c, r, _) = analyze_json(&["--config", &config("particle.json")], dir.path(), "particle");
    assert_eq!(c, 1);
    assert_eq!(r["candidates"][0]["verdict"], "empirical_only");

    let (c, r, _) = analyze_json(&["--config", &config("pendulum.json")], dir.path(), "pendulum");
    assert_eq!(c, 0);
    assert_eq!(r["candidates"][0]["verdict"], "certified");
}

#[test]
fn analyze_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let no_box = write(
        "nobox.json",
        r#"{"name": "n", "coordinates": ["x"], "metric": [[1]], "distribution": [["1"]],
            "vertical_complement": [], "action_generators": [["1"]]}"#,
    );
    let bad_expr = write(
        "bad.json",
        r#"{"name": "n", "coordinates": ["x"], "metric": [["1 + * 2"]], "distribution": [["1"]],
            "vertical_complement": [], "action_generators": [["1"]], "chart_box": [[0, 1]]}"#,
    );
    let not_spd = write(
        "spd.json",
        r#"{"name": "n", "coordinates": ["x"], "metric": [["x - 1"]], "distribution": [["1"]],
            "vertical_complement": [], "action_generators": [["1"]], "sample_points": [[0.5], [0.2]]}"#,
    );
    for cfg in [no_box, bad_expr, not_spd, "missing.json".into()] {
        let o = run(&["analyze", "--config", &cfg]);
        assert_eq!(code(&o), 2, "{cfg}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn dimension_assumption_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noaction.json");
    std::fs::write(
        &cfg,
        r#"{"name": "n", "coordinates": ["x", "y", "z"], "metric": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            "distribution": [["0", "1", "0"], ["1", "0", "y"]], "vertical_complement": [["0", "0", "1"]],
            "action_generators": [["0", "0", "0"]], "chart_box": [[-1, 1], [-1, 1], [-1, 1]]}"#,
    )
    .unwrap();
    let (c, r, _) = analyze_json(&["--config", cfg.to_str().unwrap()], dir.path(), "r");
    assert_eq!(c, 1);
    assert_eq!(r["dimension_assumption"], false);
    assert_eq!(r["candidates"].as_array().unwrap().len(), 0);
}

#[test]
fn tolerance_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = bin()
        .args(["analyze", "--builtin", "disk", "--report", report.to_str().unwrap()])
        .env("HOLOMENTA_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["tolerances"]["residual"], 1e-30);

    let o = bin().args(["analyze", "--builtin", "disk"]).env("HOLOMENTA_TOL", "abc").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn check_command() {
    for name in ["particle", "ball", "disk"] {
        let o = run(&["check", "--builtin", name]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().all(|l| l.starts_with("PASS")));
        assert!(text.lines().count() > 10);
    }
    assert_eq!(code(&run(&["check"])), 2);
    assert_eq!(code(&run(&["check", "--builtin", "helix"])), 2);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}
