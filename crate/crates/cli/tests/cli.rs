use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_irs-radar"));
    c.env_remove("IRS_RADAR_THREADS").env_remove("RUST_LOG");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn bundled_scenarios_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let o = run(&["validate", "--scenario", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn similar_50m_scenario_matches_reference_radar() {
    let o = run(&["validate", "--scenario", scenarios().join("ref_similar_50m.json").to_str().unwrap()]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("20.4638 MHz/us"), "{out}");
    assert!(out.contains("128 chirps x 200 samples"), "{out}");
}

#[test]
fn empty_scenario_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.json");
    std::fs::write(&p, "").unwrap();
    let o = run(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_exits_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("far.json");
    std::fs::write(&p, r#"{"version": 1, "target": {"range_m": 250}}"#).unwrap();
    let o = run(&[
        "sweep",
        "--scenario",
        p.to_str().unwrap(),
        "--gamma",
        "0",
        "--trials",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("R_max"), "{}", stderr(&o));
    assert!(!dir.path().join("pd_clean.csv").exists());
}

#[test]
fn missing_radar_block_warns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("min.json");
    std::fs::write(&p, r#"{"version": 1}"#).unwrap();
    let o = run(&["validate", "--scenario", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("radar"), "{}", stderr(&o));
}

#[test]
fn io_failures_exit_two() {
    let o = run(&["validate", "--scenario", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&["rcs", "--gamma", "0:1:1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_noise_free_peaks_at_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        scenarios().join("ref_noise_free.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(&dir.path().join("detections.json"));
    assert_eq!(d["argmax_bin"], serde_json::json!([180, 76]));
    assert!((d["argmax_range_m"].as_f64().unwrap() - 180.0).abs() <= 1.0);
    assert!((d["argmax_velocity_mps"].as_f64().unwrap() - 25.0).abs() <= 2.1);
    let frame = std::fs::read_to_string(dir.path().join("frame.csv")).unwrap();
    assert_eq!(frame.lines().count(), 129);
    assert!(dir.path().join("rd_map.csv.json").exists());
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_raw_format_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        scenarios().join("ref_sweeping_50m.json").to_str().unwrap(),
        "--gamma-db",
        "25",
        "--format",
        "raw",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::metadata(dir.path().join("frame.f32")).unwrap().len(), 128 * 200 * 8);
    let side = json(&dir.path().join("frame.f32.json"));
    assert_eq!(side["samples"], 200);
    assert_eq!(side["meta"]["interferers"].as_array().unwrap().len(), 1);
}

#[test]
fn rcs_curve_starts_at_passive_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "rcs",
        "--elements",
        "65536",
        "--gamma",
        "0:40:1",
        "--plot-script",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("rcs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("gamma_db,rcs_dbsm"));
    let first: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first + 1.08).abs() < 0.01);
    assert_eq!(csv.lines().count(), 42);
    assert!(dir.path().join("plot_rcs.py").exists());
}

#[test]
fn sir_needs_interferer() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sir",
        "--scenario",
        scenarios().join("ref_clean.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "sir",
        "--scenario",
        scenarios().join("ref_similar_50m.json").to_str().unwrap(),
        "--gamma",
        "30",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sir.csv")).unwrap();
    let sir: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((sir - 5.8).abs() < 0.1, "{sir}");
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let scenario = scenarios().join("ref_similar_50m.json");
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&[
            "--threads",
            threads,
            "sweep",
            "--scenario",
            scenario.to_str().unwrap(),
            "--gamma",
            "30:34:2",
            "--trials",
            "12",
            "--seed",
            "99",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let pd = std::fs::read(dir.path().join("pd_similar.csv")).unwrap();
        let base = std::fs::read(dir.path().join("pd_baseline.csv")).unwrap();
        let m = json(&dir.path().join("manifest.json"));
        assert_eq!(m["master_seed"], 99);
        assert_eq!(m["trials_per_point"], 12);
        assert_eq!(m["gamma_grid_db"], serde_json::json!([30.0, 32.0, 34.0]));
        let sha = m["scenario_file_sha256"].as_str().unwrap().to_string();
        bodies.push((pd, base, sha));
    }
    assert_eq!(bodies[0], bodies[1]);
    let header = String::from_utf8(bodies[0].0.clone()).unwrap();
    assert!(header.starts_with("gamma_db,trials,hits,pd,ci_lo,ci_hi\n"));
}

#[test]
fn thread_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("IRS_RADAR_THREADS", "0")
        .args(["rcs", "--gamma", "0", "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
