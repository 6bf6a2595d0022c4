use std::path::PathBuf;
use std::process::{Command, Output};

fn natmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_natmap"))
        .args(args)
        .env_remove("NATMAP_NUM_THREADS")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(natmap(&["--help"]).status.code(), Some(0));
    assert_eq!(natmap(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(natmap(&["--bogus"]).status.code(), Some(1));
    assert_eq!(natmap(&[]).status.code(), Some(1));
    assert_eq!(natmap(&["volume", "--map", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(natmap(&["selftest", "--parallelism", "0"]).status.code(), Some(1));
    assert_eq!(natmap(&["barycenter", &config("measure-three.json"), "--tol", "-1"]).status.code(), Some(1));
}

#[test]
fn inadmissible_measure_is_a_validation_error() {
    let dir = std::env::temp_dir().join("natmap-cli-two-atoms.json");
    std::fs::write(&dir, r#"{"v":"v1","atoms":[[1,1,0,0.5],[1,-1,0,0.5]]}"#).unwrap();
    let out = natmap(&["barycenter", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_two() {
    let out = natmap(&["barycenter", &config("measure-three.json"), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn barycenter_report() {
    let v = json(&natmap(&["barycenter", &config("measure-three.json"), "--seed", "9"]));
    assert_eq!(v["v"], "v1");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["command"], "barycenter");
    assert!(v["versions"]["natmap-core"].is_string());
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["result"]["point"].as_array().unwrap().len(), 3);
}

#[test]
fn natural_volume_is_reproducible() {
    let args = [
        "natural-volume", "--cocycle", &config("std-embed.json"), "--cells", "256", "--quad-order", "512", "--seed", "3",
    ];
    let a = natmap(&args);
    let b = natmap(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let r = &v["result"]["volume"];
    assert!((r["volume"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 2e-3);
    assert_eq!(r["verdict"], "maximal");
    assert!(v["result"]["rigidity"]["max_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["config"]["inputs"]["cocycle"]["cocycle"], "standard");
}

#[test]
fn parallelism_does_not_change_bytes() {
    let base = ["natural-volume", "--cocycle", &config("squash-1.5.json"), "--cells", "64", "--quad-order", "256", "--error", "floor"];
    let one = natmap(&[&base[..], &["--parallelism", "1"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_natmap")).args(base).env("NATMAP_NUM_THREADS", "3").output().unwrap();
    assert!(one.status.success() && env.status.success());
    assert_eq!(one.stdout, env.stdout);
}

#[test]
fn scan_csv_and_cell_dump() {
    let out = natmap(&["jacobian-scan", "--cells", "64", "--quad-order", "256", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "v,cell,a0,a1,a2,x,jacobian,sv_min,sv_max,residual");
    assert_eq!(lines.count(), 64 * 16);
    let nested = natmap(&["natmap", "jacobian-scan", "--cells", "64", "--quad-order", "256", "--format", "csv"]);
    assert_eq!(text.as_bytes(), &nested.stdout[..]);

    let dump = std::env::temp_dir().join("natmap-cli-cells.csv");
    let v = json(&natmap(&["volume", "--map", &config("map-embed.json"), "--cells", "64", "--dump-cells", dump.to_str().unwrap()]));
    assert_eq!(v["result"]["verdict"], "maximal");
    let cells = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(cells.lines().count(), 1 + 64);
}

#[test]
fn eval_and_degree() {
    let v = json(&natmap(&["natmap", "eval", "--ball", "0.3,-0.2", "--quad-order", "512"]));
    assert!((v["result"]["jacobian"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["result"]["isometric_embedding"], true);
    let v = json(&natmap(&[
        "degree", "--covering", &config("cover-a1.json"), "--cells", "512", "--quad-order", "512", "--error", "domain-only",
    ]));
    assert!((v["result"]["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert_eq!(v["result"]["source_verdict"], "maximal");
}

#[test]
fn ps_check_and_selftest() {
    let v = json(&natmap(&["ps-check", "--domain", "genus2", "--radius", "8", "--quad-order", "512"]));
    assert!(v["result"]["ratio_defect"].as_f64().unwrap() < 1e-9);
    let out = natmap(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
