use std::path::Path;
use std::process::Command;

fn fracflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow")).args(args).output().unwrap()
}

fn example(which: &str) -> String {
    let out = fracflow(&["example", which]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&example("solve")).unwrap();
    v["domain"]["resolution"] = 10.0.into();
    let cfg = write(dir.path(), "solve.json", &v.to_string());
    let out_dir = dir.path().join("out");
    let out = fracflow(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("solve.json").exists());
    assert!(out_dir.join("pressure.vtk").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PDD"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("solve").replacen("\"beta\"", "\"betta\"", 1);
    let cfg = write(dir.path(), "bad.json", &cfg);
    let out = fracflow(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("betta"));
}

#[test]
fn command_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "solve.json", &example("solve"));
    let out = fracflow(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_1() {
    let out = fracflow(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn control_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&example("inverse")).unwrap();
    v["domain"]["resolution"] = 10.0.into();
    v["solver"]["max_outer"] = 1.into();
    let cfg = write(dir.path(), "inverse.json", &v.to_string());
    let out = fracflow(&["inverse", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_cells_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&example("sweep")).unwrap();
    v["domain"]["resolution"] = 10.0.into();
    v["sweep"]["l_values"] = serde_json::json!([10.0, 15.0, 20.0]);
    v["sweep"]["beta_values"] = serde_json::json!([1e-3, 1e-2]);
    // one outer step cannot meet the tolerance once beta > 0
    v["solver"]["max_outer"] = 1.into();
    let cfg = write(dir.path(), "sweep.json", &v.to_string());
    let out = fracflow(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--threads", "2"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.contains("# failed:"));
}
