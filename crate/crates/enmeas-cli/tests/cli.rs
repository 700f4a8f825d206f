use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn enmeas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enmeas")).args(args).env_remove("ENMEAS_SDP_TOL").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const Z_POVM: &str = r#"{"dim": 2, "elements": {"0": [[1, 0], [0, 0]], "1": [[0, 0], [0, 1]]}}"#;
const X_POVM: &str = r#"{"dim": 2, "elements": {"0": [[0.5, 0.5], [0.5, 0.5]], "1": [[0.5, -0.5], [-0.5, 0.5]]}}"#;

#[test]
fn tau_finite_two_levels() {
    let v = json_of(&enmeas(&["tau", "finite", "--d", "2"]));
    assert!((v["tau"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!((v["epsilon"].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(enmeas(&["tau", "finite", "--bogus"]).status.code(), Some(2));
    assert_eq!(enmeas(&["tau", "finite", "--d", "0"]).status.code(), Some(2));
    assert_eq!(enmeas(&["distance", "classical", "--m0", "/nonexistent.json", "--m1", "/nonexistent.json"]).status.code(), Some(1));
    let bad_env = Command::new(env!("CARGO_BIN_EXE_enmeas")).args(["tau", "finite", "--d", "2"]).env("ENMEAS_SDP_TOL", "-1").output().unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&enmeas(&["povm", "validate", "--povm", "/nonexistent.json"]).stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn distances_between_bases() {
    let dir = tempfile::tempdir().unwrap();
    let (z, x) = (write(dir.path(), "z.json", Z_POVM), write(dir.path(), "x.json", X_POVM));
    let c = json_of(&enmeas(&["distance", "classical", "--m0", &z, "--m1", &x]));
    let q = json_of(&enmeas(&["distance", "quantum", "--m0", &z, "--m1", &x, "--tol", "1e-9"]));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((c["value"].as_f64().unwrap() - r).abs() < 1e-10);
    assert!((q["value"].as_f64().unwrap() - r).abs() < 1e-6);
    assert!(q["witness"]["state"].is_array());
}

#[test]
fn tau_sweep_csv_round_trips() {
    let out = enmeas(&["tau", "finite", "--d", "2", "--to", "12", "--format", "csv"]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["parameter", "tau", "epsilon"]);
    for rec in r.records() {
        let rec = rec.unwrap();
        let d: f64 = rec[0].parse().unwrap();
        let again = json_of(&enmeas(&["tau", "finite", "--d", &format!("{}", d as usize)]));
        assert_eq!(rec[1].parse::<f64>().unwrap(), again["tau"].as_f64().unwrap());
        assert_eq!(rec[2].parse::<f64>().unwrap(), again["epsilon"].as_f64().unwrap());
    }
}

#[test]
fn phi_sweep_csv_round_trips() {
    let out = enmeas(&["phi-sweep", "--zmin", "0.5", "--zmax", "7", "--steps", "4", "--format", "csv"]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["z", "phi", "lambda_star", "mu_star"]);
    for rec in r.records() {
        let rec = rec.unwrap();
        let again = json_of(&enmeas(&["phi", "--z", &rec[0]]));
        assert_eq!(rec[1].parse::<f64>().unwrap(), again["phi"].as_f64().unwrap());
    }
}

#[test]
fn charact_with_sdp_dump() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", X_POVM);
    let degraded = dir.path().join("xd.json");
    let d = enmeas(&["povm", "degrade", "--povm", &x, "--tau", "0.4", "--out", degraded.to_str().unwrap()]);
    assert!(d.status.success());
    let dump = dir.path().join("dump");
    let v = json_of(&enmeas(&["charact", "finite", "--povm", degraded.to_str().unwrap(), "--d", "2", "--dump-sdp", dump.to_str().unwrap()]));
    assert_eq!(v["verdict"], "member");
    assert_eq!(v["certificate"]["kind"], "decomposition");
    let files: Vec<_> = std::fs::read_dir(&dump).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(files.iter().any(|f| f.to_string_lossy().ends_with("problem.json")));
    let v = json_of(&enmeas(&["charact", "finite", "--povm", &x, "--d", "2"]));
    assert_eq!(v["verdict"], "non_member");
}

#[test]
fn bell_commands() {
    let v = json_of(&enmeas(&["bell", "chsh"]));
    assert!((v["chsh_value"].as_f64().unwrap() - (1.0 + 0.75 * std::f64::consts::SQRT_2)).abs() < 1e-12);
    let dir = tempfile::tempdir().unwrap();
    let singlet = write(dir.path(), "s.json", "[[0,0,0,0],[0,0.5,-0.5,0],[0,-0.5,0.5,0],[0,0,0,0]]");
    let s = json_of(&enmeas(&["bell", "seesaw", "--state", &singlet, "--dims", "2,2", "--restarts", "8"]));
    assert!((s["value"].as_f64().unwrap() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-6);
}

#[test]
fn spectrum_and_state_tau() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sp.json", r#"{"delta": 1.0, "levels": [0, 1, 2, 5.5, 6.5]}"#);
    let v = json_of(&enmeas(&["spectrum", "--file", &spec]));
    assert_eq!(v["chains"].as_array().unwrap().len(), 2);
    let out = dir.path().join("p.json");
    let p = json_of(&enmeas(&["power-state", "--ebar", "3", "--state-out", out.to_str().unwrap()]));
    let t = json_of(&enmeas(&["tau", "state", "--file", out.to_str().unwrap(), "--delta", "1"]));
    assert!((p["tau"].as_f64().unwrap() - t["tau"].as_f64().unwrap()).abs() < 1e-14);
}

#[test]
fn reproduce_status_matches_checks() {
    let out = enmeas(&["reproduce", "--all"]);
    let checks: Value = serde_json::from_slice(&out.stdout).unwrap();
    let all_pass = checks.as_array().unwrap().iter().all(|c| c["pass"].as_bool().unwrap());
    assert_eq!(out.status.success(), all_pass);
    assert!(checks.as_array().unwrap().iter().any(|c| c["check"].as_str().unwrap().contains("chsh")));
    assert_eq!(enmeas(&["reproduce"]).status.code(), Some(2));
}
