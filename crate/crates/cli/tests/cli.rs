use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fockbundle"))
}

fn input(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "inputs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = bin().args(args).output().expect("binary runs");
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    (out.status.code().expect("exit code"), v, out)
}

fn checks(v: &Value) -> Vec<(String, bool)> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_string(), c["pass"].as_bool().unwrap()))
        .collect()
}

#[test]
fn sample_inputs_succeed() {
    for (sub, file) in [
        ("car-check", "car-check.json"),
        ("implement", "implement-identity.json"),
        ("implement", "implement-random.json"),
        ("cocycle-lie", "cocycle-lie.json"),
        ("cocycle-lie", "cocycle-lie-constant.json"),
        ("lagrangian-equiv", "lagrangian-equiv-alpha.json"),
        ("lagrangian-equiv", "lagrangian-equiv-loop.json"),
        ("gerbe", "gerbe-random.json"),
        ("dirac", "dirac.json"),
        ("fockbundle", "fockbundle.json"),
    ] {
        let (code, v, _) = run(&[sub, "--in", &input(file)]);
        assert_eq!(code, 0, "{sub} {file}: {v}");
        assert_eq!(v["subcommand"], sub);
        assert!(!checks(&v).is_empty());
        assert!(checks(&v).iter().all(|c| c.1));
    }
}

#[test]
fn constant_second_loop_gives_zeros() {
    let (code, v, _) = run(&["cocycle-lie", "--in", &input("cocycle-lie-constant.json")]);
    assert_eq!(code, 0);
    for row in v["result"]["rows"].as_array().unwrap() {
        for key in ["lhs", "rhs"] {
            let z = row[key].as_array().unwrap();
            assert!(z[0].as_f64().unwrap().abs() < 1e-12 && z[1].as_f64().unwrap().abs() < 1e-12, "{row}");
        }
    }
}

#[test]
fn identity_implementer_has_zero_residual() {
    let (code, v, _) = run(&["implement", "--in", &input("implement-identity.json")]);
    assert_eq!(code, 0);
    assert!(v["checks"][0]["value"].as_f64().unwrap() < 1e-14);
}

#[test]
fn obstructed_trivialization_exits_2_with_cycle() {
    let (code, v, _) = run(&["gerbe", "--trivialize", "--in", &input("gerbe-obstructed.json")]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["trivializable"], false);
    let pairing = v["result"]["obstruction"]["pairing"].as_f64().unwrap();
    assert!((pairing.abs() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["result"]["obstruction"]["cycle"].as_array().unwrap().len(), 2);
    // Without the flag the class is only reported.
    let (code, _, _) = run(&["gerbe", "--in", &input("gerbe-obstructed.json")]);
    assert_eq!(code, 0);
}

#[test]
fn failed_expectation_exits_2() {
    let j = r#"{"d":2,"cutoffs":[2,3,4,6],"pair":"alpha","expect":"bounded"}"#;
    let (code, v, _) = run(&["lagrangian-equiv", "--in", j]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["verdict"], "divergent");
}

#[test]
fn input_errors_exit_1_with_error_object() {
    for (sub, j) in [
        ("car-check", "{ not json"),
        ("implement", r#"{"space":{"parity":"odd","d":0,"N":1}}"#),
        ("implement", r#"{"space":{"parity":"odd","d":1,"N":1},"bogus":1}"#),
        ("gerbe", r#"{"nerve":{"charts":2,"doubles":[[0,5]]},"two_cocycle":{"degree":2,"values":{}}}"#),
    ] {
        let (code, v, _) = run(&[sub, "--in", j]);
        assert_eq!(code, 1, "{j}");
        assert!(v["error"]["kind"].is_string() && v["error"]["message"].is_string(), "{v}");
    }
    let (code, v, _) = run(&["car-check", "--tol", "nonsense=1"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "parameter");
}

#[test]
fn reports_embed_used_tolerances() {
    let (code, v, _) = run(&["car-check", "--in", r#"{"pairs":3}"#, "--tol", "car=1e-7"]);
    assert_eq!(code, 0);
    let tol = v["tolerances"].as_object().unwrap();
    assert_eq!(tol["car"], 1e-7);
    assert_eq!(tol["adjoint"], 1e-9);
    assert_eq!(tol.len(), 2);
    assert_eq!(v["checks"][0]["tolerance"], 1e-7);
}

#[test]
fn reports_are_deterministic() {
    let args = ["implement", "--in", &input("implement-random.json")];
    let a = run(&args).2.stdout;
    let b = run(&args).2.stdout;
    assert_eq!(a, b);
    let mut par = args.to_vec();
    par.extend(["--jobs", "2"]);
    assert_eq!(a, run(&par).2.stdout);
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "5"]);
    assert_ne!(a, run(&seeded).2.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("fockbundle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = bin()
        .args(["implement", "--in", &input("implement-identity.json"), "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["subcommand"], "implement");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fock_guard_env_var() {
    let out = bin()
        .args(["implement", "--in", &input("implement-identity.json")])
        .env("FOCKBUNDLE_MAX_FOCK_DIM", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "fock-too-large");
}
