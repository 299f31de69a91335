use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cohspace"));
    c.env_remove("COHSPACE_THREADS");
    c
}

fn run_config(dir: &Path, name: &str, cfg: &Value, extra: &[&str]) -> Output {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_vec(cfg).unwrap()).unwrap();
    bin().arg("--config").arg(&path).args(extra).output().unwrap()
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().find(|l| l.starts_with("{\"error\"")).unwrap_or_else(|| panic!("no error line in {text}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn kernel_eval_trivial() {
    let o = bin()
        .args(["kernel", "eval", "--space", r#"{"kind":"trivial","dim":2}"#])
        .args(["--z", "[[1,0],[0,0]]", "--z2", "[[0,0],[1,0]]"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v, json!({"re": 0.0, "im": 0.0}));
    // no --out and no --report: the report goes to stderr
    let r: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(r["seed"], 0);
    assert_eq!(r["command"], "kernel-eval");
}

#[test]
fn spec_solve_oscillator_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let o = bin()
        .args(["spec-solve", "--model", r#"{"model":"oscillator","hbar_omega":1}"#, "--interval", "0,10"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let energies: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(energies.len(), 10);
    for (n, e) in energies.iter().enumerate() {
        assert!((e - (n as f64 + 0.5)).abs() < 1e-10);
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["payload"]["format"], "csv");
    assert_eq!(report["summary"]["levels"], 10);
}

#[test]
fn kicked_top_report_is_chaotic() {
    let dir = tempfile::tempdir().unwrap();
    let (th, ph) = (1.0f64, 0.7f64);
    let z0 = json!([[(th / 2.0).cos(), 0.0], [(th / 2.0).sin() * ph.cos(), (th / 2.0).sin() * ph.sin()]]);
    let cfg = json!({
        "command": "dyn-lyapunov",
        "system": {"kind": "kicked_top", "two_j": 20, "k": 3.0, "p": std::f64::consts::FRAC_PI_2, "z0": z0, "kicks": 200},
        "output": {"path": dir.path().join("ly.csv").to_str().unwrap()}
    });
    let o = run_config(dir.path(), "ly", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("ly.csv.report.json")).unwrap()).unwrap();
    assert!(report["summary"]["lambda_max"].as_f64().unwrap() > 0.1);
}

fn determinism_configs(dir: &Path) -> Vec<Value> {
    let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
    vec![
        json!({"command": "kernel-check", "space": {"kind": "klauder", "modes": 1}, "samples": 30, "seed": 11, "output": {"path": p("a.json")}}),
        json!({"command": "qspace-build", "space": {"kind": "spin", "exponent": 3}, "samples": 8, "seed": 3, "output": {"path": p("b.json")}}),
        json!({"command": "kernel-gram", "space": {"kind": "spin", "exponent": 2},
               "points": [[[1,0],[0,0]], [[0.6,0],[0,0.8]], [[0,0],[1,0]]], "output": {"path": p("c.csv")}}),
        json!({"command": "dyn-tdvp", "space": {"kind": "spin", "exponent": 4},
               "energy": {"kind": "spin_quadratic", "linear": [0.3, 0.0, 1.0], "quadratic": [[0,0,0],[0,0,0],[0,0,0.2]]},
               "z0": [[0.8,0],[0.6,0]], "tspan": [0, 3], "samples": 31, "output": {"path": p("d.csv")}}),
        json!({"command": "lie-evolve", "algebra": {"kind": "qubit"}, "hamiltonian": [[0,0],[0,0],[0,0],[1,0]],
               "state": {"vector": [[1,0],[0,0]]}, "observables": ["s1", "s2", "s3"], "tspan": [0, 2], "samples": 11,
               "output": {"path": p("e.csv")}}),
        json!({"command": "dyn-coherent", "space": {"kind": "klauder", "modes": 1}, "z0": [[0,0],[0.5,0.2]],
               "hamiltonian": [[[0,0],[0,0]],[[0,0],[1,0]]], "tspan": [0, 5], "samples": 21, "output": {"path": p("f.csv")}}),
    ]
}

#[test]
fn payloads_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (i, cfg) in determinism_configs(dir.path()).iter().enumerate() {
        let path = cfg["output"]["path"].as_str().unwrap().to_string();
        let o = run_config(dir.path(), &format!("cfg{i}"), cfg, &[]);
        assert!(o.status.success(), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        let first = std::fs::read(&path).unwrap();
        let o = run_config(dir.path(), &format!("cfg{i}"), cfg, &[]);
        assert!(o.status.success());
        assert_eq!(first, std::fs::read(&path).unwrap(), "{cfg}");
    }
}

#[test]
fn report_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for (i, cfg) in determinism_configs(dir.path()).iter().enumerate() {
        let path = cfg["output"]["path"].as_str().unwrap().to_string();
        assert!(run_config(dir.path(), &format!("r{i}"), cfg, &[]).status.success());
        let first = std::fs::read(&path).unwrap();
        let report: Value = serde_json::from_slice(&std::fs::read(format!("{path}.report.json")).unwrap()).unwrap();
        let echo = report["config"].clone();
        assert!(echo.get("seed").is_some());
        std::fs::remove_file(&path).unwrap();
        assert!(run_config(dir.path(), &format!("echo{i}"), &echo, &[]).status.success());
        assert_eq!(first, std::fs::read(&path).unwrap());
        let report2: Value = serde_json::from_slice(&std::fs::read(format!("{path}.report.json")).unwrap()).unwrap();
        assert_eq!(report2["config"], echo);
    }
}

#[test]
fn emitted_basis_is_accepted_by_quantize() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("basis.json");
    let o = bin()
        .args(["qspace", "build", "--space", r#"{"kind":"spin","exponent":2}"#, "--samples", "6", "--seed", "5"])
        .arg("--out")
        .arg(&basis)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b: Value = serde_json::from_slice(&std::fs::read(&basis).unwrap()).unwrap();
    assert_eq!(b["rank"], 3);
    // quarter turn about z, a unitary coherent map
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = json!([[[s, -s], [0, 0]], [[0, 0], [s, s]]]);
    let o = bin()
        .args(["quantize", "map", "--basis"])
        .arg(&basis)
        .args(["--matrix", &m.to_string()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let op: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(op["rank"], 3);
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(report["summary"]["unitarity_defect"].as_f64().unwrap() < 1e-8);
}

#[test]
fn threads_flag_and_env_agree() {
    let dir = tempfile::tempdir().unwrap();
    let pts: Vec<Value> = (0..12)
        .map(|k| {
            let t = 0.2 + 0.25 * k as f64;
            json!([[t.cos(), 0.0], [t.sin() * 0.6, t.sin() * 0.8]])
        })
        .collect();
    let cfg = json!({"command": "kernel-gram", "space": {"kind": "spin", "exponent": 3}, "points": pts});
    let one = run_config(dir.path(), "g1", &cfg, &[]);
    let flag = run_config(dir.path(), "g2", &cfg, &["--threads", "4"]);
    let path = dir.path().join("g1.json");
    let env = bin().arg("--config").arg(&path).env("COHSPACE_THREADS", "3").output().unwrap();
    assert!(one.status.success() && flag.status.success() && env.status.success());
    assert_eq!(one.stdout, flag.stdout);
    assert_eq!(one.stdout, env.stdout);
    let r: Value = serde_json::from_slice(&env.stderr).unwrap();
    assert_eq!(r["threads"], 3);
}

#[test]
fn failed_checks_exit_one_with_payload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("psd.json");
    let o = bin()
        .args(["kernel-check", "--space", r#"{"kind":"spin","exponent":0.6}"#])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o)["error"], "kernel-not-psd");
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(v["min_eigenvalue"].as_f64().unwrap() < -1e-6);
    assert_eq!(v["passed"], false);

    let mut cfg = json!({
        "command": "causal-check",
        "kernel": {"kind": "causal_exponent", "coupling": 0.3},
        "independence": "light_cone",
        "normal": [[[{"site": [0, 0], "value": [1.0, 0.0]}], [{"site": [0, 5], "value": [0.5, 0.0]}]]]
    });
    let o = run_config(dir.path(), "causal", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    cfg["tol"] = json!(-1.0);
    let o = run_config(dir.path(), "causal", &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o)["error"], "check-failed");
}

#[test]
fn missing_inputs_exit_two() {
    let o = bin().args(["--config", "/no/such/config.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"], "io");
    let o = bin().args(["kernel-eval", "--space", "/no/such/space.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["--bogus-flag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["exit_code"], 2);
}

fn valid_base() -> Value {
    json!({
        "command": "kernel-eval",
        "space": {"kind": "spin", "exponent": 2},
        "z": [[1, 0], [0, 0]],
        "z2": [[0.6, 0], [0, 0.8]]
    })
}

fn malformed() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[a-z]{1,12}".prop_map(|c| {
            let mut v = valid_base();
            v["command"] = format!("x-{c}").into();
            v
        }),
        prop::sample::select(vec!["space", "z", "z2", "command"]).prop_map(|k| {
            let mut v = valid_base();
            v.as_object_mut().unwrap().remove(k);
            v
        }),
        "[a-z]{1,8}".prop_map(|k| {
            let mut v = valid_base();
            v[format!("unknown_{k}")] = 1.into();
            v
        }),
        any::<i64>().prop_map(|n| {
            let mut v = valid_base();
            v["z"] = n.into();
            v
        }),
        Just(json!({"command": "kernel-eval", "space": {"kind": "spin", "exponent": 2}, "z": [[1,0],[0,0]], "z2": [[1,0],[0,0]], "threads": 0})),
        Just(json!({"command": "spec-solve", "model": {"model": "oscillator"}, "interval": [0, 1], "output": {"format": "xml"}})),
    ]
}

fn domain_errors() -> impl Strategy<Value = Value> {
    prop_oneof![
        // off-sphere label
        (1.1f64..5.0).prop_map(|r| {
            let mut v = valid_base();
            v["z"] = json!([[r, 0], [0, 0]]);
            v
        }),
        // inadmissible spin exponent fails its PSD certificate
        (0.1f64..0.9).prop_map(|e| json!({"command": "kernel-check", "space": {"kind": "spin", "exponent": e}, "samples": 40})),
        // algebra that does not close on the observables
        (0.5f64..2.0).prop_map(|h| json!({
            "command": "lie-evolve", "algebra": {"kind": "qubit"}, "hamiltonian": [[0,0],[0,0],[0,0],[h,0]],
            "state": {"vector": [[1,0],[0,0]]}, "observables": ["s1"], "tspan": [0, 1], "samples": 3
        })),
        // not a density matrix
        (1.5f64..3.0).prop_map(|p| json!({
            "command": "lie-evolve", "algebra": {"kind": "qubit"}, "hamiltonian": [[0,0],[0,0],[0,0],[1,0]],
            "state": {"probabilities": [p, 0.0]}, "observables": ["s1", "s2"], "tspan": [0, 1], "samples": 3
        })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn malformed_configs_exit_two(cfg in malformed()) {
        let dir = tempfile::tempdir().unwrap();
        let o = run_config(dir.path(), "bad", &cfg, &[]);
        prop_assert_eq!(o.status.code(), Some(2));
        prop_assert_eq!(&stderr_error(&o)["exit_code"], &json!(2));
    }

    #[test]
    fn domain_errors_exit_one(cfg in domain_errors()) {
        let dir = tempfile::tempdir().unwrap();
        let o = run_config(dir.path(), "dom", &cfg, &[]);
        prop_assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
        prop_assert_eq!(&stderr_error(&o)["exit_code"], &json!(1));
    }
}
