use std::process::{Command, Output};

use serde_json::Value;

fn hrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrl"))
        .args(args)
        .env("HRL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        Value::Object(m) => {
            m.remove("timing");
        }
        _ => {}
    }
}

#[test]
fn constants_n5_p2() {
    let out = hrl(&[
        "constants",
        "--n",
        "5",
        "--p",
        "2",
        "--alpha",
        "0",
        "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "constants");
    assert_eq!(v["outputs"]["value"].as_f64(), Some(1.5625));
    assert_eq!(v["status"], "ok");
}

#[test]
fn degenerate_constant_exits_zero() {
    let out = hrl(&[
        "constants",
        "--n",
        "4",
        "--p",
        "2",
        "--alpha",
        "0",
        "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outputs"]["value"].as_f64(), Some(0.0));
    assert_eq!(v["outputs"]["degenerate"], true);
}

#[test]
fn hardy_verify_passes() {
    let out = hrl(&[
        "verify",
        "--kind",
        "hardy",
        "--n",
        "3",
        "--p",
        "2",
        "--alpha",
        "0",
        "--samples",
        "200",
        "--seed",
        "7",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["outputs"]["violations"], 0);
}

#[test]
fn alpha_sweep_has_two_zeros() {
    let out = hrl(&[
        "sweep",
        "--target",
        "constants",
        "--n",
        "5",
        "--p",
        "2",
        "--k",
        "2",
        "--range",
        "alpha=-2:6:9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 9);
    let zeros: Vec<f64> = rows
        .iter()
        .filter(|r| r["outputs"]["value"].as_f64() == Some(0.0))
        .map(|r| r["inputs"]["alpha"].as_f64().unwrap())
        .collect();
    assert_eq!(zeros, vec![-1.0, 5.0]);
}

#[test]
fn alpha_sweep_csv_file() {
    let dir = std::env::temp_dir().join(format!("hrl-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("alpha.csv");
    let out = hrl(&[
        "sweep",
        "--target",
        "constants",
        "--n",
        "5",
        "--p",
        "2",
        "--k",
        "2",
        "--values",
        "alpha=-1,0",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,p,alpha,k,j,q,lambda,a,gamma,h,tau,eps,value,log_value,degenerate,status,error"
    );
    assert_eq!(lines.count(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn eps_sweep_of_sharpness_is_monotone() {
    let out = hrl(&[
        "sweep",
        "--target",
        "sharpness",
        "--family",
        "rellich",
        "--n",
        "5",
        "--p",
        "2",
        "--k",
        "2",
        "--values",
        "eps=0.1,0.03,0.01,0.003",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let q: Vec<f64> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["outputs"]["quotient"].as_f64().unwrap())
        .collect();
    assert_eq!(q.len(), 4);
    assert!(q.windows(2).all(|w| w[1] <= w[0]), "{q:?}");
    assert!(q[3] >= 1.5625);
}

#[test]
fn empty_range_is_empty_table() {
    let out = hrl(&[
        "sweep",
        "--target",
        "constants",
        "--n",
        "5",
        "--p",
        "2",
        "--range",
        "alpha=0:1:0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), Value::Array(vec![]));
    let out = hrl(&[
        "sweep",
        "--target",
        "constants",
        "--n",
        "5",
        "--p",
        "2",
        "--range",
        "alpha=0:1:0",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
}

#[test]
fn runs_are_deterministic() {
    let args = [
        "sweep",
        "--target",
        "verify",
        "--kind",
        "rellich",
        "--n",
        "5",
        "--p",
        "2",
        "--samples",
        "20",
        "--seed",
        "3",
        "--values",
        "alpha=0,1,2",
    ];
    let mut a = json(&hrl(&args));
    let mut b = json(&hrl(&args));
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn bad_field_exits_two_and_names_it() {
    let out = hrl(&["constants", "--n", "5", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`p`"));

    let out = hrl(&["verify", "--kind", "nope", "--n", "3", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`kind`"));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = std::env::temp_dir().join(format!("hrl-cli-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "n = 3\np = 2.0\nk = 2\n").unwrap();
    let out = hrl(&["constants", "--config", path.to_str().unwrap(), "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outputs"]["value"].as_f64(), Some(1.5625));

    std::fs::write(&path, "n = 3\nbogus = 1\n").unwrap();
    let out = hrl(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failed_residual_exits_one() {
    let out = hrl(&[
        "residual",
        "--kind",
        "p-laplace",
        "--n",
        "3",
        "--p",
        "2",
        "--q",
        "6",
        "--tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "verification_failed");
}
