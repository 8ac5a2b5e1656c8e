use std::fs;
use std::process::{Command, Output};

fn thermoprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoprep"))
        .args(args)
        .env_remove("THERMOPREP_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn verify_defaults() {
    let out = thermoprep(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = stdout_json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["residuals"]["jarzynski"].as_f64().unwrap().abs() < 1e-10);
    }
}

#[test]
fn run_with_unchanged_hamiltonian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"system": {"model": "pauli",
                       "h0": {"n": 2, "terms": [{"coeff": 0.7, "pauli": "ZI"}, {"coeff": 0.3, "pauli": "XX"}]},
                       "v": {"n": 2, "terms": []}},
            "beta": 1.0, "eps": 0.1}"#,
    )
    .unwrap();
    let tau = dir.path().join("tau.csv");
    let out = thermoprep(&["run", "--config", cfg.to_str().unwrap(), "--tau-out", tau.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = stdout_json(&out);
    assert!(res["trace_distance"].as_f64().unwrap() < 1e-9);
    let csv = fs::read_to_string(&tau).unwrap();
    assert!(csv.starts_with("i,j,re,im\n"));
    assert_eq!(csv.lines().count(), 17);

    let json_out = dir.path().join("res.json");
    let out = thermoprep(&["run", "--config", cfg.to_str().unwrap(), "--backend", "qsp", "--out", json_out.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(res["backend"], "qsp");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"system": {"model": "tfim", "n": 2}, "beta": 1.0, "eps": -1}"#).unwrap();
    assert_eq!(thermoprep(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&bad, "not json").unwrap();
    assert_eq!(thermoprep(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(thermoprep(&["run"]).status.code(), Some(2));

    let high = dir.path().join("high.json");
    fs::write(
        &high,
        r#"{"system": {"model": "tfim", "n": 3}, "beta": 1.0, "eps": 0.05,
            "cutoff": {"kind": "explicit", "w_l": 2.0}}"#,
    )
    .unwrap();
    let out = thermoprep(&["run", "--config", high.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(&cfg, r#"{"variable": "eps", "grid": [0.01, 0.1], "n": 3, "times": [0, 2]}"#).unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = thermoprep(&["sweep-cutoff", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("eps,unitary,t,w_l_star\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

#[test]
fn workdist_and_scaling_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wd.json");
    fs::write(&cfg, r#"{"n": 2}"#).unwrap();
    let out = thermoprep(&["workdist", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("unitary,w,p,w_l_star\n"));

    fs::write(&cfg, r#"{"n_min": 1, "n_max": 2}"#).unwrap();
    let out = thermoprep(&["scaling", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 9);
}

#[test]
fn qsp_phases_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ph.json");
    fs::write(&cfg, r#"{"beta": 1.0, "w_max": 3.0, "w_l": -1.0, "eps": 0.1}"#).unwrap();
    let csv = dir.path().join("ph.csv");
    let out = thermoprep(&["qsp-phases", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    let per_set = summary["phases_per_set"].as_u64().unwrap() as usize;
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("set,index,phi\n"));
    assert_eq!(text.lines().count(), 1 + 2 * per_set);
}
