use std::path::Path;
use std::process::{Command, Output};

fn pdpstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdpstar")).args(args).env_remove("PDPSTAR_WORKERS").output().unwrap()
}

fn model(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(name).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn infinite_analytic_starts_at_one() {
    let o = pdpstar(&["analytic", "--model", "infinite", "--tmax", "1", "--steps", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# pdpstar-csv v1"));
    assert!(lines.next().unwrap().starts_with("# config "));
    assert_eq!(lines.next(), Some("t,v3,re_vm,im_vm"));
    assert_eq!(lines.next(), Some("0,1,1,0"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = pdpstar(&["mc", "--n-bath", "10", "--traj", "20000", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 16);
    assert_eq!(manifest["config"]["seed"], pdpstar_cli::DEFAULT_SEED);
    assert_eq!(manifest["summary"]["passed"], true);
}

#[test]
fn configuration_errors_exit_2() {
    let o = pdpstar(&["mc", "--engine", "pdp2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--model infinite"));

    let o = pdpstar(&["mc", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdpstar(&["mc", "--traj", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdpstar(&["oracle", "--n-bath", "40"]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdpstar(&["mc", "--workers", "0", "--traj", "10"]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdpstar(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_model_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    let text = std::fs::read_to_string(model("spinstar_n1.model")).unwrap();
    let mut spec: serde_json::Value = serde_json::from_str(&text).unwrap();
    spec["terms"][1]["b"][0].as_array_mut().unwrap().pop();
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = pdpstar(&["generic", "--model-file", path.to_str().unwrap(), "--traj", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("terms[1].b[0]"), "{}", stderr(&o));

    let mut spec: serde_json::Value = serde_json::from_str(&text).unwrap();
    spec["terms"].as_array_mut().unwrap().pop();
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = pdpstar(&["generic", "--model-file", path.to_str().unwrap(), "--traj", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerance"), "{}", stderr(&o));
}

#[test]
fn generic_run_lists_every_entry() {
    let o = pdpstar(&["generic", "--model-file", &model("random_2x3.model"), "--traj", "4000", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(3).collect();
    assert_eq!(rows.len(), 4 * 4);
    assert!(rows[0].starts_with("0,0,0,"));
}

#[test]
fn model_oracle_has_unit_trace() {
    let o = pdpstar(&["oracle", "--model-file", &model("spinstar_n2_form2.model"), "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let diag: Vec<f64> = text
        .lines()
        .skip(3)
        .filter_map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1] == c[2]).then(|| c[3].parse().unwrap())
        })
        .collect();
    for pair in diag.chunks(2) {
        assert!((pair[0] + pair[1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn selftest_reports_and_detects_mutation() {
    let o = pdpstar(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(checks.len() >= 9);
    assert!(checks.iter().all(|l| l.starts_with("PASS") && l.contains("tolerance=")));

    let o = pdpstar(&["selftest", "--mutate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}
