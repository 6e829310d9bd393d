use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn onebit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onebit")).args(args).output().expect("spawn onebit")
}

fn code(args: &[&str]) -> i32 {
    onebit(args).status.code().expect("exit code")
}

fn prefix(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["quantize", "--fn", "abs", "--params", "0.5,0.5", "--n", "64"]), 0);
    assert_eq!(code(&["quantize", "--fn", "const", "--params", "1.2", "--n", "8"]), 2);
    assert_eq!(code(&["quantize", "--fn", "sin", "--n", "512", "--order", "4", "--u-cap", "5"]), 3);
    assert_eq!(code(&["quantize", "--fn", "nope"]), 4);
    assert_eq!(code(&["quantize", "--bogus"]), 4);
    assert_eq!(code(&["rates", "--n", "16,32"]), 4);
    assert_eq!(code(&["quantize", "--n", "32,16"]), 4);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nfn = \"const\"\nparams = [0.3]\nn = [8]\nalphabet = \"int\"\n").unwrap();
    let out = prefix(dir.path(), "run");
    let o = onebit(&["quantize", "--config", cfg.to_str().unwrap(), "--alphabet", "pm1", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.coeffs.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["config"]["alphabet"], "pm1");
    assert_eq!(v["config"]["fn"], "const");
    let q: Vec<f64> = v["result"]["quantization"]["q"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(q, vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
}

#[test]
fn report_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "q");
    assert_eq!(code(&["quantize", "--fn", "abs", "--params", "0.5,0.5", "--n", "128", "--grid", "101", "--out", &out]), 0);
    let text = fs::read_to_string(format!("{out}.report.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "x,f,Q,abs_error,envelope");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{out}.report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
}

#[test]
fn rates_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "r");
    let run = || {
        let args = ["rates", "--fn", "sin", "--n", "16,32,64,128", "--order", "2", "--rule", "stable", "--out", &out];
        assert_eq!(code(&args), 0);
        (fs::read(format!("{out}.csv")).unwrap(), fs::read(format!("{out}.json")).unwrap())
    };
    let (csv_a, json_a) = run();
    let (csv_b, json_b) = run();
    assert_eq!(csv_a, csv_b);
    assert_eq!(json_a, json_b);
    let text = String::from_utf8(csv_a).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "n,sup_interval,l1,l2,sup,u_max,max_abs_coeff,bound_excess");
    assert_eq!(body.len(), 1 + 4 + 1);
    assert!(body[5].starts_with("slope,"));
}

#[test]
fn lattice_and_moments_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "lat");
    assert_eq!(code(&["lattice", "--fn", "bump", "--n", "16,32,64,128", "--alpha", "0,0.5", "--out", &out]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert!(fs::read_to_string(format!("{out}.csv")).unwrap().lines().any(|l| l.starts_with("n,")));
    let out = prefix(dir.path(), "mom");
    assert_eq!(code(&["moments", "--n", "32", "--grid", "11", "--out", &out]), 0);
    let text = fs::read_to_string(format!("{out}.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11);
}

#[test]
fn selftest_passes() {
    let o = onebit(&["selftest", "--seed", "7"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(!s.contains("[FAIL]"));
}
