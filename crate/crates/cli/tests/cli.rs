use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn duval(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duval"))
        .args(args)
        .env("DUVAL_OUT_DIR", out_dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn atlases_match_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    for (family, file) in [("A", "atlas_A4.json"), ("D", "atlas_D5.json")] {
        let out = duval(&["resolve", "--family", family, "--k", "2", "--out", file], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let got = std::fs::read_to_string(tmp.path().join(file)).unwrap();
        let want = std::fs::read_to_string(golden(file)).unwrap();
        assert_eq!(got, want, "{file} drifted from its golden copy");
    }
}

#[test]
fn a4_atlas_ends_on_the_cylinder() {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(golden("atlas_A4.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    let last = v["charts"].as_array().unwrap().iter().find(|c| c["id"] == "root/z/z").unwrap();
    assert_eq!(last["strict_transform"], "x^2 + y^2 - 1");
    assert_eq!(last["bracket"]["xy"], "0");
}

#[test]
fn verify_jacobi_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = duval(&["verify", "--suite", "jacobi"], tmp.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS criterion  1"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("verify_jacobi.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["passed"], true);
}

#[test]
fn constant_has_only_alpha_0() {
    let tmp = tempfile::tempdir().unwrap();
    let out = duval(&["fourier", "--group", "G", "--expr", &data("const.expr")], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("coeffs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("q,alpha_0"));
    for l in lines {
        let a0: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((a0 - 3.0).abs() < 1e-12);
    }
}

#[test]
fn syntax_errors_report_the_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = duval(&["fourier", "--group", "G", "--expr", &data("bad.expr")], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "syntax");
    assert_eq!(err["error"]["column"], 3);
}

#[test]
fn missing_inputs_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = duval(&["lift", "--atlas", &golden("atlas_A4.json").display().to_string()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = duval(&["resolve", "--family", "A", "--k", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lift_report_and_point_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let atlas = golden("atlas_A4.json").display().to_string();
    let expr = data("flat_exp_cos.expr");
    let out = duval(
        &["--seed", "3", "lift", "--atlas", &atlas, "--expr", &expr, "--N", "20", "--samples", "10"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["convergence"]["passed"], true);
    let csv = std::fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("N,sup_error,tail_bound,bound\n"));

    let args = ["lift", "eval", "--atlas", &atlas, "--expr", &expr, "--N", "20", "--chart", "root/z/z", "--point", "0.6,-0.8,0.3"];
    let out = duval(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (h, r) = (v["H"].as_f64().unwrap(), v["reference"].as_f64().unwrap());
    assert!((h - r).abs() < 1e-12, "{h} vs {r}");

    let out = duval(&["eval", "--atlas", &atlas, "--expr", &expr, "--N", "20", "--at", "0.15,-0.2,0.5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let h = v["charts"][0]["H"].as_f64().unwrap();
    assert!((h - v["reference"].as_f64().unwrap()).abs() < 1e-12);

    let out = duval(&["eval", "--atlas", &atlas, "--expr", &expr, "--N", "20", "--at", "1,1,1"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_all_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = duval(&["verify", "--suite", "all", "--seed", "7"], dir);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("PASS criterion  9"), "{stdout}");
    }
    let (x, y) = (read_dir(a.path()), read_dir(b.path()));
    assert!(x.len() > 10);
    assert!(x.keys().any(|k| k.ends_with(".csv")));
    assert_eq!(x, y);
}
