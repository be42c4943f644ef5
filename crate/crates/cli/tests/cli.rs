use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaugebc"))
}

#[test]
fn gen_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let st = bin().args(["gen", "--disk", "16", "--out"]).arg(d.path()).status().unwrap();
        assert!(st.success());
    }
    let x = fs::read(a.path().join("disk16.json")).unwrap();
    let y = fs::read(b.path().join("disk16.json")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn dn_writes_raw_and_reduced_csv() {
    let d = tempfile::tempdir().unwrap();
    assert!(bin().args(["gen", "--disk", "16", "--out"]).arg(d.path()).status().unwrap().success());
    let out = d.path().join("dn");
    let st = bin()
        .args(["dn", "--csv", "--mesh"])
        .arg(d.path().join("disk16.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let raw = fs::read_to_string(out.join("lambda.csv")).unwrap();
    assert_eq!(raw.lines().count(), 16);
    assert!(raw.lines().all(|l| l.split(',').count() == 16));
    let red = fs::read_to_string(out.join("lambda_reduced.csv")).unwrap();
    assert_eq!(red.lines().count(), 1);
    assert_eq!(red.lines().next().unwrap().split(',').count(), 1);
}

#[test]
fn verify_suite_passes_and_is_deterministic() {
    let run = || bin().args(["verify", "--suite", "default"]).output().unwrap();
    let a = run();
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(a.stdout, run().stdout);
}

#[test]
fn verify_exit_code_is_nonzero_on_failure() {
    // an absurd residual tolerance makes the residual checks fail
    let o = bin().args(["verify", "--gen", "disk:16", "--tol-res", "1e-300"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["pass"] == false));
}

#[test]
fn invalid_inputs_are_errors() {
    let o = bin().args(["verify", "--gen", "disk:16", "--tol-rank", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["dn", "--gen", "sphere:3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["dn", "--gen", "disk:16", "--mesh", "x.json"]).output().unwrap();
    assert!(!o.status.success());
    let o = bin().args(["dn", "--gen", "circle:16"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn glue_annulus_reports_codimension_drop() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().args(["glue", "--gen", "annulus:16", "--canonical", "--out"]).arg(d.path()).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("glue.json")).unwrap()).unwrap();
    assert_eq!(v["comparison"]["codim_before"], 2);
    assert_eq!(v["comparison"]["codim_after"], 0);
    assert!(d.path().join("glued.json").exists());
}

#[test]
fn decompose_reports_harmonic_dimensions() {
    let o = bin().args(["decompose", "--gen", "annulus:16:1:2"]).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["betti"][1], 1);
    assert_eq!(v["pass"], true);
}
