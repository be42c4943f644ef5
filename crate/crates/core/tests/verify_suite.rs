use gaugebc::verify::{default_suite, run_suite, VerifyOptions};

#[test]
fn default_suite_passes_with_report_schema() {
    let cases = default_suite().unwrap();
    let reports: Vec<_> = run_suite(&cases, &VerifyOptions::default()).into_iter().map(|r| r.unwrap()).collect();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        let failed: Vec<_> = r.failures().iter().map(|c| c.name.clone()).collect();
        assert!(failed.is_empty(), "{}: {failed:?}", r.mesh);
        let v = serde_json::to_value(r).unwrap();
        assert!(v["mesh"].is_string());
        let c = &v["checks"][0];
        for key in ["name", "paper_ref", "value", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    let sigma = reports[2].get("sigma.degeneracy_kernel_dim").unwrap();
    assert!(sigma.pass);
    assert_eq!(reports[3].get("codimension").unwrap().value, 0.0);
}

#[test]
fn suite_reports_are_deterministic() {
    let cases = default_suite().unwrap();
    let opts = VerifyOptions::default();
    let a = serde_json::to_string(&run_suite(&cases, &opts).into_iter().map(|r| r.unwrap()).collect::<Vec<_>>()).unwrap();
    let b = serde_json::to_string(&run_suite(&cases, &opts).into_iter().map(|r| r.unwrap()).collect::<Vec<_>>()).unwrap();
    assert_eq!(a, b);
}
