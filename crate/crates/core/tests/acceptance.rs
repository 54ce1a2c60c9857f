use std::io::Write;

use pqlap::verify::{run_criteria, CriterionReport, VerifyConfig, CRITERIA};

/// Written straight to stderr so the lines show without `--nocapture`.
fn show(r: &CriterionReport) {
    let _ = writeln!(std::io::stderr().lock(), "{r}");
}

#[test]
fn acceptance_criteria() {
    let reports = run_criteria(&VerifyConfig::default(), &[]).expect("all names valid");
    assert_eq!(reports.len(), CRITERIA.len());
    for r in &reports {
        show(r);
    }
    let failed: Vec<_> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn coarse_mesh_fails_bifurcation_limit_with_discretization_diagnostic() {
    let cfg = VerifyConfig {
        elements: 8,
        ..VerifyConfig::default()
    };
    let reports = run_criteria(&cfg, &["bifurcation-zero".to_string()]).unwrap();
    show(&reports[0]);
    assert!(!reports[0].passed);
    assert!(reports[0].detail.contains("discretization error"));
}

#[test]
fn unknown_criterion_is_rejected() {
    assert!(run_criteria(&VerifyConfig::default(), &["nope".to_string()]).is_err());
}
