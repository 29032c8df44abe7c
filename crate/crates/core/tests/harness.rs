use indexlab::checks::{run_scenario, run_scenarios};
use indexlab::par::Exec;
use indexlab::report::{emit_report, read_reports, Format, LIBRARY_VERSION, REPORT_SCHEMA};
use indexlab::scenario::{preset, CheckId, ModelSpec, SymbolSpec};

#[test]
fn runs_are_deterministic_across_execution_modes() {
    let names = ["circle-block-rotated", "split-scalar-bump", "eta-lattice"];
    let scenarios: Vec<_> = names.iter().map(|n| preset(n).unwrap()).collect();
    let par = run_scenarios(&scenarios, Exec::Parallel);
    let seq = run_scenarios(&scenarios, Exec::Sequential);
    for (a, b) in par.iter().zip(&seq) {
        assert_eq!(a.report.without_timing(), b.report.without_timing());
        assert_eq!(a.artifacts, b.artifacts);
    }
}

#[test]
fn records_carry_provenance_and_csvs_are_written() {
    let s = preset("split-mass-plus").unwrap();
    let run = run_scenario(&s, Exec::Parallel);
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&run.report, &run.artifacts, dir.path(), Format::Both).unwrap();
    assert!(written.iter().any(|p| p.to_string_lossy().contains("branches.")));
    assert!(written.iter().any(|p| p.to_string_lossy().contains("w-phases.")));
    let back = read_reports(&dir.path().join("reports.jsonl")).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].schema_version, REPORT_SCHEMA);
    assert_eq!(back[0].library_version, LIBRARY_VERSION);
    assert_eq!(back[0].scenario_hash, s.hash());
    assert_eq!(back[0].without_timing(), run.report.without_timing());
}

#[test]
fn failing_identity_fails_the_report() {
    let mut s = preset("split-mass-plus").unwrap();
    if let ModelSpec::Split { expected_flow, .. } = &mut s.model {
        *expected_flow = Some(5);
    }
    let run = run_scenario(&s, Exec::Sequential);
    assert!(!run.report.passed());
}

#[test]
fn term_errors_are_attributed() {
    // K = 8 is too small for a winding-3 symbol: the check errors instead of passing.
    let mut s = preset("circle-winding-3").unwrap();
    s.numerics.truncation = 8;
    s.symbol = Some(SymbolSpec::Winding { k: 5 });
    let run = run_scenario(&s, Exec::Sequential);
    let rec = run.report.records().find(|c| c.check == CheckId::ConjugationFlow).unwrap();
    let err = rec.error.as_ref().expect("expected an error");
    assert!(err.term.is_some(), "{err:?}");
    assert!(!run.report.passed());
}
