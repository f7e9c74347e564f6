//! Acceptance criteria, one printed PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the table.

use iag_core::harness::suite::{run_suite, SUITE_TIME_BUDGET};

#[test]
fn acceptance_suite() {
    let report = run_suite();
    for line in report.lines() {
        println!("{line}");
    }
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} {} ({})", c.id, c.name, c.detail))
        .collect();
    assert_eq!(report.criteria.len(), 10);
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
    assert!(
        report.wall_time_seconds <= SUITE_TIME_BUDGET,
        "suite took {:.1} s",
        report.wall_time_seconds
    );
}
