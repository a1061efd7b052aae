//! Acceptance criteria 1–12, run sequentially so that the runtime limits are
//! measured without competing test threads. Prints one line per criterion
//! straight to stderr, so the report is visible without `--nocapture`.

use parabolic::cli::suite::{run_criteria, SuiteConfig};
use std::io::Write;

#[test]
fn acceptance_criteria() {
    let checks = run_criteria(&[], &SuiteConfig::default());
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for ch in &checks {
        writeln!(
            err,
            "criterion {:>2} {} — {}: measured {:.3e} (tol {:.0e}), {:.1} s; {}",
            ch.id,
            if ch.passed { "PASS" } else { "FAIL" },
            ch.name,
            ch.measured,
            ch.tolerance,
            ch.seconds,
            ch.detail
        )
        .unwrap();
        if !ch.passed {
            failed.push(ch.id.clone());
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
