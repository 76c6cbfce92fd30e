//! Acceptance table at desk scale: one PASS/FAIL line per criterion.
//!
//! A FAIL line is a measured outcome, not a harness error; the target only
//! fails if the suite cannot produce its twelve rows.

use polyspike::config::RunConfig;
use polyspike::verify::{verify_all, VerifyOptions, NAMES};

fn main() {
    let config = RunConfig::defaults(8);
    let report = verify_all(&config, VerifyOptions::quick()).expect("acceptance suite runs");
    println!("acceptance (quick): ells {:?}, h = {}", report.options.ells, report.options.h);
    print!("{}", report.table());
    assert_eq!(report.rows.len(), NAMES.len());
    for (i, row) in report.rows.iter().enumerate() {
        assert_eq!(row.id, i + 1);
        assert_eq!(row.name, NAMES[i]);
        assert!(!row.measured.is_empty(), "criterion {} produced no measurement", row.id);
    }
}
