//! Runs every acceptance criterion at full size and prints one PASS/FAIL
//! line per criterion. Exits nonzero if any criterion fails.

use std::process::ExitCode;

use cycle_census::verify::{run_criterion, VerifyOptions, ALL_CRITERIA};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    for id in ALL_CRITERIA {
        let result = run_criterion(id, &opts);
        println!("{}", result.line());
        if !result.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", ALL_CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
