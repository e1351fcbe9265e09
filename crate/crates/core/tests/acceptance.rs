//! One pass/fail line per acceptance criterion, at full size.
//!
//! Runs as a plain binary so the lines show up in `cargo test` output:
//! `cargo test -p nucstab --test acceptance`.

use std::process::ExitCode;

use nucstab::selftest::{self, SuiteConfig};

fn main() -> ExitCode {
    let outcomes = selftest::run_all(&SuiteConfig::full());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("acceptance: {}/{} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
