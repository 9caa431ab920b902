//! Acceptance gate: every criterion at its reference scale, exact comparison,
//! one PASS/FAIL line each. Runs without the libtest harness so the lines are
//! always shown; exits nonzero if any criterion does not pass.

use std::process::ExitCode;

use voa_forge::suite::CRITERIA;
use voa_forge::verify::Outcome;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for c in CRITERIA.iter() {
        let r = c.run();
        let verdict = if r.outcome == Outcome::Pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{:>2}] {:<20} {}", c.number, c.id, c.title);
        if r.outcome != Outcome::Pass {
            println!("     {}", r.summary());
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria pass", CRITERIA.len(), CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
