//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits non-zero when a criterion fails outside the documented deviations.

use rotalign::acceptance::{run_criterion, CRITERIA, KNOWN_DEVIATIONS};
use rotalign::RunContext;
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let ctx = RunContext { out: scratch.path().to_path_buf(), serial: false, seed: 20_240_601 };
    let mut unexpected = Vec::new();
    for (id, _, _) in CRITERIA {
        let start = Instant::now();
        match run_criterion(id, scratch.path(), &ctx) {
            Ok(r) => {
                println!("{} ({:.1} s)", r.line(), start.elapsed().as_secs_f64());
                for s in r.unexpected_failures() {
                    unexpected.push(format!("{id}/{}", s.name));
                }
                for s in r.checks.iter().filter(|s| !s.pass) {
                    if KNOWN_DEVIATIONS.contains(&(id, s.name.as_str())) {
                        println!("     known deviation: {id}/{}", s.name);
                    }
                }
            }
            Err(e) => {
                println!("FAIL [{id:>2}] error: {e}");
                unexpected.push(format!("{id}: {e}"));
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria pass except documented deviations");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
