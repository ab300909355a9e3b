//! One line per acceptance criterion; exits nonzero when any fails.

use std::process::ExitCode;
use std::time::Instant;
use ymlab_core::harness::{run_suite, Suite};

/// Suite and wall-clock budget in seconds.
const CRITERIA: [(Suite, Option<f64>); 12] = [
    (Suite::Plumbing, Some(5.0)),
    (Suite::Curvature, Some(10.0)),
    (Suite::Gradient, Some(30.0)),
    (Suite::Roundtrip, Some(300.0)),
    (Suite::Decay, None),
    (Suite::Reducibility, None),
    (Suite::Eigen, None),
    (Suite::Kato, None),
    (Suite::Heat, None),
    (Suite::Variation, None),
    (Suite::Composition, None),
    (Suite::Degeneration, Some(1800.0)),
];

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        for (suite, _) in CRITERIA {
            println!("{suite}: test");
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (k, (suite, budget)) in CRITERIA.iter().enumerate() {
        let t = Instant::now();
        let outcome = run_suite(*suite);
        let secs = t.elapsed().as_secs_f64();
        let (pass, detail) = match &outcome {
            Ok(r) => {
                let mut lines: Vec<String> = r.checks.iter().map(|c| c.to_string()).collect();
                let in_time = budget.is_none_or(|b| secs < b);
                if let Some(b) = budget {
                    lines.push(format!("{} runtime: {secs:.2}s < {b}s", if in_time { "PASS" } else { "FAIL" }));
                }
                (r.passed() && !r.checks.is_empty() && in_time, lines.join("; "))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {} ({secs:.1}s): {detail}",
            k + 1,
            suite,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
