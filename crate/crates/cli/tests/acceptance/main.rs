//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. An optional argument filters criteria by
//! substring.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if let false = $cond {
            return Err(format!($($fmt)+));
        }
    };
}

#[path = "../common/mod.rs"]
mod common;

fn run_guarded(f: fn() -> Check) -> Check {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .map_or_else(|| "panicked".into(), |m| format!("panicked: {m}"))),
    }
}

fn main() -> ExitCode {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let all: [formulas::Example; 10] = [
        ("formula oracle suite", formulas::run),
        ("gradient check on 50 random nets", criteria::gradient_check),
        ("power sampling distribution", criteria::power_distribution),
        ("welch agreement on 20 reference pairs", criteria::welch_reference),
        ("binary-task equivalence of margin, lc and entropy", criteria::binary_equivalence),
        ("cluster-margin singleton containment", criteria::cluster_margin_containment),
        ("scenario constants", criteria::scenario_constants),
        ("desk-scale study direction", study::direction),
        ("end-to-end determinism", study::determinism),
        ("label-access audit", study::label_audit),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in all {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let result = run_guarded(check);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("PASS  {name} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
