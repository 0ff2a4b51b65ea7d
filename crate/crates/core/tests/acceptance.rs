//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Criteria 1 to 9 run on a single-worker pool and again on eight workers;
//! criterion 10 compares the two JSON reports byte for byte.

use polarlab_core::verify::run_with_determinism;

const SEED: u64 = 20_240_601;

fn main() {
    let report = run_with_determinism(SEED, &[1, 8]).expect("suite runs");
    let mut all = true;
    for c in &report.criteria {
        let ok = c.passed && c.within_time();
        all &= ok;
        let secs = c.elapsed.as_secs_f64();
        println!(
            "criterion {:>2} {} {} ({} checks, {:.1} s of {} s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            c.checks,
            secs,
            c.time_limit_s
        );
        for f in &c.failures {
            println!("    {f}");
        }
        if !c.within_time() {
            println!("    over time budget");
        }
        for (k, v) in &c.metrics {
            println!("    {k} = {v:e}");
        }
    }
    if !all {
        eprintln!("acceptance criteria failed");
        std::process::exit(1);
    }
}
