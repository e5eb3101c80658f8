//! Acceptance battery: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Criteria serialize through a lock so their
//! wall-clock budgets are not distorted by parallel test scheduling.
//!
//! Run with:  cargo test --release --test acceptance -- --nocapture

use std::sync::Mutex;

use elldlog::accept;
use elldlog::config::RunConfig;

static LOCK: Mutex<()> = Mutex::new(());

fn run(name: &str, f: fn(&RunConfig) -> elldlog_core::Result<String>) {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = RunConfig::default();
    match f(&cfg) {
        Ok(line) => println!("ACCEPTANCE {name}: PASS - {line}"),
        Err(e) => {
            println!("ACCEPTANCE {name}: FAIL - {e}");
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn criterion_1_presentations() {
    run("1 presentations", accept::criterion_presentations);
}

#[test]
fn criterion_2_trap_bound() {
    run("2 trap-bound", accept::criterion_traps);
}

#[test]
fn criterion_3_splitting_equivalence() {
    run("3 splitting-equivalence", accept::criterion_splitting);
}

#[test]
fn criterion_4_pgl2_machinery() {
    run("4 pgl2-machinery", accept::criterion_pgl2);
}

#[test]
fn criterion_5_descent_steps() {
    run("5 descent-steps", accept::criterion_descent_steps);
}

#[test]
fn criterion_6_linear_algebra() {
    run("6 linear-algebra", accept::criterion_linear_algebra);
}

#[test]
fn criterion_7_end_to_end() {
    run("7 end-to-end", accept::criterion_end_to_end);
}

#[test]
fn criterion_8_divisor_calculus() {
    run("8 divisor-calculus", accept::criterion_divisors);
}
