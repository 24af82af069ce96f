//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use mgof_core::acceptance::{run_all, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    let outcomes = run_all(DEFAULT_SEED, None);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failures: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.line())
        .collect();
    assert!(
        failures.is_empty(),
        "acceptance criteria failed:\n{}",
        failures.join("\n")
    );
}
