//! Full certificate battery: one pass/fail line per criterion.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

#[test]
fn acceptance() {
    let outcomes = nilnorm::checks::run_all(1);
    assert_eq!(outcomes.len(), 11);
    let mut failed = 0usize;
    for o in &outcomes {
        println!(
            "criterion {:2} [{}] {} ({:.2}s): {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} criteria failed");
}
