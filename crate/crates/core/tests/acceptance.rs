//! Full-budget verification gate.
//!
//! Runs every cross-check at the path counts the gates are stated for and
//! prints one line per check. Run with `--nocapture` to see the lines as
//! they complete:
//!
//! ```text
//! cargo test -p decayrank --test acceptance -- --nocapture
//! ```

use decayrank::verify::{run_all, Budget};

#[test]
fn all_checks_pass_at_full_budget() {
    let outcomes = run_all(Budget::Full);
    let mut failed = 0;
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {} {} ({:.2}s): {}", o.id, o.name, o.seconds, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} of {} checks failed", outcomes.len());
}
