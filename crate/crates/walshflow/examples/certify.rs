//! Run the exact certification suite and print one line per identity.
//!
//! Everything here is exact arithmetic: the brute-force transform against
//! the closed-form coefficients, both Parseval routes, the projection law,
//! the backward-walk representation, the conditional closed form, and the
//! renewal DPs against enumeration.
//!
//! ```bash
//! cargo run --example certify
//! ```

use walshflow::verify::{all_passed, run_suite};

fn main() {
    let n = 4u64;
    println!("certifying all identities up to horizon {n}\n");
    let checks = run_suite(n, true).unwrap();
    for c in &checks {
        println!(
            "  {} {:<34} {}",
            if c.passed { "ok " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if all_passed(&checks) {
        println!("\nall {} checks passed", checks.len());
    } else {
        println!("\nsome checks FAILED");
        std::process::exit(1);
    }
}
