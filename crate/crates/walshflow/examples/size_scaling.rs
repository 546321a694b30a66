//! How many signs does a typical spectral term involve?
//!
//! Prints the expected projection size over a range of horizons and its
//! ratio to sqrt(n), which settles near 4/(3 sqrt(pi)) ~ 0.7523. Small
//! horizons use exact rationals; large ones switch to floats.
//!
//! ```bash
//! cargo run --release --example size_scaling
//! ```

use walshflow::spectral::{expected_size, size_distribution, ArithMode};

fn main() {
    let target = 4.0 / (3.0 * std::f64::consts::PI.sqrt());
    println!("expected spectral-set size against sqrt(n)\n");
    println!("{:>8} {:>14} {:>12} {:>8}", "n", "E|S|", "E|S|/sqrt n", "mode");
    for k in 0..=14 {
        let n = 1u64 << k;
        let e = expected_size(n).unwrap();
        let ef = e.to_f64();
        println!(
            "{n:>8} {ef:>14.6} {:>12.6} {:>8}",
            ef / (n as f64).sqrt(),
            e.mode().as_str()
        );
    }
    println!("\nlimit constant 4/(3 sqrt(pi)) = {target:.6}");

    // the full distribution at a mid-size horizon, coarse bins
    let n = 1024u64;
    let d = size_distribution(n).unwrap();
    assert_eq!(d.mode(), ArithMode::Float);
    let probs = d.probs_f64();
    println!("\nsize distribution at n = {n} (bins of 8):");
    let mut m = 1usize;
    while m <= 72 {
        let mass: f64 = probs[m - 1..(m + 7).min(probs.len())].iter().sum();
        let bar = "#".repeat((mass * 250.0).round() as usize);
        println!("  {:>3}-{:<3} {mass:>7.4} {bar}", m, m + 7);
        m += 8;
    }
}
