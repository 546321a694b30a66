//! Print the exact spectrum of the walk endpoint at a small horizon.
//!
//! Lists every admissible site chain with its exact coefficient and its
//! squared mass, checks the masses add up to one, and cross-checks one
//! entry against the brute-force transform.
//!
//! ```bash
//! cargo run --example spectrum_table
//! ```

use num_rational::BigRational;
use num_traits::{One, Zero};
use walshflow::oracle::{brute_force_transform, site_index};
use walshflow::spectral::{coefficient, enumerate_admissible};

fn main() {
    let n = 3u64;
    println!("spectrum at horizon n = {n}: xi_hat(S) = d / sqrt(n)\n");
    println!("{:<28} {:>12} {:>14} {:>12}", "sites", "d", "xi_hat", "mass");

    let mut total_mass = BigRational::zero();
    let mut nonzero = 0usize;
    for set in enumerate_admissible(n).unwrap() {
        let w = coefficient(&set.pairs(), n).unwrap();
        total_mass += w.squared();
        if w.is_zero() {
            continue;
        }
        nonzero += 1;
        let sites = set
            .pairs()
            .iter()
            .map(|(x, y)| format!("({x},{y})"))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "{sites:<28} {:>12} {:>14.8} {:>12}",
            w.d().to_string(),
            w.xi_hat(),
            w.squared().to_string(),
        );
    }
    assert!(total_mass.is_one(), "squared coefficients must sum to 1");
    println!("\n{nonzero} chains carry mass; total mass = {total_mass} (exact)");

    // cross-check one coefficient against the exhaustive transform
    let t = brute_force_transform(n).unwrap();
    let pairs = [(0u64, 0i64), (2, 2)];
    let mask: usize = pairs
        .iter()
        .map(|&(x, y)| 1usize << site_index(x, y))
        .sum();
    let formula = coefficient(&pairs, n).unwrap();
    assert_eq!(formula.d(), &t.coefficient(mask));
    println!(
        "cross-check: closed form and transform agree on {:?} -> d = {}",
        pairs,
        formula.d()
    );
}
