//! Exact combinatorial kernels for the sign-driven walk.
//!
//! `p(x, y)` is the probability that a simple random walk started at the
//! origin sits at `y` after `x` steps. It is extended to a total function:
//! arguments outside the cone (`|y| > x`) or with mismatched parity give an
//! exact zero, which keeps every downstream product formula valid without
//! case splits.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dyadic::Dyadic;
use crate::Error;

/// A lattice point of the triangular index set: time `x`, position `y`.
///
/// Valid sites satisfy `|y| <= x` and `x + y` even; membership in the index
/// set of a horizon `n` additionally requires `x < n`, checked where `n` is
/// known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    x: u64,
    y: i64,
}

impl Site {
    pub fn new(x: u64, y: i64) -> Result<Self, Error> {
        if !site_valid(x, y) {
            return Err(Error::InvalidSite { x, y });
        }
        Ok(Site { x, y })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn y(&self) -> i64 {
        self.y
    }
}

/// Cone and parity test for a raw `(x, y)` pair.
pub fn site_valid(x: u64, y: i64) -> bool {
    y.unsigned_abs() <= x && (x as i64 + y) % 2 == 0
}

/// Binomial coefficient with the out-of-range convention `C(a, b) = 0` for
/// `b < 0` or `b > a`. Computed by the multiplicative running product, which
/// keeps intermediates at the size of the result.
pub fn binomial(a: u64, b: i64) -> BigInt {
    if b < 0 || b as u64 > a {
        return BigInt::zero();
    }
    let k = (b as u64).min(a - b as u64);
    let mut acc = BigInt::one();
    for i in 1..=k {
        acc = acc * BigInt::from(a - k + i) / BigInt::from(i);
    }
    acc
}

/// Walk transition kernel `p(x, y) = 2^{-x} C(x, (x+y)/2)`, total.
pub fn p(x: u64, y: i64) -> Dyadic {
    if !site_valid(x, y) {
        return Dyadic::zero();
    }
    let up_steps = (x as i64 + y) / 2;
    Dyadic::new(binomial(x, up_steps), x)
}

/// `p(2k, 0)`: probability the walk is back at the origin after `2k` steps.
pub fn return_prob(k: u64) -> Dyadic {
    p(2 * k, 0)
}

/// Successive `p(0,0), p(2,0), p(4,0), ...` as floats, via the ratio
/// recurrence `p(2k,0) = p(2k-2,0) * (2k-1)/(2k)`.
pub fn return_probs_f64(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut v = 1.0f64;
    for k in 0..count {
        if k > 0 {
            v *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        out.push(v);
    }
    out
}
