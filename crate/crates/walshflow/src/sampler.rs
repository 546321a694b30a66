//! Seeded samplers for the spectral measure.
//!
//! The time projection is drawn without touching spectral weights at all:
//! pick the maximal element uniformly, run a doubled-speed simple walk
//! backward from it, and keep the times where the walk sits at zero. The
//! full spectral set is then rebuilt sequentially: the first position from
//! the squared-kernel law, each later increment from the squared chain
//! factor law. All discrete draws are exact inverse-CDF over rational
//! cumulative sums; when a 64-bit uniform cannot separate two boundaries
//! the draw is refined with further 64-bit chunks instead of rounding.
//!
//! Everything is a pure function of a [`SeededSource`], so batches
//! parallelize by index without changing any output.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use std::collections::BTreeMap;

use crate::kernel::{p, return_prob, Site};
use crate::rng::SeededSource;
use crate::spectral::{gap_prob, SpectralSet, TimeSet};
use crate::{Error, Result};

/// Enumeration bound for [`enumerate_walk_zero_sets`]; `4^x_m` paths.
pub const WALK_ZEROS_BOUND: u64 = 10;

/// Backward doubled-speed walk from a uniformly chosen maximal time.
///
/// `values[i]` is the walk position after `i` backward time units (two
/// `+-1` steps each); `values[0] = 0` is the start at the maximal element.
#[derive(Debug, Clone)]
pub struct BackwardWalk {
    n: u64,
    x_m: u64,
    values: Vec<i64>,
}

impl BackwardWalk {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// The uniformly drawn maximal element.
    pub fn x_m(&self) -> u64 {
        self.x_m
    }

    /// Positions indexed by backward time unit, starting at zero.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The zero set of the walk as times in `[0, x_m]`, ascending; always
    /// contains the start.
    pub fn time_set(&self) -> TimeSet {
        let xs: Vec<u64> = (0..=self.x_m)
            .rev()
            .filter(|&i| self.values[i as usize] == 0)
            .map(|i| self.x_m - i)
            .collect();
        TimeSet::new(xs, self.n).expect("zero set is nonempty and in range")
    }
}

/// Runs the backward walk that realizes one projection sample.
pub fn backward_walk(n: u64, src: &SeededSource) -> Result<BackwardWalk> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    let mut draws = src.draws();
    let x_m = draws.next_below(n);
    let mut values = Vec::with_capacity(x_m as usize + 1);
    let mut v = 0i64;
    values.push(v);
    for _ in 0..x_m {
        v += draws.next_sign() + draws.next_sign();
        values.push(v);
    }
    Ok(BackwardWalk { n, x_m, values })
}

/// One projection sample: the zero set of [`backward_walk`].
pub fn sample_r_walk(n: u64, src: &SeededSource) -> Result<TimeSet> {
    Ok(backward_walk(n, src)?.time_set())
}

/// Law of the first chain position at time `x`: `p(x, y)^2 / p(2x, 0)`
/// over positions `y` ascending.
pub fn first_position_law(x: u64) -> Vec<(i64, BigRational)> {
    let norm = return_prob(x).to_rational();
    let mut out = Vec::new();
    let mut y = -(x as i64);
    while y <= x as i64 {
        out.push((y, p(x, y).square().to_rational() / &norm));
        y += 2;
    }
    out
}

/// Law of a chain increment across a time gap: squared chain factor over
/// the gap probability, increments ascending.
pub fn increment_law(gap: u64) -> Vec<(i64, BigRational)> {
    let norm = gap_prob(gap).to_rational();
    let mut out = Vec::new();
    let mut dy = -(gap as i64);
    while dy <= gap as i64 {
        let f = (&p(gap - 1, dy - 1) - &p(gap - 1, dy + 1)).halve();
        out.push((dy, f.square().to_rational() / &norm));
        dy += 2;
    }
    out
}

/// Exact inverse-CDF draw over rational probabilities summing to one.
///
/// The uniform variate is consumed as successive 64-bit chunks; a chunk is
/// added only when the current dyadic interval still straddles a cumulative
/// boundary, so the result is exact with probability one.
pub fn sample_index_exact(
    probs: &[BigRational],
    mut next_chunk: impl FnMut() -> u64,
) -> usize {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = BigRational::zero();
    for p in probs {
        acc += p;
        cumulative.push(acc.clone());
    }
    debug_assert!(acc == BigRational::one());

    let mut numer = BigInt::from(next_chunk());
    let mut bits = 64usize;
    loop {
        let lo = BigRational::new(numer.clone(), BigInt::one() << bits);
        let hi = BigRational::new(&numer + 1, BigInt::one() << bits);
        let idx = cumulative
            .iter()
            .position(|c| *c > lo)
            .expect("uniform variate below total mass");
        if hi <= cumulative[idx] {
            return idx;
        }
        numer = (numer << 64) | BigInt::from(next_chunk());
        bits += 64;
    }
}

/// One spectral-measure sample.
///
/// The projection walk runs on substream 0 of `src` and the position chain
/// on substream 1, so the embedded projection can be reproduced with
/// [`sample_r_walk`] on `src.derive(0)`.
pub fn sample_spectral_set(n: u64, src: &SeededSource) -> Result<SpectralSet> {
    let r = sample_r_walk(n, &src.derive(0))?;
    let mut chain = src.derive(1).draws();
    let xs = r.xs();

    let first = first_position_law(xs[0]);
    let probs: Vec<BigRational> = first.iter().map(|(_, p)| p.clone()).collect();
    let mut y = first[sample_index_exact(&probs, || chain.next_u64())].0;
    let mut sites = vec![Site::new(xs[0], y).expect("in cone")];

    for w in xs.windows(2) {
        let law = increment_law(w[1] - w[0]);
        let probs: Vec<BigRational> = law.iter().map(|(_, p)| p.clone()).collect();
        y += law[sample_index_exact(&probs, || chain.next_u64())].0;
        sites.push(Site::new(w[1], y).expect("in cone"));
    }
    Ok(SpectralSet::from_sites_unchecked(sites, n))
}

/// Ordered batch of spectral samples; sample `i` uses substream `i` and is
/// independent of how the batch is scheduled.
pub fn sample_batch(n: u64, count: u64, src: &SeededSource) -> Result<Vec<SpectralSet>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_spectral_set(n, &src.derive(i)))
        .collect()
}

/// Exact distribution of the zero set of the doubled-speed walk below its
/// start: enumerates all `4^x_m` sign paths.
///
/// Returns pairs of (zero times strictly below `x_m`, probability), keyed
/// ascending. Mixing over a uniform start reproduces the projection law
/// without sampling error, which is how the walk representation is
/// certified.
pub fn enumerate_walk_zero_sets(x_m: u64) -> Result<Vec<(Vec<u64>, BigRational)>> {
    if x_m > WALK_ZEROS_BOUND {
        return Err(Error::HorizonBound {
            n: x_m,
            bound: WALK_ZEROS_BOUND,
            what: "walk zero-set enumeration",
        });
    }
    let steps = 2 * x_m as usize;
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for path in 0u64..1 << steps {
        let mut v = 0i64;
        let mut zeros = Vec::new();
        for unit in 1..=x_m {
            let b0 = path >> (2 * unit - 2) & 1;
            let b1 = path >> (2 * unit - 1) & 1;
            v += if b0 == 1 { 1 } else { -1 };
            v += if b1 == 1 { 1 } else { -1 };
            if v == 0 {
                zeros.push(x_m - unit);
            }
        }
        zeros.sort_unstable();
        *counts.entry(zeros).or_insert(0) += 1;
    }
    let total = BigInt::one() << steps;
    Ok(counts
        .into_iter()
        .map(|(set, c)| (set, BigRational::new(BigInt::from(c), total.clone())))
        .collect())
}
