//! Closed-form spectrum of the rescaled walk endpoint.
//!
//! The endpoint `W(n)` of the sign-driven walk expands over products of
//! signs indexed by subsets of the triangular lattice. A subset carries a
//! nonzero coefficient only if it is *admissible*: strictly increasing
//! times, first site inside the cone, and position increments Lipschitz
//! relative to the time gaps. For an admissible chain the coefficient is an
//! exact dyadic `d` with the global scaling `d / sqrt(n)`.
//!
//! This module also carries the law of the time projection of a
//! spectrally-sampled set (`r_distribution`), and renewal dynamic programs
//! for the size of that projection and for the correlation of the endpoint
//! with an independently perturbed copy. The DPs run on exact rationals up
//! to [`EXACT_HORIZON_BOUND`] and on floats above it, and are certified
//! against exhaustive enumeration by the `verify` module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::dyadic::{ratio_to_f64, Dyadic};
use crate::kernel::{p, return_prob, return_probs_f64, site_valid, Site};
use crate::{Error, Result};

/// Largest horizon that still uses exact rational arithmetic in the
/// dynamic programs; denominators grow like `2^O(n)` past this.
pub const EXACT_HORIZON_BOUND: u64 = 64;

/// Default horizon bound for exhaustive admissible-set enumeration.
pub const DEFAULT_ENUM_BOUND: u64 = 8;

/// Arithmetic mode of a computed value, recorded in output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithMode {
    Exact,
    Float,
}

impl ArithMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithMode::Exact => "exact",
            ArithMode::Float => "float",
        }
    }

    pub fn for_horizon(n: u64) -> Self {
        if n <= EXACT_HORIZON_BOUND {
            ArithMode::Exact
        } else {
            ArithMode::Float
        }
    }
}

/// A number that is exact where the oracle lives and floating where the
/// asymptotics live.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> ArithMode {
        match self {
            Scalar::Exact(_) => ArithMode::Exact,
            Scalar::Float(_) => ArithMode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ratio_to_f64(r.numer(), r.denom()),
            Scalar::Float(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }
}

/// An admissible chain of sites together with its horizon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpectralSet {
    sites: Vec<Site>,
    n: u64,
}

impl SpectralSet {
    /// Validates every site and the chain constraints.
    pub fn new(pairs: &[(u64, i64)], n: u64) -> Result<Self> {
        for &(x, y) in pairs {
            check_in_index_set(x, y, n)?;
        }
        if !is_admissible(pairs, n) {
            return Err(Error::NotAdmissible { n });
        }
        let mut sites: Vec<Site> = pairs
            .iter()
            .map(|&(x, y)| Site::new(x, y).expect("validated"))
            .collect();
        sites.sort();
        Ok(SpectralSet { sites, n })
    }

    pub(crate) fn from_sites_unchecked(sites: Vec<Site>, n: u64) -> Self {
        debug_assert!(is_admissible(
            &sites.iter().map(|s| (s.x(), s.y())).collect::<Vec<_>>(),
            n
        ));
        SpectralSet { sites, n }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// Always false: admissible chains are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn pairs(&self) -> Vec<(u64, i64)> {
        self.sites.iter().map(|s| (s.x(), s.y())).collect()
    }

    /// Time projection of the chain.
    pub fn projection(&self) -> TimeSet {
        TimeSet {
            xs: self.sites.iter().map(|s| s.x()).collect(),
            n: self.n,
        }
    }
}

/// A nonempty set of distinct times in `[0, n)`, kept strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeSet {
    xs: Vec<u64>,
    n: u64,
}

impl TimeSet {
    pub fn new(mut xs: Vec<u64>, n: u64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InvalidTimeSet("empty".into()));
        }
        xs.sort_unstable();
        if xs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTimeSet("duplicate elements".into()));
        }
        if *xs.last().unwrap() >= n {
            return Err(Error::InvalidTimeSet(format!(
                "element {} is outside [0, {n})",
                xs.last().unwrap()
            )));
        }
        Ok(TimeSet { xs, n })
    }

    pub fn xs(&self) -> &[u64] {
        &self.xs
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    /// Always false: time sets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn max_element(&self) -> u64 {
        *self.xs.last().unwrap()
    }
}

/// A coefficient `d` with its horizon: the spectral value is `d / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralWeight {
    d: Dyadic,
    n: u64,
}

impl SpectralWeight {
    pub fn new(d: Dyadic, n: u64) -> Self {
        SpectralWeight { d, n }
    }

    pub fn d(&self) -> &Dyadic {
        &self.d
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.d.is_zero()
    }

    /// The coefficient as a float, `d / sqrt(n)`.
    pub fn xi_hat(&self) -> f64 {
        self.d.to_f64() / (self.n as f64).sqrt()
    }

    /// Exact squared coefficient `d^2 / n`, the spectral-measure mass.
    pub fn squared(&self) -> BigRational {
        self.d.square().to_rational() / BigInt::from(self.n)
    }
}

fn check_in_index_set(x: u64, y: i64, n: u64) -> Result<()> {
    if !site_valid(x, y) || x >= n {
        return Err(Error::SiteOutsideIndexSet { x, y, n });
    }
    Ok(())
}

/// Chain admissibility for an arbitrary site list (any order, any content):
/// valid sites below the horizon, strictly increasing times, increments
/// bounded by the time gaps.
pub fn is_admissible(sites: &[(u64, i64)], n: u64) -> bool {
    if sites.is_empty() {
        return false;
    }
    if sites.iter().any(|&(x, y)| !site_valid(x, y) || x >= n) {
        return false;
    }
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        x2 > x1 && (y2 - y1).unsigned_abs() <= x2 - x1
    })
}

/// Chain factor of the coefficient: the product over consecutive sites of
/// `(p(dx-1, dy-1) - p(dx-1, dy+1)) / 2`. Single sites give the empty
/// product, one.
pub fn q(s: &SpectralSet) -> Dyadic {
    let mut acc = Dyadic::one();
    for w in s.sites().windows(2) {
        let dx = w[1].x() - w[0].x();
        let dy = w[1].y() - w[0].y();
        let factor = (&p(dx - 1, dy - 1) - &p(dx - 1, dy + 1)).halve();
        acc = &acc * &factor;
    }
    acc
}

/// The coefficient of an arbitrary site list at horizon `n`.
///
/// Errors if some site is outside the index set; returns an exact zero for
/// site lists that are in range but not admissible (including the empty
/// list).
pub fn coefficient(sites: &[(u64, i64)], n: u64) -> Result<SpectralWeight> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    for &(x, y) in sites {
        check_in_index_set(x, y, n)?;
    }
    if !is_admissible(sites, n) {
        return Ok(SpectralWeight::new(Dyadic::zero(), n));
    }
    let set = SpectralSet::new(sites, n)?;
    let first = set.sites()[0];
    let d = &p(first.x(), first.y()) * &q(&set);
    Ok(SpectralWeight::new(d, n))
}

/// Gap law of consecutive projection times: `g(j) = p(2j-2,0) - p(2j,0)`,
/// the probability that a walk's first return to the origin takes `2j`
/// steps.
pub fn gap_prob(j: u64) -> Dyadic {
    assert!(j >= 1, "gaps start at 1");
    &return_prob(j - 1) - &return_prob(j)
}

/// Exact probability that the projection of a spectrally-sampled set equals
/// `r`: `(1/n) p(2 x_1, 0) * prod g(gaps)`.
pub fn r_distribution(r: &TimeSet) -> BigRational {
    let xs = r.xs();
    let mut acc = return_prob(xs[0]);
    for w in xs.windows(2) {
        acc = &acc * &gap_prob(w[1] - w[0]);
    }
    acc.to_rational() / BigInt::from(r.n())
}

/// Closed form `(k+1)/n` for the probability that the projection fits in
/// `[0, k]`; exists as a named operation so tests can sum `r_distribution`
/// against it.
pub fn r_cumulative(k: u64, n: u64) -> Result<BigRational> {
    if k >= n {
        return Err(Error::BadInput(format!("need k < n, got k={k}, n={n}")));
    }
    Ok(BigRational::new(BigInt::from(k + 1), BigInt::from(n)))
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// Streams every admissible set at horizon `n` exactly once, in
/// lexicographic order of site lists (each chain is emitted before its
/// extensions). Counts grow exponentially, hence the bound.
pub fn enumerate_admissible(n: u64) -> Result<AdmissibleSets> {
    enumerate_admissible_with_bound(n, DEFAULT_ENUM_BOUND)
}

pub fn enumerate_admissible_with_bound(n: u64, bound: u64) -> Result<AdmissibleSets> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    if n > bound {
        return Err(Error::HorizonBound {
            n,
            bound,
            what: "admissible-set enumeration",
        });
    }
    Ok(AdmissibleSets {
        n,
        stack: Vec::new(),
        root: SiteCursor::root(n),
        started: false,
    })
}

/// Cursor over extension candidates, ordered by time then position.
struct SiteCursor {
    n: u64,
    anchor: Option<(u64, i64)>,
    next: Option<(u64, i64)>,
}

impl SiteCursor {
    fn root(n: u64) -> Self {
        SiteCursor {
            n,
            anchor: None,
            next: Some((0, 0)),
        }
    }

    fn children(site: Site, n: u64) -> Self {
        let first = site.x() + 1;
        SiteCursor {
            n,
            anchor: Some((site.x(), site.y())),
            next: (first < n).then_some((first, site.y() - 1)),
        }
    }

    fn row_high(&self, x: u64) -> i64 {
        match self.anchor {
            None => x as i64,
            Some((ax, ay)) => ay + (x - ax) as i64,
        }
    }

    fn row_low(&self, x: u64) -> i64 {
        match self.anchor {
            None => -(x as i64),
            Some((ax, ay)) => ay - (x - ax) as i64,
        }
    }

    fn advance(&mut self) -> Option<Site> {
        let (x, y) = self.next?;
        let out = Site::new(x, y).expect("cursor stays on valid sites");
        self.next = if y + 2 <= self.row_high(x) {
            Some((x, y + 2))
        } else if x + 1 < self.n {
            Some((x + 1, self.row_low(x + 1)))
        } else {
            None
        };
        Some(out)
    }
}

pub struct AdmissibleSets {
    n: u64,
    stack: Vec<(Site, SiteCursor)>,
    root: SiteCursor,
    started: bool,
}

impl AdmissibleSets {
    fn current(&self) -> SpectralSet {
        SpectralSet::from_sites_unchecked(
            self.stack.iter().map(|(s, _)| *s).collect(),
            self.n,
        )
    }

    fn push(&mut self, site: Site) {
        let cursor = SiteCursor::children(site, self.n);
        self.stack.push((site, cursor));
    }
}

impl Iterator for AdmissibleSets {
    type Item = SpectralSet;

    fn next(&mut self) -> Option<SpectralSet> {
        if !self.started {
            self.started = true;
            let first = self.root.advance()?;
            self.push(first);
            return Some(self.current());
        }
        loop {
            match self.stack.last_mut() {
                Some((_, cursor)) => {
                    if let Some(child) = cursor.advance() {
                        self.push(child);
                        return Some(self.current());
                    }
                    self.stack.pop();
                    if self.stack.is_empty() {
                        if let Some(next_root) = self.root.advance() {
                            self.push(next_root);
                            return Some(self.current());
                        }
                        return None;
                    }
                }
                None => return None,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Renewal dynamic programs
// ---------------------------------------------------------------------------

/// Distribution of the projection size, indexed by `m = 1..=n`.
#[derive(Debug, Clone)]
pub enum SizeDistribution {
    Exact { n: u64, probs: Vec<BigRational> },
    Float { n: u64, probs: Vec<f64> },
}

impl SizeDistribution {
    pub fn n(&self) -> u64 {
        match self {
            SizeDistribution::Exact { n, .. } | SizeDistribution::Float { n, .. } => *n,
        }
    }

    pub fn mode(&self) -> ArithMode {
        match self {
            SizeDistribution::Exact { .. } => ArithMode::Exact,
            SizeDistribution::Float { .. } => ArithMode::Float,
        }
    }

    /// Probability of size `m` (1-based).
    pub fn prob(&self, m: u64) -> Scalar {
        match self {
            SizeDistribution::Exact { probs, .. } => {
                Scalar::Exact(probs[m as usize - 1].clone())
            }
            SizeDistribution::Float { probs, .. } => Scalar::Float(probs[m as usize - 1]),
        }
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        match self {
            SizeDistribution::Exact { probs, .. } => probs
                .iter()
                .map(|r| ratio_to_f64(r.numer(), r.denom()))
                .collect(),
            SizeDistribution::Float { probs, .. } => probs.clone(),
        }
    }

    pub fn exact_probs(&self) -> Option<&[BigRational]> {
        match self {
            SizeDistribution::Exact { probs, .. } => Some(probs),
            SizeDistribution::Float { .. } => None,
        }
    }

    /// Mean size computed from the stored vector.
    pub fn expected(&self) -> Scalar {
        match self {
            SizeDistribution::Exact { probs, .. } => {
                let mut acc = BigRational::zero();
                for (i, p) in probs.iter().enumerate() {
                    acc += p * BigRational::from_integer(BigInt::from(i as u64 + 1));
                }
                Scalar::Exact(acc)
            }
            SizeDistribution::Float { probs, .. } => Scalar::Float(
                probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i as f64 + 1.0) * p)
                    .sum(),
            ),
        }
    }
}

/// Gap-convolution DP for the law of the projection size.
///
/// Conditioned on its (uniform) maximal element `x`, the projection is a
/// renewal chain walking down from `x` with gap law [`gap_prob`] and
/// termination weight `p(2t, 0)` at the minimal element `t`. Layer `m` of
/// the DP is the distribution over `x` of chains with exactly `m` elements.
/// In float mode the layer loop stops once the accounted mass is within
/// `1e-13` of one.
pub fn size_distribution(n: u64) -> Result<SizeDistribution> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    if n <= EXACT_HORIZON_BOUND {
        let term: Vec<BigRational> = (0..n).map(|x| return_prob(x).to_rational()).collect();
        let gaps: Vec<BigRational> = (0..n)
            .map(|j| {
                if j == 0 {
                    BigRational::zero()
                } else {
                    gap_prob(j).to_rational()
                }
            })
            .collect();
        let horizon = BigRational::from_integer(BigInt::from(n));
        let mut layer = term;
        let mut probs = Vec::with_capacity(n as usize);
        for m in 1..=n as usize {
            if m > 1 {
                let mut next = vec![BigRational::zero(); n as usize];
                for (x, slot) in next.iter_mut().enumerate().skip(m - 1) {
                    let mut acc = BigRational::zero();
                    for j in 1..=(x - (m - 2)) {
                        acc += &gaps[j] * &layer[x - j];
                    }
                    *slot = acc;
                }
                layer = next;
            }
            let total: BigRational = layer.iter().sum();
            probs.push(total / &horizon);
        }
        Ok(SizeDistribution::Exact { n, probs })
    } else {
        let nn = n as usize;
        let term = return_probs_f64(nn);
        let mut gaps = vec![0.0f64; nn];
        for j in 1..nn {
            gaps[j] = term[j - 1] - term[j];
        }
        let mut layer = term;
        let mut probs = vec![0.0f64; nn];
        let mut cumulative = 0.0f64;
        for m in 1..=nn {
            if m > 1 {
                let mut next = vec![0.0f64; nn];
                for (x, slot) in next.iter_mut().enumerate().skip(m - 1) {
                    let mut acc = 0.0f64;
                    for j in 1..=(x - (m - 2)) {
                        acc += gaps[j] * layer[x - j];
                    }
                    *slot = acc;
                }
                layer = next;
            }
            let total: f64 = layer.iter().sum();
            probs[m - 1] = total / n as f64;
            cumulative += probs[m - 1];
            if 1.0 - cumulative < 1e-13 {
                break;
            }
        }
        Ok(SizeDistribution::Float { n, probs })
    }
}

/// Mean projection size via the closed sum
/// `(1/n) * sum_{j<n} (n-j) p(2j, 0)`.
pub fn expected_size(n: u64) -> Result<Scalar> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    if n <= EXACT_HORIZON_BOUND {
        let mut acc = Dyadic::zero();
        for j in 0..n {
            acc = &acc + &(&Dyadic::from(n - j) * &return_prob(j));
        }
        Ok(Scalar::Exact(acc.to_rational() / BigInt::from(n)))
    } else {
        let probs = return_probs_f64(n as usize);
        let total: f64 = probs
            .iter()
            .enumerate()
            .map(|(j, p)| (n - j as u64) as f64 * p)
            .sum();
        Ok(Scalar::Float(total / n as f64))
    }
}

fn check_eps(eps: &BigRational) -> Result<()> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if eps.is_negative() || *eps > half {
        return Err(Error::EpsRange(eps.to_string()));
    }
    Ok(())
}

/// Correlation of the rescaled endpoint with a copy whose signs are flipped
/// independently with probability `eps`: `E[lambda^{|R|}]` for
/// `lambda = 1 - 2 eps`, via the renewal DP
/// `h(x) = lambda (p(2x,0) + sum_j g(j) h(x-j))`, answer `(1/n) sum h`.
pub fn noise_correlation(n: u64, eps: &BigRational) -> Result<Scalar> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    check_eps(eps)?;
    let two = BigRational::from_integer(BigInt::from(2));
    let lambda = BigRational::one() - &two * eps;
    if n <= EXACT_HORIZON_BOUND {
        let nn = n as usize;
        let term: Vec<BigRational> = (0..n).map(|x| return_prob(x).to_rational()).collect();
        let gaps: Vec<BigRational> = (0..n)
            .map(|j| {
                if j == 0 {
                    BigRational::zero()
                } else {
                    gap_prob(j).to_rational()
                }
            })
            .collect();
        let mut h: Vec<BigRational> = Vec::with_capacity(nn);
        for x in 0..nn {
            let mut acc = term[x].clone();
            for j in 1..=x {
                acc += &gaps[j] * &h[x - j];
            }
            h.push(&lambda * acc);
        }
        let total: BigRational = h.iter().sum();
        Ok(Scalar::Exact(total / BigInt::from(n)))
    } else {
        let nn = n as usize;
        let lam = ratio_to_f64(lambda.numer(), lambda.denom());
        let term = return_probs_f64(nn);
        let mut gaps = vec![0.0f64; nn];
        for j in 1..nn {
            gaps[j] = term[j - 1] - term[j];
        }
        let mut h = vec![0.0f64; nn];
        for x in 0..nn {
            let mut acc = term[x];
            for j in 1..=x {
                acc += gaps[j] * h[x - j];
            }
            h[x] = lam * acc;
        }
        Ok(Scalar::Float(h.iter().sum::<f64>() / n as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&[(0, 0)], 1));
        assert!(!is_admissible(&[(0, 0), (2, 3)], 3));
        assert!(is_admissible(&[(1, 1), (3, -1)], 4));
        assert!(!is_admissible(&[], 1));
        assert!(!is_admissible(&[(0, 0)], 0));
        // order of the input list does not matter
        assert!(is_admissible(&[(3, -1), (1, 1)], 4));
        // duplicate times are not chains
        assert!(!is_admissible(&[(1, 1), (1, -1)], 4));
        assert!(!is_admissible(&[(1, 1), (1, 1)], 4));
        // horizon cut
        assert!(!is_admissible(&[(3, 1)], 3));
        // increments above the gap
        assert!(!is_admissible(&[(0, 0), (2, 4)], 4));
    }

    #[test]
    fn q_examples() {
        let single = SpectralSet::new(&[(0, 0)], 1).unwrap();
        assert_eq!(q(&single), Dyadic::one());
        let pair = SpectralSet::new(&[(0, 0), (1, 1)], 2).unwrap();
        assert_eq!(q(&pair), Dyadic::new(1, 1));
        let cancel = SpectralSet::new(&[(0, 0), (2, 0)], 3).unwrap();
        assert_eq!(q(&cancel), Dyadic::zero());
    }

    #[test]
    fn coefficient_examples() {
        let w = coefficient(&[(0, 0)], 1).unwrap();
        assert_eq!(w.d(), &Dyadic::one());
        assert_eq!(w.xi_hat(), 1.0);

        let w = coefficient(&[(0, 0), (1, -1)], 2).unwrap();
        assert_eq!(w.d(), &Dyadic::new(-1, 1));

        let w = coefficient(&[(1, 1)], 2).unwrap();
        assert_eq!(w.d(), &Dyadic::new(1, 1));

        let empty = coefficient(&[], 2).unwrap();
        assert!(empty.is_zero());

        assert!(coefficient(&[(0, 1)], 3).is_err());
        assert!(coefficient(&[(3, 1)], 3).is_err());
    }

    #[test]
    fn squared_weight_is_mass() {
        let w = coefficient(&[(0, 0), (1, -1)], 2).unwrap();
        assert_eq!(w.squared(), rat(1, 8));
    }

    #[test]
    fn enumerate_small_horizons() {
        let one: Vec<_> = enumerate_admissible(1).unwrap().collect();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].pairs(), vec![(0, 0)]);

        let two: Vec<Vec<(u64, i64)>> = enumerate_admissible(2)
            .unwrap()
            .map(|s| s.pairs())
            .collect();
        // lexicographic order of site lists: prefixes come first
        assert_eq!(
            two,
            vec![
                vec![(0, 0)],
                vec![(0, 0), (1, -1)],
                vec![(0, 0), (1, 1)],
                vec![(1, -1)],
                vec![(1, 1)],
            ]
        );
    }

    /// Independent oracle: filter all subsets of the index set.
    fn admissible_by_filter(n: u64) -> BTreeSet<Vec<(u64, i64)>> {
        let mut sites = Vec::new();
        for x in 0..n {
            let mut y = -(x as i64);
            while y <= x as i64 {
                sites.push((x, y));
                y += 2;
            }
        }
        let mut out = BTreeSet::new();
        for mask in 1u64..(1 << sites.len()) {
            let subset: Vec<(u64, i64)> = sites
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| *s)
                .collect();
            if is_admissible(&subset, n) {
                out.insert(subset);
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_subset_filter() {
        for n in 1..=4u64 {
            let dfs: Vec<Vec<(u64, i64)>> = enumerate_admissible(n)
                .unwrap()
                .map(|s| s.pairs())
                .collect();
            let as_set: BTreeSet<_> = dfs.iter().cloned().collect();
            assert_eq!(as_set.len(), dfs.len(), "duplicates at n={n}");
            assert_eq!(as_set, admissible_by_filter(n), "n={n}");
            let mut sorted = dfs.clone();
            sorted.sort();
            assert_eq!(sorted, dfs, "lexicographic order at n={n}");
        }
    }

    #[test]
    fn enumeration_bound_is_enforced() {
        assert!(enumerate_admissible(9).is_err());
        assert!(enumerate_admissible_with_bound(9, 9).is_ok());
    }

    #[test]
    fn every_enumerated_set_is_admissible() {
        for n in 1..=5u64 {
            for s in enumerate_admissible(n).unwrap() {
                assert!(is_admissible(&s.pairs(), n));
            }
        }
    }

    #[test]
    fn r_distribution_examples() {
        let r = |xs: &[u64], n| TimeSet::new(xs.to_vec(), n).unwrap();
        assert_eq!(r_distribution(&r(&[0], 2)), rat(1, 2));
        assert_eq!(r_distribution(&r(&[1], 2)), rat(1, 4));
        assert_eq!(r_distribution(&r(&[0, 1], 2)), rat(1, 4));
        assert_eq!(r_distribution(&r(&[2], 3)), rat(1, 8));
    }

    #[test]
    fn r_distribution_totals_one() {
        for n in 1..=8u64 {
            let mut total = BigRational::zero();
            for mask in 1u64..(1 << n) {
                let xs: Vec<u64> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
                total += r_distribution(&TimeSet::new(xs, n).unwrap());
            }
            assert_eq!(total, BigRational::one(), "n={n}");
        }
    }

    #[test]
    fn r_cumulative_examples() {
        assert_eq!(r_cumulative(1, 2).unwrap(), BigRational::one());
        assert_eq!(r_cumulative(0, 2).unwrap(), rat(1, 2));
        assert_eq!(r_cumulative(2, 5).unwrap(), rat(3, 5));
        assert!(r_cumulative(5, 5).is_err());
    }

    #[test]
    fn q_is_invariant_under_vertical_shifts() {
        for n in 2..=4u64 {
            for s in enumerate_admissible(n).unwrap() {
                let (x1, y1) = (s.sites()[0].x(), s.sites()[0].y());
                let mut delta = -(x1 as i64) - y1;
                while y1 + delta <= x1 as i64 {
                    let shifted: Vec<(u64, i64)> =
                        s.pairs().iter().map(|&(x, y)| (x, y + delta)).collect();
                    if is_admissible(&shifted, n) {
                        let t = SpectralSet::new(&shifted, n).unwrap();
                        assert_eq!(q(&t), q(&s), "shift {delta} of {:?}", s.pairs());
                    }
                    delta += 2;
                }
            }
        }
    }

    #[test]
    fn gap_normalization_identity() {
        // sum over increments of the squared chain factor equals the gap law
        for gap in 1..=30u64 {
            let mut total = Dyadic::zero();
            let mut dy = -(gap as i64);
            while dy <= gap as i64 {
                let f = (&p(gap - 1, dy - 1) - &p(gap - 1, dy + 1)).halve();
                total = &total + &f.square();
                dy += 2;
            }
            assert_eq!(total, gap_prob(gap), "gap {gap}");
        }
    }

    #[test]
    fn gaps_telescope_exactly() {
        let mut acc = Dyadic::zero();
        for x in 1..=1000u64 {
            acc = &acc + &gap_prob(x);
            if x <= 300 || x % 100 == 0 {
                assert_eq!(&acc + &return_prob(x), Dyadic::one(), "x={x}");
            }
        }
    }

    #[test]
    fn parseval_small_horizons() {
        for n in 1..=6u64 {
            let mut total = Dyadic::zero();
            for s in enumerate_admissible(n).unwrap() {
                let w = coefficient(&s.pairs(), n).unwrap();
                total = &total + &w.d().square();
            }
            assert_eq!(total, Dyadic::from(n), "n={n}");
        }
    }

    #[test]
    fn size_distribution_examples() {
        let d = size_distribution(1).unwrap();
        assert_eq!(d.exact_probs().unwrap(), &[BigRational::one()]);

        let d = size_distribution(2).unwrap();
        assert_eq!(d.exact_probs().unwrap(), &[rat(3, 4), rat(1, 4)]);
        assert_eq!(d.expected().exact().unwrap(), &rat(5, 4));
    }

    #[test]
    fn size_distribution_sums_to_one_exact() {
        for n in [1u64, 2, 5, 12, 30] {
            let d = size_distribution(n).unwrap();
            let total: BigRational = d.exact_probs().unwrap().iter().sum();
            assert_eq!(total, BigRational::one(), "n={n}");
        }
    }

    #[test]
    fn size_distribution_float_mode() {
        let d = size_distribution(200).unwrap();
        assert_eq!(d.mode(), ArithMode::Float);
        let total: f64 = d.probs_f64().iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn size_matches_projection_enumeration() {
        for n in 1..=6u64 {
            let d = size_distribution(n).unwrap();
            let mut by_size = vec![BigRational::zero(); n as usize];
            for mask in 1u64..(1 << n) {
                let xs: Vec<u64> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
                let m = xs.len();
                by_size[m - 1] += r_distribution(&TimeSet::new(xs, n).unwrap());
            }
            assert_eq!(d.exact_probs().unwrap(), &by_size[..], "n={n}");
        }
    }

    #[test]
    fn expected_size_examples() {
        assert_eq!(expected_size(1).unwrap().exact().unwrap(), &rat(1, 1));
        assert_eq!(expected_size(2).unwrap().exact().unwrap(), &rat(5, 4));
        // distribution route and closed sum agree
        for n in [3u64, 7, 20] {
            let via_dp = size_distribution(n).unwrap().expected();
            assert_eq!(
                via_dp.exact().unwrap(),
                expected_size(n).unwrap().exact().unwrap(),
                "n={n}"
            );
        }
    }

    #[test]
    fn expected_size_float_agrees_with_exact_at_boundary() {
        // same sum evaluated by both arithmetic paths at the split point
        let exact = expected_size(EXACT_HORIZON_BOUND).unwrap().to_f64();
        let probs = return_probs_f64(EXACT_HORIZON_BOUND as usize);
        let float: f64 = probs
            .iter()
            .enumerate()
            .map(|(j, p)| (EXACT_HORIZON_BOUND - j as u64) as f64 * p)
            .sum::<f64>()
            / EXACT_HORIZON_BOUND as f64;
        assert!((exact - float).abs() < 1e-12);
    }

    #[test]
    fn noise_correlation_examples() {
        let exact = |n, num, den| {
            noise_correlation(n, &rat(num, den))
                .unwrap()
                .exact()
                .unwrap()
                .clone()
        };
        assert_eq!(exact(5, 0, 1), BigRational::one());
        assert_eq!(exact(5, 1, 2), BigRational::zero());
        assert_eq!(exact(2, 1, 4), rat(7, 16));
        assert!(noise_correlation(4, &rat(3, 4)).is_err());
        assert!(noise_correlation(4, &rat(-1, 10)).is_err());
    }

    #[test]
    fn noise_correlation_matches_size_distribution() {
        for n in [1u64, 2, 3, 6, 12] {
            for (num, den) in [(0i64, 1i64), (1, 10), (1, 4), (2, 5), (1, 2)] {
                let eps = rat(num, den);
                let lambda = BigRational::one() - rat(2, 1) * &eps;
                let d = size_distribution(n).unwrap();
                let mut direct = BigRational::zero();
                let mut lam_pow = BigRational::one();
                for m in 1..=n {
                    lam_pow *= &lambda;
                    direct += d.prob(m).exact().unwrap() * &lam_pow;
                }
                let dp = noise_correlation(n, &eps).unwrap();
                assert_eq!(dp.exact().unwrap(), &direct, "n={n} eps={num}/{den}");
            }
        }
    }

    #[test]
    fn noise_correlation_float_mode_tracks_exact() {
        // float recurrence on the same inputs as the exact DP at the bound
        let eps = rat(1, 40);
        let exact = noise_correlation(EXACT_HORIZON_BOUND, &eps).unwrap().to_f64();
        let float = {
            let nn = EXACT_HORIZON_BOUND as usize;
            let lam = 1.0 - 2.0 / 40.0;
            let term = return_probs_f64(nn);
            let mut gaps = vec![0.0f64; nn];
            for j in 1..nn {
                gaps[j] = term[j - 1] - term[j];
            }
            let mut h = vec![0.0f64; nn];
            for x in 0..nn {
                let mut acc = term[x];
                for j in 1..=x {
                    acc += gaps[j] * h[x - j];
                }
                h[x] = lam * acc;
            }
            h.iter().sum::<f64>() / nn as f64
        };
        assert!((exact - float).abs() < 1e-12);
    }

    #[test]
    fn noise_correlation_strictly_decreasing_in_eps() {
        let grid: Vec<BigRational> = (0..=10).map(|k| rat(k, 20)).collect();
        for n in [2u64, 6, 20] {
            let vals: Vec<BigRational> = grid
                .iter()
                .map(|e| noise_correlation(n, e).unwrap().exact().unwrap().clone())
                .collect();
            for w in vals.windows(2) {
                assert!(w[0] > w[1], "n={n}");
            }
        }
    }

    #[test]
    fn scalar_conversions() {
        let s = Scalar::Exact(rat(7, 16));
        assert_eq!(s.to_f64(), 0.4375);
        assert_eq!(s.mode(), ArithMode::Exact);
        assert_eq!(Scalar::Float(0.5).mode(), ArithMode::Float);
    }

    #[test]
    fn time_set_validation() {
        assert!(TimeSet::new(vec![], 3).is_err());
        assert!(TimeSet::new(vec![3], 3).is_err());
        assert!(TimeSet::new(vec![1, 1], 3).is_err());
        let t = TimeSet::new(vec![2, 0], 3).unwrap();
        assert_eq!(t.xs(), &[0, 2]);
        assert_eq!(t.max_element(), 2);
    }

    #[test]
    fn projection_of_spectral_set() {
        let s = SpectralSet::new(&[(1, 1), (3, -1), (4, 0)], 5).unwrap();
        assert_eq!(s.projection().xs(), &[1, 3, 4]);
    }
}
