//! Exact dyadic rationals: `numerator / 2^exponent` with an arbitrary-
//! precision numerator.
//!
//! Walk kernels, spectral coefficients and all intermediate products in the
//! exact pipeline live in this domain; nothing here ever rounds. Conversion
//! to `f64` (round to nearest, ties to even) is provided for reporting only.
//!
//! Canonical form: the numerator is odd, or zero with exponent zero, or the
//! exponent is zero (plain integers keep their factors of two).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    /// `num / 2^exp`, brought to canonical form.
    pub fn new(num: impl Into<BigInt>, exp: u64) -> Self {
        let mut d = Dyadic {
            num: num.into(),
            exp,
        };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0);
        let drop = tz.min(self.exp);
        if drop > 0 {
            self.num >>= drop as usize;
            self.exp -= drop;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    /// Exact division by two.
    pub fn halve(&self) -> Self {
        Dyadic::new(self.num.clone(), self.exp + 1)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), BigInt::one() << self.exp as usize)
    }

    /// Nearest `f64`, ties to even.
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &(BigInt::one() << self.exp as usize))
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::new(v, 0)
    }
}

impl From<u64> for Dyadic {
    fn from(v: u64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }
}

impl From<BigInt> for Dyadic {
    fn from(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, u64) {
    let exp = a.exp.max(b.exp);
    let na = &a.num << (exp - a.exp) as usize;
    let nb = &b.num << (exp - b.exp) as usize;
    (na, nb, exp)
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (na, nb, exp) = aligned(self, rhs);
        Dyadic::new(na + nb, exp)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (na, nb, exp) = aligned(self, rhs);
        Dyadic::new(na - nb, exp)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

macro_rules! forward_owned {
    ($($op:ident/$fn:ident),*) => {$(
        impl $op for Dyadic {
            type Output = Dyadic;
            fn $fn(self, rhs: Dyadic) -> Dyadic {
                (&self).$fn(&rhs)
            }
        }
    )*};
}
forward_owned!(Add/add, Sub/sub, Mul/mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (na, nb, _) = aligned(self, other);
        na.cmp(&nb)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid dyadic literal: {0}")]
pub struct ParseDyadicError(String);

impl FromStr for Dyadic {
    type Err = ParseDyadicError;

    /// Accepts `a/2^e` and plain integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseDyadicError(s.to_string());
        match s.split_once('/') {
            None => {
                let num = BigInt::from_str(s.trim()).map_err(|_| bad())?;
                Ok(Dyadic::new(num, 0))
            }
            Some((num, den)) => {
                let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
                let exp = den
                    .trim()
                    .strip_prefix("2^")
                    .and_then(|e| e.parse::<u64>().ok())
                    .ok_or_else(bad)?;
                Ok(Dyadic::new(num, exp))
            }
        }
    }
}

impl serde::Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Nearest `f64` to `num/den` (`den > 0`), ties to even.
///
/// Works for operands far outside the `f64` exponent range; overflow gives
/// an infinity and deep underflow gives zero.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    assert!(den.is_positive(), "ratio_to_f64 needs den > 0");
    if num.is_zero() {
        return 0.0;
    }
    let negative = num.is_negative();
    let a = num.abs();
    let b = den.clone();

    // Scale so the integer quotient carries at least 55 significant bits,
    // then round the quotient to 53 bits using the remainder as sticky.
    let shift = 56 + b.bits() as i64 - a.bits() as i64;
    let (a2, b2) = if shift >= 0 {
        (a << shift as usize, b)
    } else {
        (a, b << (-shift) as usize)
    };
    let (q, r) = num_integer::Integer::div_rem(&a2, &b2);

    let qbits = q.bits();
    debug_assert!(qbits >= 55);
    let drop = qbits - 53;
    let low: BigInt = &q & ((BigInt::one() << drop as usize) - 1);
    let mut q53 = (&q >> drop as usize).to_u64().expect("53-bit mantissa");
    let half = BigInt::one() << (drop - 1) as usize;
    let round_up = match low.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => !r.is_zero() || q53 & 1 == 1,
    };
    if round_up {
        q53 += 1;
    }

    let magnitude = scale_pow2(q53 as f64, drop as i64 - shift);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// `m * 2^e` in chunks that keep each factor a finite power of two.
fn scale_pow2(mut m: f64, mut e: i64) -> f64 {
    while e > 511 {
        m *= f64::powi(2.0, 511);
        e -= 511;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -511 {
        m *= f64::powi(2.0, -511);
        e += 511;
        if m == 0.0 {
            return m;
        }
    }
    m * f64::powi(2.0, e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(num: i64, exp: u64) -> Dyadic {
        Dyadic::new(num, exp)
    }

    #[test]
    fn canonical_form() {
        assert_eq!(d(4, 2), d(1, 0));
        assert_eq!(d(6, 1), d(3, 0));
        assert_eq!(d(0, 9), d(0, 0));
        assert_eq!(d(-8, 5), d(-1, 2));
        // integers keep even numerators
        let six = d(6, 0);
        assert_eq!(six.numerator(), &BigInt::from(6));
        assert_eq!(six.exponent(), 0);
    }

    #[test]
    fn arithmetic() {
        let a = d(3, 2); // 3/4
        let b = d(1, 1); // 1/2
        assert_eq!(&a + &b, d(5, 2));
        assert_eq!(&a - &b, d(1, 2));
        assert_eq!(&a * &b, d(3, 3));
        assert_eq!(a.halve(), d(3, 3));
        assert_eq!(-&b, d(-1, 1));
        assert_eq!(d(6, 0).halve(), d(3, 0));
    }

    #[test]
    fn ordering() {
        assert!(d(1, 2) < d(1, 1));
        assert!(d(-1, 0) < d(1, 4));
        assert_eq!(d(2, 1).cmp(&d(1, 0)), Ordering::Equal);
    }

    #[test]
    fn display_and_parse_round_trip() {
        for s in ["1/2^0", "-3/2^5", "0/2^0", "9007199254740993/2^10"] {
            let v: Dyadic = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!("12".parse::<Dyadic>().unwrap(), d(12, 0));
        assert!("3/4".parse::<Dyadic>().is_err());
        assert!("x/2^2".parse::<Dyadic>().is_err());
    }

    #[test]
    fn to_f64_small_values_are_exact() {
        assert_eq!(d(1, 1).to_f64(), 0.5);
        assert_eq!(d(-7, 2).to_f64(), -1.75);
        assert_eq!(d(5, 4).to_f64(), 0.3125);
        assert_eq!(d(0, 0).to_f64(), 0.0);
        assert_eq!(d(1 << 40, 0).to_f64(), (1u64 << 40) as f64);
    }

    #[test]
    fn to_f64_rounds_to_nearest_even() {
        let two53 = BigInt::one() << 53;
        // 2^53 + 1 is a tie between 2^53 and 2^53 + 2: round to even
        assert_eq!(
            Dyadic::new(&two53 + 1, 0).to_f64(),
            9_007_199_254_740_992.0
        );
        assert_eq!(
            Dyadic::new(&two53 + 3, 0).to_f64(),
            9_007_199_254_740_996.0
        );
    }

    #[test]
    fn ratio_to_f64_matches_native_division() {
        for (n, de) in [(1i64, 3i64), (2, 3), (10, 7), (-355, 113), (1, 10)] {
            let got = ratio_to_f64(&BigInt::from(n), &BigInt::from(de));
            assert_eq!(got, n as f64 / de as f64, "{n}/{de}");
        }
    }

    #[test]
    fn ratio_to_f64_extreme_exponents() {
        let one = BigInt::one();
        assert_eq!(ratio_to_f64(&(&one << 5000), &one), f64::INFINITY);
        assert_eq!(ratio_to_f64(&one, &(&one << 5000)), 0.0);
        let v = ratio_to_f64(&one, &(&one << 1000));
        assert_eq!(v, f64::powi(2.0, -500).powi(2));
    }

    proptest! {
        #[test]
        fn add_sub_round_trips(a in -10_000_000i64..10_000_000, ea in 0u64..120,
                               b in -10_000_000i64..10_000_000, eb in 0u64..120) {
            let x = d(a, ea);
            let y = d(b, eb);
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            prop_assert_eq!(&(&x - &y) + &y, x);
        }

        #[test]
        fn canonical_after_ops(a in -1000i64..1000, ea in 0u64..40,
                               b in -1000i64..1000, eb in 0u64..40) {
            for v in [&d(a, ea) + &d(b, eb), &d(a, ea) * &d(b, eb), d(a, ea).halve()] {
                if v.is_zero() {
                    prop_assert_eq!(v.exponent(), 0);
                } else {
                    prop_assert!(v.numerator().is_odd() || v.exponent() == 0);
                }
            }
        }

        #[test]
        fn mul_matches_rationals(a in -1000i64..1000, ea in 0u64..40,
                                 b in -1000i64..1000, eb in 0u64..40) {
            let x = d(a, ea);
            let y = d(b, eb);
            prop_assert_eq!((&x * &y).to_rational(), x.to_rational() * y.to_rational());
        }
    }

    use num_integer::Integer as _;
}
