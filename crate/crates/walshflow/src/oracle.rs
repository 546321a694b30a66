//! Ground truth by exhaustion.
//!
//! The full transform of the rescaled endpoint is computed from first
//! principles: evaluate the endpoint on all `2^|I|` sign arrays, then apply
//! an in-place integer Walsh-Hadamard transform. No floating point enters;
//! every coefficient comes out as an exact dyadic. This is the certificate
//! the closed forms in [`crate::spectral`] are checked against.
//!
//! Site-to-bit indexing is row-major (time ascending, position ascending
//! within a row) and is recorded in every serialized dump, since subset
//! masks are meaningless without it.

use std::io::{Read, Write};

use num_bigint::BigInt;

use crate::dyadic::Dyadic;
use crate::kernel::{site_valid, Site};
use crate::spectral::SpectralSet;
use crate::{Error, Result};

/// Default horizon bound for the brute-force transform; the table for
/// `n = 6` already holds `2^21` entries.
pub const ORACLE_BOUND: u64 = 6;

/// Number of sites in the triangular index set of horizon `n`.
pub fn site_count(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// Row-major bit index of a site: rows by time, positions ascending.
pub fn site_index(x: u64, y: i64) -> u64 {
    debug_assert!(site_valid(x, y));
    x * (x + 1) / 2 + ((x as i64 + y) / 2) as u64
}

/// Sites of horizon `n` in bit-index order.
pub fn site_order(n: u64) -> Vec<Site> {
    let mut sites = Vec::with_capacity(site_count(n) as usize);
    for x in 0..n {
        let mut y = -(x as i64);
        while y <= x as i64 {
            sites.push(Site::new(x, y).expect("triangle site"));
            y += 2;
        }
    }
    sites
}

/// Size in bytes of the dense transform table for horizon `n`.
pub fn table_bytes(n: u64) -> u64 {
    4u64 << site_count(n)
}

/// One realization of the triangular sign array, bit-packed in site-index
/// order. A set bit stores a minus sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignArray {
    n: u64,
    bits: Vec<u64>,
}

impl SignArray {
    /// All signs positive.
    pub fn all_plus(n: u64) -> Self {
        let words = (site_count(n) as usize).div_ceil(64);
        SignArray {
            n,
            bits: vec![0; words.max(1)],
        }
    }

    /// Signs taken from the low `site_count(n)` bits of `mask`
    /// (bit set = minus).
    pub fn from_mask(n: u64, mask: u64) -> Result<Self> {
        if site_count(n) > 64 {
            return Err(Error::BadInput(format!(
                "horizon {n} has more than 64 sites; build the array sitewise"
            )));
        }
        let mut arr = SignArray::all_plus(n);
        arr.bits[0] = mask & if site_count(n) == 64 { !0 } else { (1u64 << site_count(n)) - 1 };
        Ok(arr)
    }

    /// Materializes signs from a function of the site.
    pub fn from_fn(n: u64, mut f: impl FnMut(u64, i64) -> i8) -> Self {
        let mut arr = SignArray::all_plus(n);
        for site in site_order(n) {
            arr.set_sign(site.x(), site.y(), f(site.x(), site.y()));
        }
        arr
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sign(&self, x: u64, y: i64) -> i8 {
        let i = site_index(x, y) as usize;
        debug_assert!(x < self.n);
        if self.bits[i / 64] >> (i % 64) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn set_sign(&mut self, x: u64, y: i64, sign: i8) {
        let i = site_index(x, y) as usize;
        debug_assert!(x < self.n);
        if sign < 0 {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, x: u64, y: i64) {
        let i = site_index(x, y) as usize;
        self.bits[i / 64] ^= 1 << (i % 64);
    }
}

/// Endpoint of the walk that follows the signs along its own trajectory.
pub fn walk_endpoint(tau: &SignArray) -> i64 {
    let mut pos = 0i64;
    for x in 0..tau.n() {
        pos += tau.sign(x, pos) as i64;
    }
    pos
}

/// Full trajectory `W(0), .., W(n)` of the walk.
pub fn walk_path(tau: &SignArray) -> Vec<i64> {
    let mut path = Vec::with_capacity(tau.n() as usize + 1);
    let mut pos = 0i64;
    path.push(pos);
    for x in 0..tau.n() {
        pos += tau.sign(x, pos) as i64;
        path.push(pos);
    }
    path
}

/// Dense exact transform of the endpoint over all sign arrays of horizon
/// `n`, indexed by subset bitmask.
///
/// The stored values are the raw transform integers; the coefficient at a
/// mask is `value / 2^|I|` and the spectral value is that divided by
/// `sqrt(n)`.
pub struct FullTransform {
    n: u64,
    sites: Vec<Site>,
    values: Vec<i32>,
}

impl FullTransform {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Sites in bit-index order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn mask_count(&self) -> usize {
        self.values.len()
    }

    pub fn raw_value(&self, mask: usize) -> i32 {
        self.values[mask]
    }

    /// Exact coefficient `d` at a subset mask (spectral value `d/sqrt(n)`).
    pub fn coefficient(&self, mask: usize) -> Dyadic {
        Dyadic::new(self.values[mask], self.sites.len() as u64)
    }

    pub fn sites_of_mask(&self, mask: usize) -> Vec<(u64, i64)> {
        self.sites
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, s)| (s.x(), s.y()))
            .collect()
    }

    /// Exact sum of squared coefficients over all masks, in units where
    /// full mass is `n` (matching `d^2` sums on the formula side).
    pub fn squared_sum(&self) -> Dyadic {
        let mut acc: i128 = 0;
        for &v in &self.values {
            acc += (v as i128) * (v as i128);
        }
        Dyadic::new(BigInt::from(acc), 2 * self.sites.len() as u64)
    }

    /// Binary dump. Layout, all little-endian:
    ///
    /// ```text
    /// magic   4 bytes  "WFTD"
    /// version u16      1
    /// n       u32
    /// sites   u32      count N
    ///         N x (x: u32, y: i32)   bit-index order
    /// values  2^N x i32              transform integers, mask order
    /// ```
    pub fn write_binary(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(b"WFTD")?;
        w.write_all(&1u16.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.sites.len() as u32).to_le_bytes())?;
        for s in &self.sites {
            w.write_all(&(s.x() as u32).to_le_bytes())?;
            w.write_all(&(s.y() as i32).to_le_bytes())?;
        }
        for &v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"WFTD" {
            return Err(Error::BadInput("not a transform dump".into()));
        }
        let mut u16buf = [0u8; 2];
        r.read_exact(&mut u16buf)?;
        if u16::from_le_bytes(u16buf) != 1 {
            return Err(Error::BadInput("unsupported dump version".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as u64;
        r.read_exact(&mut u32buf)?;
        let count = u32::from_le_bytes(u32buf) as usize;
        if count != site_count(n) as usize || count >= 32 {
            return Err(Error::BadInput("corrupt dump header".into()));
        }
        let mut sites = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut u32buf)?;
            let x = u32::from_le_bytes(u32buf) as u64;
            r.read_exact(&mut u32buf)?;
            let y = i32::from_le_bytes(u32buf) as i64;
            sites.push(Site::new(x, y).map_err(|_| Error::BadInput("bad site in dump".into()))?);
        }
        if sites != site_order(n) {
            return Err(Error::BadInput("dump site order mismatch".into()));
        }
        let mut values = vec![0i32; 1usize << count];
        for v in values.iter_mut() {
            r.read_exact(&mut u32buf)?;
            *v = i32::from_le_bytes(u32buf);
        }
        Ok(FullTransform { n, sites, values })
    }

    /// JSON form listing the site order and the nonzero coefficients;
    /// refused above horizon 4 where the listing stops being readable.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        if self.n > 4 {
            return Err(Error::HorizonBound {
                n: self.n,
                bound: 4,
                what: "JSON transform export",
            });
        }
        let nonzero: Vec<serde_json::Value> = (0..self.values.len())
            .filter(|&m| self.values[m] != 0)
            .map(|m| {
                let d = self.coefficient(m);
                serde_json::json!({
                    "mask": m,
                    "sites": self.sites_of_mask(m),
                    "d": d.to_string(),
                    "weight": d.to_f64() / (self.n as f64).sqrt(),
                })
            })
            .collect();
        Ok(serde_json::json!({
            "n": self.n,
            "site_order": self.sites.iter().map(|s| (s.x(), s.y())).collect::<Vec<_>>(),
            "coefficients": nonzero,
        }))
    }
}

/// Brute-force transform at the default bound.
pub fn brute_force_transform(n: u64) -> Result<FullTransform> {
    brute_force_transform_with_bound(n, ORACLE_BOUND)
}

/// Brute-force transform with an explicit cost acknowledgement: the table
/// holds `2^{n(n+1)/2}` integers.
pub fn brute_force_transform_with_bound(n: u64, bound: u64) -> Result<FullTransform> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    if n > bound || site_count(n) >= 32 {
        return Err(Error::HorizonBound {
            n,
            bound,
            what: "brute-force transform",
        });
    }
    let sites = site_order(n);
    let count = sites.len();
    let size = 1usize << count;

    // Endpoint table over all sign assignments; bit set means minus.
    let mut values = vec![0i32; size];
    for (z, slot) in values.iter_mut().enumerate() {
        let mut pos = 0i64;
        for x in 0..n {
            let i = site_index(x, pos);
            pos += if z >> i & 1 == 1 { -1 } else { 1 };
        }
        *slot = pos as i32;
    }

    // In-place Walsh-Hadamard: afterwards values[mask] is the correlation
    // sum of the endpoint with the sign product over the mask.
    let mut half = 1usize;
    while half < size {
        let mut start = 0;
        while start < size {
            for i in start..start + half {
                let a = values[i];
                let b = values[i + half];
                values[i] = a + b;
                values[i + half] = a - b;
            }
            start += 2 * half;
        }
        half *= 2;
    }

    Ok(FullTransform { n, sites, values })
}

/// Conditional expectation of `tau(S) * W(n)` given the first `k+1` rows of
/// signs, computed by exhaustive averaging over all completions.
///
/// `prefix` must have horizon exactly `k+1`; the chain must live strictly
/// above row `k`. Returned in `d`-units: the conditional expectation of
/// `tau(S) * xi` is the result divided by `sqrt(n)`.
pub fn conditional_oracle(s: &SpectralSet, k: u64, prefix: &SignArray) -> Result<Dyadic> {
    let n = s.n();
    if k > n.saturating_sub(2) {
        return Err(Error::BadInput(format!(
            "conditioning row k={k} must satisfy k <= n-2 (n={n})"
        )));
    }
    if prefix.n() != k + 1 {
        return Err(Error::BadInput(format!(
            "prefix fixes rows 0..={}, expected rows 0..={k}",
            prefix.n().saturating_sub(1)
        )));
    }
    if let Some(site) = s.sites().iter().find(|site| site.x() <= k) {
        return Err(Error::BadInput(format!(
            "site ({}, {}) lies in the conditioned rows",
            site.x(),
            site.y()
        )));
    }
    let fixed = site_count(k + 1);
    let free = site_count(n) - fixed;
    if free >= 26 {
        return Err(Error::HorizonBound {
            n,
            bound: ORACLE_BOUND,
            what: "conditional exhaustive averaging",
        });
    }

    let mut s_mask = 0u64;
    for site in s.sites() {
        s_mask |= 1 << (site_index(site.x(), site.y()) - fixed);
    }

    let mut sum = 0i64;
    for z in 0u64..1 << free {
        let mut pos = 0i64;
        for x in 0..n {
            let sign = if x <= k {
                prefix.sign(x, pos) as i64
            } else {
                let i = site_index(x, pos) - fixed;
                if z >> i & 1 == 1 {
                    -1
                } else {
                    1
                }
            };
            pos += sign;
        }
        let tau_s = if (z & s_mask).count_ones() % 2 == 1 {
            -1i64
        } else {
            1
        };
        sum += tau_s * pos;
    }
    Ok(Dyadic::new(sum, free))
}
