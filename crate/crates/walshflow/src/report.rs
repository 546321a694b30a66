//! Run manifests and input parsing for the command-line surface.
//!
//! Every output embeds a manifest: the command, its full parameter set, the
//! seed, the arithmetic mode, the artifact version and a timestamp. All
//! data is a deterministic function of the manifest fields other than the
//! timestamp, so reruns with a pinned timestamp are bit-identical. The
//! timestamp defaults to the wall clock and can be pinned through
//! `WALSHFLOW_TIMESTAMP` (unix seconds).

use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::spectral::ArithMode;
use crate::{Error, Result};

/// Environment variable holding the default seed for all commands.
pub const SEED_ENV: &str = "WALSHFLOW_SEED";
/// Environment variable pinning the manifest timestamp (unix seconds).
pub const TIMESTAMP_ENV: &str = "WALSHFLOW_TIMESTAMP";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub mode: ArithMode,
    pub version: String,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        params: serde_json::Value,
        seed: u64,
        mode: ArithMode,
    ) -> Self {
        let timestamp = std::env::var(TIMESTAMP_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        RunManifest {
            command: command.to_string(),
            params,
            seed,
            mode,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("manifest serializes")
    }

    /// Leading comment line for CSV outputs; declares the horizon and the
    /// arithmetic mode along with everything else in the manifest.
    pub fn csv_comment(&self) -> String {
        format!("# manifest: {}", self.to_json())
    }
}

/// Parses an exact probability from decimal (`0.025`) or fraction (`1/40`)
/// notation; whole numbers also work.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let bad = || Error::BadInput(format!("cannot parse probability '{s}'"));
    let s = s.trim();
    let value = if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        BigRational::new(num, den)
    } else if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_part = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(int_part).map_err(|_| bad())?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = BigInt::from_str(frac_part).map_err(|_| bad())?;
        let magnitude = int_part.abs() * &scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        BigRational::new(signed, scale)
    } else {
        BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)
    };
    if value.is_negative() || value > BigRational::one() {
        return Err(Error::BadInput(format!(
            "probability '{s}' is outside [0, 1]"
        )));
    }
    Ok(value)
}
