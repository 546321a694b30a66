//! Exact Walsh spectrum of the endpoint of a sign-driven coalescing walk.
//!
//! A triangular array of independent random signs drives a walk from the
//! origin; the rescaled endpoint is a multilinear polynomial in the signs.
//! This crate computes that polynomial's coefficients exactly, certifies the
//! closed forms against a brute-force transform, samples spectral sets from
//! the squared-coefficient measure, and runs the Monte Carlo noise
//! experiments that show how sensitive the endpoint is to flipping a small
//! fraction of the signs.
//!
//! Modules, bottom up:
//!
//! - [`dyadic`]: exact `num / 2^e` arithmetic.
//! - [`kernel`]: walk transition kernel and binomials.
//! - [`spectral`]: coefficient and admissibility formulas, the law of the
//!   time projection, and exact renewal dynamic programs.
//! - [`oracle`]: ground-truth full transform over all sign arrays.
//! - [`rng`] / [`sampler`]: counter-based streams and exact samplers.
//! - [`flow`]: coalescing-flow simulation and noise Monte Carlo.
//! - [`verify`]: the exact certification suite.
//! - [`report`]: run manifests and output formats.
//!
//! ```
//! use walshflow::spectral;
//!
//! // the only degree-1 coefficient at horizon 1 is the sign itself
//! let w = spectral::coefficient(&[(0, 0)], 1).unwrap();
//! assert_eq!(w.d().to_string(), "1/2^0");
//! assert_eq!(w.xi_hat(), 1.0);
//! ```

pub mod cli;
pub mod dyadic;
pub mod flow;
pub mod kernel;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod verify;

pub use dyadic::Dyadic;
pub use kernel::Site;
pub use rng::SeededSource;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid site ({x}, {y}): needs |y| <= x and x + y even")]
    InvalidSite { x: u64, y: i64 },
    #[error("site ({x}, {y}) is outside the index set for horizon {n}")]
    SiteOutsideIndexSet { x: u64, y: i64, n: u64 },
    #[error("site list is not an admissible chain for horizon {n}")]
    NotAdmissible { n: u64 },
    #[error("invalid time set: {0}")]
    InvalidTimeSet(String),
    #[error("horizon {n} exceeds the configured bound {bound}: {what}")]
    HorizonBound { n: u64, bound: u64, what: &'static str },
    #[error("flip probability must lie in [0, 1/2], got {0}")]
    EpsRange(String),
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
