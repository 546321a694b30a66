//! Coalescing-flow Monte Carlo.
//!
//! One shared sign field drives walks from many starting points; walks that
//! meet occupy the same sites forever after. Signs are generated lazily,
//! keyed by site, so a long horizon costs memory proportional to the paths
//! actually walked, and a site queried twice (by the base and the perturbed
//! pass of a noise trial) always sees the same value.

use rayon::prelude::*;
use serde::Serialize;

use crate::oracle::SignArray;
use crate::rng::SeededSource;
use crate::{Error, Result};

/// Anything that produces a sign per lattice site.
pub trait SignField {
    fn sign(&self, x: u64, y: i64) -> i8;
}

/// Lazy sign field: an independent fair sign per site, materialized on
/// demand from a counter-based source.
#[derive(Debug, Clone)]
pub struct SignSource {
    src: SeededSource,
}

impl SignSource {
    pub fn new(src: SeededSource) -> Self {
        SignSource { src }
    }
}

impl SignField for SignSource {
    fn sign(&self, x: u64, y: i64) -> i8 {
        if self.src.word_at_site(x, y) & 1 == 1 {
            -1
        } else {
            1
        }
    }
}

impl SignField for SignArray {
    fn sign(&self, x: u64, y: i64) -> i8 {
        SignArray::sign(self, x, y)
    }
}

/// Lazy field of independent flip decisions with probability `eps` each.
#[derive(Debug, Clone)]
pub struct FlipMask {
    src: SeededSource,
    eps: f64,
}

impl FlipMask {
    pub fn new(src: SeededSource, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::EpsRange(eps.to_string()));
        }
        Ok(FlipMask { src, eps })
    }

    pub fn flips(&self, x: u64, y: i64) -> bool {
        let u = (self.src.word_at_site(x, y) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < self.eps
    }
}

/// A sign field with one or more independent flip layers applied on top;
/// layer `k` negates each site independently with its own probability.
#[derive(Debug, Clone)]
pub struct PerturbedSigns {
    base: SignSource,
    layers: Vec<FlipMask>,
}

impl PerturbedSigns {
    pub fn new(base: SignSource) -> Self {
        PerturbedSigns {
            base,
            layers: Vec::new(),
        }
    }

    /// Adds a flip layer; returns the further-perturbed field.
    pub fn perturbed(&self, mask: FlipMask) -> Self {
        let mut layers = self.layers.clone();
        layers.push(mask);
        PerturbedSigns {
            base: self.base.clone(),
            layers,
        }
    }
}

impl SignField for PerturbedSigns {
    fn sign(&self, x: u64, y: i64) -> i8 {
        let mut s = self.base.sign(x, y);
        for layer in &self.layers {
            if layer.flips(x, y) {
                s = -s;
            }
        }
        s
    }
}

/// Flips each stored sign of a materialized array independently with
/// probability `eps`; `eps = 0` is the identity, `eps = 1` negates all.
pub fn perturb_array(tau: &SignArray, eps: f64, src: &SeededSource) -> Result<SignArray> {
    let mask = FlipMask::new(*src, eps)?;
    let mut out = tau.clone();
    for site in crate::oracle::site_order(tau.n()) {
        if mask.flips(site.x(), site.y()) {
            out.flip(site.x(), site.y());
        }
    }
    Ok(out)
}

/// Boundary behavior of a banded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Positions range over all integers.
    Unbounded,
    /// Positions live in `[0, width)`; a walk at a wall steps inward
    /// deterministically, consuming no sign.
    Reflect,
}

/// Time extent, band height and boundary rule of a simulation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub length: u64,
    pub width: u64,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn unbounded(length: u64) -> Self {
        GridSpec {
            length,
            width: 0,
            boundary: Boundary::Unbounded,
        }
    }

    pub fn reflecting(length: u64, width: u64) -> Self {
        GridSpec {
            length,
            width,
            boundary: Boundary::Reflect,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.length < 1 {
            return Err(Error::BadInput("grid length must be >= 1".into()));
        }
        if self.boundary == Boundary::Reflect && self.width < 1 {
            return Err(Error::BadInput("banded grid needs width >= 1".into()));
        }
        Ok(())
    }

    fn check_start(&self, x: u64, y: i64) -> Result<()> {
        if x > self.length {
            return Err(Error::BadInput(format!(
                "start time {x} is beyond the grid length {}",
                self.length
            )));
        }
        if self.boundary == Boundary::Reflect && !(0..self.width as i64).contains(&y) {
            return Err(Error::BadInput(format!(
                "start position {y} is outside the band [0, {})",
                self.width
            )));
        }
        Ok(())
    }

    fn step(&self, signs: &impl SignField, x: u64, pos: i64) -> i64 {
        match self.boundary {
            Boundary::Unbounded => pos + signs.sign(x, pos) as i64,
            Boundary::Reflect => {
                if self.width == 1 {
                    pos
                } else if pos == 0 {
                    1
                } else if pos == self.width as i64 - 1 {
                    pos - 1
                } else {
                    pos + signs.sign(x, pos) as i64
                }
            }
        }
    }
}

/// Trajectories of all starts under one shared sign field, with pairwise
/// first-meeting times.
#[derive(Debug, Clone)]
pub struct FlowResult {
    grid: GridSpec,
    starts: Vec<(u64, i64)>,
    trajectories: Vec<Vec<i64>>,
}

impl FlowResult {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn starts(&self) -> &[(u64, i64)] {
        &self.starts
    }

    /// Positions of start `i` for times `starts[i].0 ..= grid.length`.
    pub fn trajectory(&self, i: usize) -> &[i64] {
        &self.trajectories[i]
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn position(&self, i: usize, x: u64) -> Option<i64> {
        let (x0, _) = self.starts[i];
        x.checked_sub(x0)
            .and_then(|off| self.trajectories[i].get(off as usize).copied())
    }

    /// First time two trajectories share a position, if any.
    pub fn merge_time(&self, i: usize, j: usize) -> Option<u64> {
        let from = self.starts[i].0.max(self.starts[j].0);
        (from..=self.grid.length)
            .find(|&x| self.position(i, x) == self.position(j, x))
    }

    /// Upper-triangle matrix of merge times.
    pub fn merge_times(&self) -> Vec<Vec<Option<u64>>> {
        (0..self.len())
            .map(|i| ((i + 1)..self.len()).map(|j| self.merge_time(i, j)).collect())
            .collect()
    }

    /// Coalescence: after a merge the trajectories are identical.
    pub fn verify_coalescence(&self) -> bool {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if let Some(t) = self.merge_time(i, j) {
                    for x in t..=self.grid.length {
                        if self.position(i, x) != self.position(j, x) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Number of distinct endpoints at the final time.
    pub fn distinct_endpoints(&self) -> usize {
        let mut ends: Vec<i64> = self
            .trajectories
            .iter()
            .map(|t| *t.last().unwrap())
            .collect();
        ends.sort_unstable();
        ends.dedup();
        ends.len()
    }
}

/// Runs the flow on a fresh lazy sign field drawn from `src`.
pub fn simulate_flow(
    grid: &GridSpec,
    starts: &[(u64, i64)],
    src: &SeededSource,
) -> Result<FlowResult> {
    simulate_flow_with(grid, starts, &SignSource::new(*src))
}

/// Runs the flow on an explicit sign field (used for perturbation chains).
pub fn simulate_flow_with(
    grid: &GridSpec,
    starts: &[(u64, i64)],
    signs: &impl SignField,
) -> Result<FlowResult> {
    grid.validate()?;
    for &(x, y) in starts {
        grid.check_start(x, y)?;
    }
    let trajectories = starts
        .iter()
        .map(|&(x0, y0)| {
            let mut path = Vec::with_capacity((grid.length - x0) as usize + 1);
            let mut pos = y0;
            path.push(pos);
            for x in x0..grid.length {
                pos = grid.step(signs, x, pos);
                path.push(pos);
            }
            path
        })
        .collect();
    Ok(FlowResult {
        grid: *grid,
        starts: starts.to_vec(),
        trajectories,
    })
}

/// Evenly spaced `cols x rows` start lattice for a banded grid: time
/// columns at multiples of `length/cols`, positions at interior fractions
/// of the band height.
pub fn lattice_starts(grid: &GridSpec, cols: u64, rows: u64) -> Result<Vec<(u64, i64)>> {
    if grid.boundary != Boundary::Reflect {
        return Err(Error::BadInput(
            "a start lattice needs a banded grid; pass explicit starts instead".into(),
        ));
    }
    if cols < 1 || rows < 1 || rows > grid.width {
        return Err(Error::BadInput("lattice does not fit the band".into()));
    }
    let mut starts = Vec::with_capacity((cols * rows) as usize);
    for c in 0..cols {
        for r in 0..rows {
            let x = c * grid.length / cols;
            let y = ((r + 1) * grid.width / (rows + 1)) as i64;
            starts.push((x, y.min(grid.width as i64 - 1)));
        }
    }
    Ok(starts)
}

/// Monte Carlo estimate of the correlation between the rescaled endpoint
/// and its recomputation after sign flips.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub n: u64,
    pub eps: f64,
    pub trials: u64,
    /// Empirical mean of the endpoint product.
    pub estimate: f64,
    /// Sample standard deviation over sqrt(trials).
    pub stderr: f64,
}

/// Walks `steps` rows from the origin over a sign field.
pub fn walk_endpoint_from(signs: &impl SignField, steps: u64) -> i64 {
    let mut pos = 0i64;
    for x in 0..steps {
        pos += signs.sign(x, pos) as i64;
    }
    pos
}

/// Estimates `E[xi * xi_eps]` over independent trials: each trial draws one
/// lazy sign field, walks the endpoint, flips signs sitewise with
/// probability `eps`, and walks again on the same base field. The estimate
/// is a fixed-order sum over trial index, so thread count cannot change it.
pub fn noise_correlation_mc(
    n: u64,
    eps: f64,
    trials: u64,
    src: &SeededSource,
) -> Result<NoiseReport> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    if trials < 1 {
        return Err(Error::BadInput("need at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::EpsRange(eps.to_string()));
    }
    let sqrt_n = (n as f64).sqrt();
    let products: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = src.derive(t);
            let base = SignSource::new(trial.derive(0));
            let mask = FlipMask::new(trial.derive(1), eps).expect("validated");
            let perturbed = PerturbedSigns::new(base.clone()).perturbed(mask);
            let xi = walk_endpoint_from(&base, n) as f64 / sqrt_n;
            let xi_eps = walk_endpoint_from(&perturbed, n) as f64 / sqrt_n;
            xi * xi_eps
        })
        .collect();

    let mean = products.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let var = products.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(NoiseReport {
        n,
        eps,
        trials,
        estimate: mean,
        stderr,
    })
}
