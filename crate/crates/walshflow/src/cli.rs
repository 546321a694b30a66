//! Command-line surface.
//!
//! Thin dispatch over the library: every subcommand resolves its seed,
//! builds a [`RunManifest`], computes through the exact or float pipeline
//! and emits JSON or CSV with the manifest embedded. Exit codes: 0 success,
//! 1 verification failure (or I/O trouble), 2 usage error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::dyadic::ratio_to_f64;
use crate::flow::{
    lattice_starts, noise_correlation_mc, simulate_flow_with, Boundary, FlipMask, FlowResult,
    GridSpec, PerturbedSigns, SignSource,
};
use crate::oracle::{site_count, table_bytes};
use crate::report::{parse_probability, RunManifest, SEED_ENV};
use crate::rng::SeededSource;
use crate::sampler::{backward_walk, sample_batch};
use crate::spectral::{
    coefficient, expected_size, is_admissible, noise_correlation, r_cumulative,
    r_distribution, size_distribution, ArithMode, TimeSet,
};
use crate::verify::{all_passed, run_suite, ORACLE_CHECK_BOUND};
use crate::{Error, Result};

/// Full time-set enumeration cap for `rdist` (`2^n - 1` rows).
const RDIST_ENUM_BOUND: u64 = 20;
/// Cumulative-sum cap for `rdist --cumulative` (`2^(k+1) - 1` terms).
const CUMULATIVE_SUM_BOUND: u64 = 20;
/// `size` emits the full distribution vector up to this horizon unless
/// `--full` forces it; the expected size is always computed.
const SIZE_VECTOR_BOUND: u64 = 2048;

#[derive(Parser)]
#[command(
    name = "walshflow",
    version,
    about = "Exact Walsh spectrum, samplers and noise experiments for the endpoint of a sign-driven coalescing walk"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for all randomness (default: WALSHFLOW_SEED or 0)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format (each command has a natural default)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sections (output is independent of this)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact coefficient of one site set: d, the float value, admissibility
    Coeff {
        /// Horizon
        n: u64,
        /// Site list "x:y,x:y,..." (empty for the empty set)
        sites: String,
    },
    /// Run the exact certification suite up to horizon N
    Verify {
        n: u64,
        /// Skip the brute-force transform checks (required above n=6)
        #[arg(long)]
        skip_oracle: bool,
    },
    /// Exact law of the projection over all nonempty time sets
    Rdist {
        n: u64,
        /// Report P[projection within [0,k]] instead: closed form and sum
        #[arg(long)]
        cumulative: Option<u64>,
    },
    /// Projection size distribution and expected size
    Size {
        n: u64,
        /// Force the full distribution vector at large horizons
        #[arg(long)]
        full: bool,
    },
    /// Noise correlation of the endpoint: renewal DP, or Monte Carlo with --mc
    Noise {
        n: u64,
        /// Flip probability, decimal or fraction (e.g. 0.025 or 1/40)
        eps: String,
        /// Estimate by Monte Carlo with this many trials
        #[arg(long, value_name = "TRIALS")]
        mc: Option<u64>,
    },
    /// Draw spectral sets; JSON lines with index, projection and sites
    Sample {
        n: u64,
        count: u64,
        /// Also write an empirical-frequency summary CSV
        #[arg(long, value_name = "PATH")]
        summary_out: Option<PathBuf>,
        /// Write the backward-walk trace of sample 0 as CSV (x, v, in_r)
        #[arg(long, value_name = "PATH")]
        walk_csv: Option<PathBuf>,
    },
    /// Coalescing-flow trajectories under chained sign flips
    Flow {
        /// Grid "LENGTHxWIDTH" for a reflecting band, "LENGTH" for unbounded
        grid: String,
        /// Explicit starts "x:y,x:y,..."
        #[arg(long)]
        starts: Option<String>,
        /// Evenly spaced start lattice "COLSxROWS" on a banded grid
        #[arg(long)]
        lattice: Option<String>,
        /// Comma-separated flip probabilities applied cumulatively; each
        /// entry produces one panel of trajectories
        #[arg(long, default_value = "0")]
        eps_chain: String,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore failure if a pool already exists; output cannot depend on it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => 1,
                _ => 2,
            }
        }
    }
}

fn resolve_seed(cli_seed: Option<u64>) -> u64 {
    cli_seed
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn execute(cli: Cli) -> Result<i32> {
    let seed = resolve_seed(cli.seed);
    let format = cli.format;
    let out = cli.out;
    match cli.command {
        Command::Coeff { n, sites } => cmd_coeff(n, &sites, format, &out),
        Command::Verify { n, skip_oracle } => cmd_verify(n, skip_oracle, format, &out),
        Command::Rdist { n, cumulative } => cmd_rdist(n, cumulative, format, &out),
        Command::Size { n, full } => cmd_size(n, full, format, &out),
        Command::Noise { n, eps, mc } => cmd_noise(n, &eps, mc, seed, format, &out),
        Command::Sample {
            n,
            count,
            summary_out,
            walk_csv,
        } => cmd_sample(n, count, seed, summary_out, walk_csv, format, &out),
        Command::Flow {
            grid,
            starts,
            lattice,
            eps_chain,
        } => cmd_flow(&grid, starts, lattice, &eps_chain, seed, format, &out),
    }
}

/// "x:y,x:y" into pairs; empty input is the empty set.
fn parse_sites(s: &str) -> Result<Vec<(u64, i64)>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|part| {
            let (x, y) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::BadInput(format!("bad site '{part}', want x:y")))?;
            let x = x
                .trim()
                .parse()
                .map_err(|_| Error::BadInput(format!("bad time in '{part}'")))?;
            let y = y
                .trim()
                .parse()
                .map_err(|_| Error::BadInput(format!("bad position in '{part}'")))?;
            Ok((x, y))
        })
        .collect()
}

fn sites_key(pairs: &[(u64, i64)]) -> String {
    pairs
        .iter()
        .map(|(x, y)| format!("{x}:{y}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn times_key(xs: &[u64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_coeff(n: u64, sites: &str, format: Option<Format>, out: &Option<PathBuf>) -> Result<i32> {
    let pairs = parse_sites(sites)?;
    let weight = coefficient(&pairs, n)?;
    let admissible = is_admissible(&pairs, n);
    let manifest = RunManifest::new(
        "coeff",
        serde_json::json!({"n": n, "sites": sites}),
        resolve_seed(None),
        ArithMode::Exact,
    );
    let content = match format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "n": n,
                "sites": pairs,
                "admissible": admissible,
                "d": weight.d().to_string(),
                "weight": weight.xi_hat(),
            });
            format!("{doc}\n")
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", manifest.csv_comment());
            let _ = writeln!(s, "n,sites,admissible,d,weight");
            let _ = writeln!(
                s,
                "{n},{},{admissible},{},{}",
                sites_key(&pairs),
                weight.d(),
                weight.xi_hat()
            );
            s
        }
    };
    emit(out, &content)?;
    Ok(0)
}

fn cmd_verify(
    n: u64,
    skip_oracle: bool,
    format: Option<Format>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    let include_oracle = !skip_oracle;
    if include_oracle && n > ORACLE_CHECK_BOUND {
        return Err(Error::BadInput(format!(
            "verify at n={n} would need a 2^{}-entry transform table ({:.1} GiB); \
             the oracle checks stop at n={ORACLE_CHECK_BOUND}. Rerun with --skip-oracle \
             to run the remaining checks.",
            site_count(n),
            table_bytes(n) as f64 / (1u64 << 30) as f64,
        )));
    }
    if include_oracle {
        let h = n.min(ORACLE_CHECK_BOUND);
        eprintln!(
            "# oracle table at n={h}: 2^{} x 4 B = {} bytes",
            site_count(h),
            table_bytes(h)
        );
    }
    let checks = run_suite(n, include_oracle)?;
    let passed = all_passed(&checks);
    let manifest = RunManifest::new(
        "verify",
        serde_json::json!({"n": n, "skip_oracle": skip_oracle}),
        resolve_seed(None),
        ArithMode::Exact,
    );
    let content = match format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "passed": passed,
                "checks": checks,
            });
            format!("{doc}\n")
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", manifest.csv_comment());
            let _ = writeln!(s, "check,passed,detail");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},\"{}\"",
                    c.name,
                    c.passed,
                    c.detail.replace('"', "\"\"")
                );
            }
            s
        }
    };
    emit(out, &content)?;
    if !passed {
        let first = checks.iter().find(|c| !c.passed).unwrap();
        eprintln!("verification failed: {} ({})", first.name, first.detail);
        return Ok(1);
    }
    Ok(0)
}

fn cmd_rdist(
    n: u64,
    cumulative: Option<u64>,
    format: Option<Format>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::BadInput("horizon must be >= 1".into()));
    }
    let manifest = RunManifest::new(
        "rdist",
        serde_json::json!({"n": n, "cumulative": cumulative}),
        resolve_seed(None),
        ArithMode::Exact,
    );

    if let Some(k) = cumulative {
        let closed = r_cumulative(k, n)?;
        let summed = if k <= CUMULATIVE_SUM_BOUND {
            let mut total = BigRational::new(0.into(), 1.into());
            for mask in 1u64..(1 << (k + 1)) {
                let xs: Vec<u64> = (0..=k).filter(|x| mask >> x & 1 == 1).collect();
                total += r_distribution(&TimeSet::new(xs, n)?);
            }
            Some(total)
        } else {
            None
        };
        let equal = summed.as_ref().map(|s| s == &closed);
        let content = match format.unwrap_or(Format::Csv) {
            Format::Json => {
                let doc = serde_json::json!({
                    "manifest": manifest.to_json(),
                    "n": n,
                    "k": k,
                    "closed": rational_str(&closed),
                    "closed_float": ratio_to_f64(closed.numer(), closed.denom()),
                    "summed": summed.as_ref().map(rational_str),
                    "equal": equal,
                });
                format!("{doc}\n")
            }
            Format::Csv => {
                let mut s = String::new();
                let _ = writeln!(s, "{}", manifest.csv_comment());
                let _ = writeln!(s, "k,closed,summed,equal");
                let _ = writeln!(
                    s,
                    "{k},{},{},{}",
                    rational_str(&closed),
                    summed.as_ref().map(rational_str).unwrap_or_default(),
                    equal.map(|e| e.to_string()).unwrap_or_default()
                );
                s
            }
        };
        emit(out, &content)?;
        return Ok(0);
    }

    if n > RDIST_ENUM_BOUND {
        return Err(Error::HorizonBound {
            n,
            bound: RDIST_ENUM_BOUND,
            what: "full time-set enumeration (use --cumulative instead)",
        });
    }
    let mut rows = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u64..(1 << n) {
        let xs: Vec<u64> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
        let prob = r_distribution(&TimeSet::new(xs.clone(), n)?);
        rows.push((xs, prob));
    }
    let content = match format.unwrap_or(Format::Csv) {
        Format::Json => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", serde_json::json!({"manifest": manifest.to_json()}));
            for (xs, prob) in &rows {
                let doc = serde_json::json!({
                    "set": xs,
                    "probability": ratio_to_f64(prob.numer(), prob.denom()),
                    "exact": rational_str(prob),
                });
                let _ = writeln!(s, "{doc}");
            }
            s
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", manifest.csv_comment());
            let _ = writeln!(s, "set,probability,exact");
            for (xs, prob) in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    times_key(xs),
                    ratio_to_f64(prob.numer(), prob.denom()),
                    rational_str(prob)
                );
            }
            s
        }
    };
    emit(out, &content)?;
    Ok(0)
}

fn cmd_size(n: u64, full: bool, format: Option<Format>, out: &Option<PathBuf>) -> Result<i32> {
    let mode = ArithMode::for_horizon(n);
    let expected = expected_size(n)?;
    let expected_f = expected.to_f64();
    let over_sqrt = expected_f / (n as f64).sqrt();
    let with_vector = full || n <= SIZE_VECTOR_BOUND;
    let dist = if with_vector {
        Some(size_distribution(n)?)
    } else {
        None
    };
    let manifest = RunManifest::new(
        "size",
        serde_json::json!({"n": n, "full": full}),
        resolve_seed(None),
        mode,
    );
    let content = match format.unwrap_or(Format::Csv) {
        Format::Json => {
            let probs = dist.as_ref().map(|d| {
                let floats = d.probs_f64();
                (1..=n)
                    .map(|m| {
                        serde_json::json!({
                            "m": m,
                            "probability": floats[m as usize - 1],
                            "exact": d
                                .exact_probs()
                                .map(|ps| rational_str(&ps[m as usize - 1])),
                        })
                    })
                    .collect::<Vec<_>>()
            });
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "n": n,
                "mode": mode,
                "expected": expected_f,
                "expected_exact": expected.exact().map(rational_str),
                "expected_over_sqrt_n": over_sqrt,
                "probs": probs,
            });
            format!("{doc}\n")
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", manifest.csv_comment());
            let _ = writeln!(
                s,
                "# expected={expected_f} expected_over_sqrt_n={over_sqrt}{}",
                expected
                    .exact()
                    .map(|e| format!(" expected_exact={}", rational_str(e)))
                    .unwrap_or_default()
            );
            let _ = writeln!(s, "m,probability,exact");
            if let Some(d) = &dist {
                let floats = d.probs_f64();
                for m in 1..=n as usize {
                    let _ = writeln!(
                        s,
                        "{m},{},{}",
                        floats[m - 1],
                        d.exact_probs()
                            .map(|ps| rational_str(&ps[m - 1]))
                            .unwrap_or_default()
                    );
                }
            }
            s
        }
    };
    emit(out, &content)?;
    Ok(0)
}

fn cmd_noise(
    n: u64,
    eps_str: &str,
    mc: Option<u64>,
    seed: u64,
    format: Option<Format>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let eps = parse_probability(eps_str)?;
    let eps_f = ratio_to_f64(eps.numer(), eps.denom());
    match mc {
        None => {
            let value = noise_correlation(n, &eps)?;
            let manifest = RunManifest::new(
                "noise",
                serde_json::json!({"n": n, "eps": eps_str, "mc": null}),
                seed,
                value.mode(),
            );
            let content = match format.unwrap_or(Format::Json) {
                Format::Json => {
                    let doc = serde_json::json!({
                        "manifest": manifest.to_json(),
                        "n": n,
                        "eps": eps_f,
                        "method": "dp",
                        "mode": value.mode(),
                        "value": value.to_f64(),
                        "exact": value.exact().map(rational_str),
                    });
                    format!("{doc}\n")
                }
                Format::Csv => {
                    let mut s = String::new();
                    let _ = writeln!(s, "{}", manifest.csv_comment());
                    let _ = writeln!(s, "n,eps,method,value,exact");
                    let _ = writeln!(
                        s,
                        "{n},{eps_f},dp,{},{}",
                        value.to_f64(),
                        value.exact().map(rational_str).unwrap_or_default()
                    );
                    s
                }
            };
            emit(out, &content)?;
            Ok(0)
        }
        Some(trials) => {
            let src = SeededSource::new(seed, 0);
            let report = noise_correlation_mc(n, eps_f, trials, &src)?;
            let dp_value = noise_correlation(n, &eps)?.to_f64();
            let manifest = RunManifest::new(
                "noise",
                serde_json::json!({"n": n, "eps": eps_str, "mc": trials}),
                seed,
                ArithMode::Float,
            );
            let content = match format.unwrap_or(Format::Json) {
                Format::Json => {
                    let doc = serde_json::json!({
                        "manifest": manifest.to_json(),
                        "n": n,
                        "eps": eps_f,
                        "method": "mc",
                        "trials": trials,
                        "estimate": report.estimate,
                        "stderr": report.stderr,
                        "dp_value": dp_value,
                    });
                    format!("{doc}\n")
                }
                Format::Csv => {
                    let mut s = String::new();
                    let _ = writeln!(s, "{}", manifest.csv_comment());
                    let _ = writeln!(s, "n,eps,method,trials,estimate,stderr,dp_value");
                    let _ = writeln!(
                        s,
                        "{n},{eps_f},mc,{trials},{},{},{dp_value}",
                        report.estimate, report.stderr
                    );
                    s
                }
            };
            emit(out, &content)?;
            Ok(0)
        }
    }
}

fn summary_csv(
    manifest: &RunManifest,
    samples: &[crate::spectral::SpectralSet],
) -> String {
    use std::collections::BTreeMap;
    let mut r_counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut s_counts: BTreeMap<Vec<(u64, i64)>, u64> = BTreeMap::new();
    for s in samples {
        *r_counts.entry(s.projection().xs().to_vec()).or_insert(0) += 1;
        *s_counts.entry(s.pairs()).or_insert(0) += 1;
    }
    let total = samples.len() as f64;
    let mut out = String::new();
    let _ = writeln!(out, "{}", manifest.csv_comment());
    let _ = writeln!(out, "kind,key,count,frequency");
    for (xs, c) in &r_counts {
        let _ = writeln!(out, "R,{},{c},{}", times_key(xs), *c as f64 / total);
    }
    for (pairs, c) in &s_counts {
        let _ = writeln!(out, "S,{},{c},{}", sites_key(pairs), *c as f64 / total);
    }
    out
}

fn cmd_sample(
    n: u64,
    count: u64,
    seed: u64,
    summary_out: Option<PathBuf>,
    walk_csv: Option<PathBuf>,
    format: Option<Format>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    if count == 0 {
        return Err(Error::BadInput("need at least one sample".into()));
    }
    let src = SeededSource::new(seed, 0);
    let samples = sample_batch(n, count, &src)?;
    let manifest = RunManifest::new(
        "sample",
        serde_json::json!({"n": n, "count": count}),
        seed,
        ArithMode::Exact,
    );

    let content = match format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", serde_json::json!({"manifest": manifest.to_json()}));
            for (i, set) in samples.iter().enumerate() {
                let doc = serde_json::json!({
                    "index": i,
                    "R": set.projection().xs(),
                    "S": set.pairs(),
                });
                let _ = writeln!(s, "{doc}");
            }
            s
        }
        Format::Csv => summary_csv(&manifest, &samples),
    };
    emit(out, &content)?;

    if let Some(path) = summary_out {
        std::fs::write(&path, summary_csv(&manifest, &samples))?;
    }

    if let Some(path) = walk_csv {
        // sample 0 drew its projection on substream 0 of its own stream
        let walk = backward_walk(n, &src.derive(0).derive(0))?;
        let mut s = String::new();
        let _ = writeln!(s, "{}", manifest.csv_comment());
        let _ = writeln!(s, "# x_m={}", walk.x_m());
        let _ = writeln!(s, "x,v,in_r");
        for x in 0..=walk.x_m() {
            let v = walk.values()[(walk.x_m() - x) as usize];
            let _ = writeln!(s, "{x},{v},{}", u8::from(v == 0));
        }
        std::fs::write(&path, s)?;
    }
    Ok(0)
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::BadInput(format!("bad grid '{s}', want LENGTH or LENGTHxWIDTH"));
    match s.split_once(['x', 'X']) {
        None => Ok(GridSpec::unbounded(s.trim().parse().map_err(|_| bad())?)),
        Some((l, w)) => Ok(GridSpec::reflecting(
            l.trim().parse().map_err(|_| bad())?,
            w.trim().parse().map_err(|_| bad())?,
        )),
    }
}

fn parse_lattice(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::BadInput(format!("bad lattice '{s}', want COLSxROWS"));
    let (c, r) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        c.trim().parse().map_err(|_| bad())?,
        r.trim().parse().map_err(|_| bad())?,
    ))
}

fn panel_csv(manifest: &RunManifest, panel: usize, eps: f64, result: &FlowResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", manifest.csv_comment());
    let _ = writeln!(s, "# panel={panel} eps={eps}");
    let _ = writeln!(s, "start_id,x,position");
    for i in 0..result.len() {
        let (x0, _) = result.starts()[i];
        for (off, pos) in result.trajectory(i).iter().enumerate() {
            let _ = writeln!(s, "{i},{},{pos}", x0 + off as u64);
        }
    }
    s
}

fn cmd_flow(
    grid_str: &str,
    starts: Option<String>,
    lattice: Option<String>,
    eps_chain: &str,
    seed: u64,
    format: Option<Format>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let grid = parse_grid(grid_str)?;
    let start_points = match (&starts, &lattice) {
        (Some(_), Some(_)) => {
            return Err(Error::BadInput(
                "pass either --starts or --lattice, not both".into(),
            ))
        }
        (Some(s), None) => parse_sites(s)?,
        (None, Some(l)) => {
            let (cols, rows) = parse_lattice(l)?;
            lattice_starts(&grid, cols, rows)?
        }
        (None, None) => match grid.boundary {
            Boundary::Reflect => lattice_starts(&grid, 4, 3)?,
            Boundary::Unbounded => vec![(0, 0)],
        },
    };
    if start_points.is_empty() {
        return Err(Error::BadInput("no start points".into()));
    }
    let eps_values: Vec<f64> = eps_chain
        .split(',')
        .map(|part| {
            let r = parse_probability(part)?;
            Ok(ratio_to_f64(r.numer(), r.denom()))
        })
        .collect::<Result<_>>()?;
    if eps_values.is_empty() {
        return Err(Error::BadInput("empty eps chain".into()));
    }

    let src = SeededSource::new(seed, 0);
    let base = SignSource::new(src.derive(0));
    let manifest = RunManifest::new(
        "flow",
        serde_json::json!({
            "grid": grid_str,
            "boundary": grid.boundary,
            "starts": start_points,
            "starts_arg": starts,
            "lattice": lattice,
            "eps_chain": eps_chain,
        }),
        seed,
        ArithMode::Float,
    );

    // panel k walks the base field perturbed by flip layers 1..=k
    let mut fields = Vec::with_capacity(eps_values.len());
    let mut current = PerturbedSigns::new(base);
    for (k, &eps) in eps_values.iter().enumerate() {
        if k == 0 && eps == 0.0 {
            // common case: the first panel is the unperturbed array
        } else {
            current = current.perturbed(FlipMask::new(src.derive(k as u64 + 1), eps)?);
        }
        fields.push(current.clone());
    }
    let results: Vec<FlowResult> = fields
        .iter()
        .map(|f| simulate_flow_with(&grid, &start_points, f))
        .collect::<Result<_>>()?;

    match format.unwrap_or(Format::Csv) {
        Format::Csv => match out {
            Some(path) => {
                for (k, res) in results.iter().enumerate() {
                    let panel_path = panel_file(path, k);
                    std::fs::write(&panel_path, panel_csv(&manifest, k, eps_values[k], res))?;
                }
            }
            None => {
                for (k, res) in results.iter().enumerate() {
                    print!("{}", panel_csv(&manifest, k, eps_values[k], res));
                }
            }
        },
        Format::Json => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", serde_json::json!({"manifest": manifest.to_json()}));
            for (k, res) in results.iter().enumerate() {
                let trajectories: Vec<serde_json::Value> = (0..res.len())
                    .map(|i| {
                        serde_json::json!({
                            "start": i,
                            "x0": res.starts()[i].0,
                            "positions": res.trajectory(i),
                        })
                    })
                    .collect();
                let merges: Vec<serde_json::Value> = (0..res.len())
                    .flat_map(|i| {
                        ((i + 1)..res.len())
                            .map(move |j| (i, j))
                    })
                    .map(|(i, j)| serde_json::json!([i, j, res.merge_time(i, j)]))
                    .collect();
                let doc = serde_json::json!({
                    "panel": k,
                    "eps": eps_values[k],
                    "starts": res.starts(),
                    "trajectories": trajectories,
                    "merge_times": merges,
                    "distinct_endpoints": res.distinct_endpoints(),
                });
                let _ = writeln!(s, "{doc}");
            }
            emit(out, &s)?;
        }
    }
    Ok(0)
}

fn panel_file(base: &Path, panel: usize) -> PathBuf {
    let mut name = base.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".panel{panel}.csv"));
    base.with_file_name(name)
}
