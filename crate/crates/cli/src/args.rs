//! Command-line surface of `deltam`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Clone, Debug, Parser)]
#[command(name = "deltam", version, about = "Stability thresholds of polarized toric Fano manifolds")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; JSON unless given.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON layout.
    #[arg(long = "json", global = true, value_enum, default_value_t = JsonStyle::Pretty)]
    pub json_style: JsonStyle,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum JsonStyle {
    Pretty,
    Compact,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Tolerances {
    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Fixed-point / Newton stopping tolerance.
    #[arg(long, global = true)]
    pub fp_tol: Option<f64>,
    /// Escape bound on the gauge-normalized sup (accepts `inf`).
    #[arg(long, global = true)]
    pub escape: Option<f64>,
    /// Floor on the quantized Ding functional (e.g. `--f-floor=-1e3`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f_floor: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Check primitivity, smoothness, completeness and the polarization.
    Validate { input: PathBuf },
    /// δ_m with its exactness bracket, optionally weighted.
    Delta {
        input: PathBuf,
        #[arg(long)]
        m: u64,
        /// `none`, `xi=a,b,...` or `soliton`.
        #[arg(long, default_value = "none", value_parser = parse_weight)]
        weight: WeightSpec,
    },
    /// δ_m over a range of levels.
    DeltaSweep {
        input: PathBuf,
        /// `a..b` (inclusive) or a single level.
        #[arg(long, value_parser = parse_range)]
        m: MRange,
    },
    /// The m → ∞ limit δ(L).
    Limit { input: PathBuf },
    /// Soliton vector, continuous and (with `--m`) quantized.
    Soliton {
        input: PathBuf,
        #[arg(long, value_parser = parse_range)]
        m: Option<MRange>,
    },
    /// Coupled δ for the `components` of a decomposition of -K.
    Coupled {
        input: PathBuf,
        /// One level for all components or a comma-separated list.
        #[arg(long, default_value = "1", value_parser = parse_levels)]
        m: Levels,
    },
    /// Balanced iteration at one δ, or the coercivity threshold with `--threshold`.
    Balanced {
        input: PathBuf,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        threshold: bool,
        /// `zero` or `bump:AMP` (AMP·exp(-|x|²)).
        #[arg(long, default_value = "zero", value_parser = parse_twist)]
        twist: TwistSpec,
        /// `identity` or `ray:I[:T]`.
        #[arg(long, default_value = "identity", value_parser = parse_start)]
        start: StartSpec,
        /// Full Hermitian forms (P^1 only).
        #[arg(long)]
        full: bool,
        #[arg(long)]
        damping: Option<f64>,
        /// Ray time at which threshold probes start.
        #[arg(long)]
        start_time: Option<f64>,
        /// Relative width of the threshold bracket.
        #[arg(long)]
        bisect_tol: Option<f64>,
    },
    /// Moser–Trudinger threshold along destabilizing rays.
    MtThreshold {
        input: PathBuf,
        #[arg(long)]
        m: u64,
        /// Restrict to one ray; otherwise the minimum over all rays.
        #[arg(long)]
        ray: Option<usize>,
        /// δ of the emitted (t, log I(t)) curve; the estimate if omitted.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Samples of the emitted curve on [0, T].
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long)]
        bisect_tol: Option<f64>,
    },
    /// Randomized property checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    None,
    Xi(Vec<f64>),
    Soliton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MRange {
    pub lo: u64,
    pub hi: u64,
}

impl MRange {
    pub fn levels(&self) -> Vec<u64> {
        (self.lo..=self.hi).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Levels(pub Vec<u64>);

#[derive(Clone, Debug, PartialEq)]
pub enum TwistSpec {
    Zero,
    Bump(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartSpec {
    Identity,
    Ray { index: usize, time: f64 },
}

fn level(s: &str) -> Result<u64, String> {
    match s.trim().parse::<u64>() {
        Ok(0) => Err("levels start at 1".into()),
        Ok(m) => Ok(m),
        Err(_) => Err(format!("not a level: {s:?}")),
    }
}

pub fn parse_range(s: &str) -> Result<MRange, String> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (level(a)?, level(b.trim_start_matches('='))?),
        None => {
            let m = level(s)?;
            (m, m)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(MRange { lo, hi })
}

pub fn parse_levels(s: &str) -> Result<Levels, String> {
    s.split(',').map(level).collect::<Result<Vec<_>, _>>().map(Levels)
}

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| match x.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("not a finite number: {x:?}")),
        })
        .collect::<Result<Vec<_>, _>>()
}

pub fn parse_weight(s: &str) -> Result<WeightSpec, String> {
    match s {
        "none" => Ok(WeightSpec::None),
        "soliton" => Ok(WeightSpec::Soliton),
        _ => {
            let rest = s.strip_prefix("xi=").ok_or_else(|| format!("unknown weight {s:?}"))?;
            let xi = floats(rest)?;
            Ok(WeightSpec::Xi(xi))
        }
    }
}

pub fn parse_twist(s: &str) -> Result<TwistSpec, String> {
    if s == "zero" {
        return Ok(TwistSpec::Zero);
    }
    let amp = s.strip_prefix("bump:").ok_or_else(|| format!("unknown twist {s:?}"))?;
    match amp.parse::<f64>() {
        Ok(a) if a.is_finite() => Ok(TwistSpec::Bump(a)),
        _ => Err(format!("malformed bump amplitude {amp:?}")),
    }
}

pub fn parse_start(s: &str) -> Result<StartSpec, String> {
    if s == "identity" {
        return Ok(StartSpec::Identity);
    }
    let rest = s.strip_prefix("ray:").ok_or_else(|| format!("unknown start {s:?}"))?;
    let mut it = rest.split(':');
    let index = it
        .next()
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| format!("malformed ray index in {s:?}"))?;
    let time = match it.next() {
        None => 20.0,
        Some(t) => t.parse::<f64>().ok().filter(|t| t.is_finite()).ok_or_else(|| format!("malformed time in {s:?}"))?,
    };
    if it.next().is_some() {
        return Err(format!("malformed start {s:?}"));
    }
    Ok(StartSpec::Ray { index, time })
}
