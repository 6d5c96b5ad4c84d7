//! The `(f, δ)`-balanced fixed-point iteration `K ↦ Hilb^{f,δ}(FS(K))` and the coercivity
//! threshold it detects.

use std::sync::Arc;

use deltam_core::thresholds::ToricValuation;
use serde::Serialize;

use crate::basis::SectionBasis;
use crate::error::{BergmanError, Result};
use crate::form::{d1_m, HermitianForm};
use crate::potential::{fs, Twist};
use crate::quadrature::QuadOptions;
use crate::ray::ray_from_valuation;

#[derive(Clone, Copy, Debug)]
pub struct BalancedOptions {
    /// Stop when `d_{1,m}` between consecutive iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence once `(1/m) log max μ - E_m` exceeds this (gauge with `det = 1`).
    pub escape: f64,
    /// Divergence once `F_m` drops below this.
    pub f_floor: f64,
    /// Geodesic step `K ← K^{1-s} K_new^s`.
    pub damping: f64,
    pub quad: QuadOptions,
}

impl Default for BalancedOptions {
    fn default() -> Self {
        BalancedOptions {
            tol: 1e-10,
            max_iter: 20_000,
            escape: 1e3,
            f_floor: -1e3,
            damping: 1.0,
            quad: QuadOptions { tol: 1e-11, ..QuadOptions::default() },
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceEntry {
    pub j: usize,
    /// `d_{1,m}(K_j, K_{j+1})`.
    pub d1m: f64,
    /// `F_m^{f,δ}(FS(K_j))`.
    pub f_m: f64,
    /// `(1/m) log max μ(K_j) - E_m(H, K_j)`.
    pub gauge: f64,
}

#[derive(Clone, Debug)]
pub enum BalancedOutcome {
    Converged { form: HermitianForm, residual: f64, trace: Vec<TraceEntry> },
    Diverged { trace: Vec<TraceEntry>, reason: String },
    MaxIter { form: HermitianForm, trace: Vec<TraceEntry> },
}

impl BalancedOutcome {
    pub fn trace(&self) -> &[TraceEntry] {
        match self {
            BalancedOutcome::Converged { trace, .. }
            | BalancedOutcome::Diverged { trace, .. }
            | BalancedOutcome::MaxIter { trace, .. } => trace,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BalancedOutcome::Converged { .. } => "converged",
            BalancedOutcome::Diverged { .. } => "diverged",
            BalancedOutcome::MaxIter { .. } => "max_iter",
        }
    }

    /// Whether the run looks coercive. Runs cut off by `max_iter` are read from the drift of
    /// the gauge over the second half of the trace.
    pub fn coercive(&self) -> bool {
        match self {
            BalancedOutcome::Converged { .. } => true,
            BalancedOutcome::Diverged { .. } => false,
            BalancedOutcome::MaxIter { trace, .. } => {
                let half = &trace[trace.len() / 2..];
                match (half.first(), half.last()) {
                    (Some(a), Some(b)) => b.gauge <= a.gauge,
                    _ => true,
                }
            }
        }
    }
}

/// `max |μ'/μ - 1|` (diagonal) or relative Frobenius distance (full).
fn residual(a: &HermitianForm, b: &HermitianForm) -> f64 {
    match (a, b) {
        (HermitianForm::Diagonal { log_mu: x }, HermitianForm::Diagonal { log_mu: y }) => {
            x.iter().zip(y).map(|(p, q)| (q - p).exp_m1().abs()).fold(0.0, f64::max)
        }
        _ => {
            let (x, y) = (a.to_full(), b.to_full());
            (&y - &x).norm() / x.norm()
        }
    }
}

pub fn balanced_iterate(
    basis: &Arc<SectionBasis>,
    delta: f64,
    f: &Twist,
    h0: &HermitianForm,
    opts: &BalancedOptions,
) -> Result<BalancedOutcome> {
    let m = basis.mf();
    let reference = HermitianForm::identity(basis.d());
    let mut k = h0.normalized();
    let mut damping = opts.damping;
    let mut prev: Option<HermitianForm> = None;
    let mut trace: Vec<TraceEntry> = Vec::new();
    for j in 0..opts.max_iter {
        let phi = fs(basis, k.clone())?;
        let out = phi.hilb(f, delta, &opts.quad)?;
        let f_m = phi.ding_from_log_z(out.log_z, delta, &reference);
        let raw = out.form.normalized();
        let next = if damping == 1.0 { raw } else { k.geodesic(&raw, damping) };
        let step = d1_m(basis.m, &k, &next);
        let gauge = k.log_max_eigenvalue() / m;
        trace.push(TraceEntry { j, d1m: step, f_m, gauge });
        if !f_m.is_finite() || f_m < opts.f_floor {
            return Ok(BalancedOutcome::Diverged { trace, reason: format!("F_m = {f_m:.6e} below floor") });
        }
        if gauge > opts.escape {
            return Ok(BalancedOutcome::Diverged { trace, reason: format!("gauge {gauge:.6e} beyond escape bound") });
        }
        if step < opts.tol {
            let check = fs(basis, next.clone())?.hilb(f, delta, &opts.quad)?.form;
            let residual = residual(&next, &check);
            return Ok(BalancedOutcome::Converged { form: next, residual, trace });
        }
        // period-two oscillation: fall back to half steps
        if damping == 1.0 {
            if let Some(p) = &prev {
                if d1_m(basis.m, p, &next) < 0.5 * step {
                    damping = 0.5;
                }
            }
        }
        prev = Some(k);
        k = next;
    }
    Ok(BalancedOutcome::MaxIter { form: k, trace })
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub delta: f64,
    pub outcome: &'static str,
    pub coercive: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayThreshold {
    pub ray: usize,
    pub value: f64,
    pub bracket: (f64, f64),
    pub probes: Vec<Probe>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BalancedThreshold {
    pub value: f64,
    pub witness_ray: usize,
    pub twist: String,
    pub per_ray: Vec<RayThreshold>,
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdOptions {
    pub iterate: BalancedOptions,
    /// Start of each probe: the destabilizing ray of the candidate valuation at this time.
    pub start_time: f64,
    /// Relative width of the final bracket.
    pub tol: f64,
    /// First δ probed; the bracket grows from here by doubling or halving.
    pub initial: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            iterate: BalancedOptions { max_iter: 3000, tol: 1e-9, ..BalancedOptions::default() },
            start_time: 20.0,
            tol: 1e-2,
            initial: 0.7,
        }
    }
}

fn probe(
    basis: &Arc<SectionBasis>,
    delta: f64,
    f: &Twist,
    h0: &HermitianForm,
    opts: &ThresholdOptions,
) -> Result<Probe> {
    let out = balanced_iterate(basis, delta, f, h0, &opts.iterate)?;
    Ok(Probe { delta, outcome: out.label(), coercive: out.coercive(), iterations: out.trace().len() })
}

/// Bisection on the coercivity classification, started along each destabilizing ray.
pub fn balanced_threshold(basis: &Arc<SectionBasis>, f: &Twist, opts: &ThresholdOptions) -> Result<BalancedThreshold> {
    let mut per_ray = Vec::new();
    for (i, v) in ToricValuation::rays(&basis.pair.fan).iter().enumerate() {
        let h0 = ray_from_valuation(basis, v)?.form_at(opts.start_time);
        let mut probes = Vec::new();
        let d0 = opts.initial;
        let mut p = probe(basis, d0, f, &h0, opts)?;
        probes.push(p.clone());
        let (mut lo, mut hi) = if p.coercive { (d0, f64::NAN) } else { (f64::NAN, d0) };
        // bracket by doubling or halving
        for _ in 0..12 {
            if lo.is_nan() {
                p = probe(basis, hi / 2.0, f, &h0, opts)?;
                probes.push(p.clone());
                if p.coercive {
                    lo = hi / 2.0;
                    break;
                }
                hi /= 2.0;
            } else if hi.is_nan() {
                p = probe(basis, lo * 2.0, f, &h0, opts)?;
                probes.push(p.clone());
                if !p.coercive {
                    hi = lo * 2.0;
                    break;
                }
                lo *= 2.0;
            } else {
                break;
            }
        }
        if lo.is_nan() || hi.is_nan() {
            return Err(BergmanError::Inconclusive {
                detail: format!("no coercivity bracket along ray {i}"),
                trace: probes.iter().map(|p| (p.delta, p.outcome.to_string())).collect(),
            });
        }
        while hi - lo > opts.tol * hi {
            let mid = 0.5 * (lo + hi);
            p = probe(basis, mid, f, &h0, opts)?;
            probes.push(p.clone());
            if p.coercive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // re-check both ends; a flip means the classifier is unreliable here
        let a = probe(basis, lo, f, &h0, opts)?;
        let b = probe(basis, hi, f, &h0, opts)?;
        let flipped = !a.coercive || b.coercive;
        probes.push(a);
        probes.push(b);
        if flipped {
            return Err(BergmanError::Inconclusive {
                detail: format!("classification flipped on re-check along ray {i}"),
                trace: probes.iter().map(|p| (p.delta, p.outcome.to_string())).collect(),
            });
        }
        per_ray.push(RayThreshold { ray: i, value: 0.5 * (lo + hi), bracket: (lo, hi), probes });
    }
    let (witness_ray, value) = per_ray
        .iter()
        .map(|r| (r.ray, r.value))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("fans have rays");
    Ok(BalancedThreshold { value, witness_ray, twist: f.label().to_string(), per_ray })
}
