//! Destabilizing Bergman geodesic rays and the Moser–Trudinger probe of the analytic threshold.

use std::sync::Arc;

use deltam_core::rational::to_f64;
use deltam_core::thresholds::{log_discrepancy, ord_section, s_m, Sections, ToricValuation};
use deltam_core::Rational;
use serde::Serialize;

use crate::basis::{dot, lse, SectionBasis};
use crate::error::{BergmanError, Result};
use crate::form::{energy_e_m_exact, HermitianForm};
use crate::potential::{fs, BergmanPotential};
use crate::quadrature::{QuadOptions, Term};

/// `μ_u(t) = e^{t λ_u}` over the identity form, `λ_u = ord_v(χ^u)`.
#[derive(Clone, Debug)]
pub struct GeodesicRay {
    pub basis: Arc<SectionBasis>,
    pub valuation: ToricValuation,
    pub lambda: Vec<Rational>,
    pub s_m: Rational,
    pub a_x: Rational,
    lambda_f: Vec<f64>,
}

pub fn ray_from_valuation(basis: &Arc<SectionBasis>, v: &ToricValuation) -> Result<GeodesicRay> {
    let pair = &basis.pair;
    let lambda = basis
        .lattice
        .iter()
        .map(|u| ord_section(pair, basis.m, u, v))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let sections = Sections::new(pair, basis.m)?;
    Ok(GeodesicRay {
        basis: basis.clone(),
        valuation: v.clone(),
        lambda_f: lambda.iter().map(to_f64).collect(),
        lambda,
        s_m: s_m(pair, &sections, v),
        a_x: log_discrepancy(&pair.fan, v),
    })
}

impl GeodesicRay {
    pub fn form_at(&self, t: f64) -> HermitianForm {
        HermitianForm::diagonal(self.lambda_f.iter().map(|l| t * l).collect())
    }

    pub fn potential(&self, t: f64) -> BergmanPotential {
        fs(&self.basis, self.form_at(t)).expect("ray forms are diagonal and finite")
    }

    /// `E_m(H, φ(t))` in exact arithmetic.
    pub fn energy_exact(&self, t: &Rational) -> Rational {
        let zero = vec![Rational::from_integer(0.into()); self.lambda.len()];
        let k: Vec<Rational> = self.lambda.iter().map(|l| l * t).collect();
        energy_e_m_exact(self.basis.m, &zero, &k)
    }

    pub fn energy(&self, t: f64) -> f64 {
        t * to_f64(&self.s_m)
    }

    /// `log ∫ e^{-δ φ(t)} MA` for several `δ` at once.
    pub fn log_masses(&self, deltas: &[f64], t: f64, quad: &QuadOptions) -> Result<Vec<f64>> {
        let phi = self.potential(t);
        let b = &self.basis;
        let m = b.mf();
        let c = self.form_at(t);
        let HermitianForm::Diagonal { log_mu } = &c else { unreachable!() };
        let r = b.integrate_ma(&phi.hints(), deltas.len(), quad, |x, lm| {
            let lq = lse(log_mu.iter().zip(&b.points).map(|(c, u)| c + dot(u, x)));
            let p = lq / m - b.reference.psi(x);
            deltas.iter().map(|d| Term::positive(lm - d * p)).collect()
        })?;
        Ok((0..deltas.len()).map(|k| r.log(k)).collect())
    }

    /// `log I(t)`, `I(t) = ∫ e^{-δ(φ(t) - E_m(H, φ(t)))} MA`.
    pub fn mt_log_integral(&self, delta: f64, t: f64, quad: &QuadOptions) -> Result<f64> {
        Ok(self.log_masses(&[delta], t, quad)?[0] + delta * self.energy(t))
    }

    pub fn mt_integral(&self, delta: f64, t: f64, quad: &QuadOptions) -> Result<f64> {
        Ok(self.mt_log_integral(delta, t, quad)?.exp())
    }

    /// `log J(t) = log I(t) - t (δ S_m - A_X)`, the integral bounded below along the ray.
    pub fn bracketed_log_integral(&self, delta: f64, t: f64, quad: &QuadOptions) -> Result<f64> {
        let a = to_f64(&self.a_x);
        Ok(self.log_masses(&[delta], t, quad)?[0] + t * a)
    }

    /// Least-squares slopes of `log I` on `[T/2, T]` for each `δ`.
    pub fn mt_slopes(&self, deltas: &[f64], opts: &MtOptions) -> Result<Vec<f64>> {
        let horizon = opts.horizon_for(self.basis.m);
        self.slopes_at(deltas, horizon, opts)
    }

    fn slopes_at(&self, deltas: &[f64], horizon: f64, opts: &MtOptions) -> Result<Vec<f64>> {
        let n = opts.samples.max(2);
        let ts: Vec<f64> = (0..n).map(|j| horizon * (0.5 + 0.5 * j as f64 / (n - 1) as f64)).collect();
        let mut rows = Vec::with_capacity(n);
        for &t in &ts {
            let masses = self.log_masses(deltas, t, &opts.quad)?;
            rows.push(masses.iter().zip(deltas).map(|(l, d)| l + d * self.energy(t)).collect::<Vec<_>>());
        }
        let tm = ts.iter().sum::<f64>() / n as f64;
        let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
        Ok((0..deltas.len())
            .map(|k| {
                let ym = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
                ts.iter().zip(&rows).map(|(t, r)| (t - tm) * (r[k] - ym)).sum::<f64>() / stt
            })
            .collect())
    }

    pub fn mt_slope(&self, delta: f64, opts: &MtOptions) -> Result<f64> {
        Ok(self.mt_slopes(&[delta], opts)?[0])
    }

    /// Zero of the slope in `δ`, located by repeated sectioning of a sign-change bracket.
    pub fn mt_threshold(&self, opts: &MtOptions) -> Result<MtThreshold> {
        let mut horizon = opts.horizon_for(self.basis.m);
        let mut attempts = Vec::new();
        for _ in 0..=opts.widen {
            match self.threshold_at(horizon, opts) {
                Ok(mut r) => {
                    r.attempts = attempts;
                    return Ok(r);
                }
                Err(BergmanError::Indeterminate(msg)) => {
                    attempts.push((horizon, msg));
                    horizon *= 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        Err(BergmanError::Inconclusive {
            detail: format!("slope sign undetermined along ray {:?}", self.valuation.ray),
            trace: attempts,
        })
    }

    fn threshold_at(&self, horizon: f64, opts: &MtOptions) -> Result<MtThreshold> {
        let mut trace: Vec<(f64, f64)> = Vec::new();
        // coarse geometric scan, then linear refinement of the bracket
        let mut grid: Vec<f64> = (-12..=12).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
        let mut bracket = None;
        for _ in 0..3 {
            let s = self.slopes_at(&grid, horizon, opts)?;
            trace.extend(grid.iter().copied().zip(s.iter().copied()));
            if let Some(k) = (1..grid.len()).find(|&k| s[k - 1] < 0.0 && s[k] >= 0.0) {
                bracket = Some((grid[k - 1], s[k - 1], grid[k], s[k]));
                break;
            }
            if s.iter().all(|v| *v < 0.0) {
                let top = *grid.last().unwrap();
                grid = (1..=12).map(|k| top * 2f64.powi(k)).collect();
            } else {
                return Err(BergmanError::Indeterminate("no negative slope found".into()));
            }
        }
        let (mut lo, mut slo, mut hi, mut shi) =
            bracket.ok_or_else(|| BergmanError::Indeterminate("no sign change up to large δ".into()))?;
        while (hi - lo) > opts.tol * hi {
            if slo.abs().max(shi.abs()) < opts.noise_floor {
                return Err(BergmanError::Indeterminate(format!(
                    "|slope| below {:e} on [{lo}, {hi}]",
                    opts.noise_floor
                )));
            }
            let k = opts.section.max(2);
            let g: Vec<f64> = (1..k).map(|j| lo + (hi - lo) * j as f64 / k as f64).collect();
            let s = self.slopes_at(&g, horizon, opts)?;
            trace.extend(g.iter().copied().zip(s.iter().copied()));
            let mut pts = vec![(lo, slo)];
            pts.extend(g.into_iter().zip(s));
            pts.push((hi, shi));
            let k = (1..pts.len()).find(|&k| pts[k - 1].1 < 0.0 && pts[k].1 >= 0.0).ok_or_else(|| {
                BergmanError::Indeterminate("sign change lost during refinement".into())
            })?;
            (lo, slo) = pts[k - 1];
            (hi, shi) = pts[k];
        }
        let value = if shi > slo { lo - slo * (hi - lo) / (shi - slo) } else { 0.5 * (lo + hi) };
        Ok(MtThreshold {
            value,
            bracket: (lo, hi),
            horizon,
            ray: self.valuation.ray,
            expected: to_f64(&self.a_x) / to_f64(&self.s_m),
            trace,
            attempts: Vec::new(),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MtOptions {
    /// `T`; `None` uses the default horizon.
    pub horizon: Option<f64>,
    pub samples: usize,
    pub quad: QuadOptions,
    /// Relative width at which the bracket is accepted.
    pub tol: f64,
    /// Number of subintervals per refinement pass.
    pub section: usize,
    pub noise_floor: f64,
    /// How many times `T` may be doubled when the slope sign is undetermined.
    pub widen: usize,
}

impl Default for MtOptions {
    fn default() -> Self {
        MtOptions {
            horizon: None,
            samples: 9,
            quad: QuadOptions { tol: 1e-7, ..QuadOptions::default() },
            tol: 5e-4,
            section: 16,
            noise_floor: 1e-7,
            widen: 3,
        }
    }
}

pub const DEFAULT_HORIZON: f64 = 40.0;

impl MtOptions {
    pub fn horizon_for(&self, _m: u64) -> f64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MtThreshold {
    pub value: f64,
    pub bracket: (f64, f64),
    pub horizon: f64,
    pub ray: Option<usize>,
    /// `A_X / S_m` for comparison.
    pub expected: f64,
    /// Every `(δ, slope)` evaluated.
    pub trace: Vec<(f64, f64)>,
    pub attempts: Vec<(f64, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticEstimate {
    pub value: f64,
    pub witness_ray: usize,
    pub per_ray: Vec<MtThreshold>,
}

/// `min` over the fan rays of the Moser–Trudinger threshold.
pub fn delta_a_m_estimate(basis: &Arc<SectionBasis>, opts: &MtOptions) -> Result<AnalyticEstimate> {
    let mut per_ray = Vec::new();
    for v in ToricValuation::rays(&basis.pair.fan) {
        per_ray.push(ray_from_valuation(basis, &v)?.mt_threshold(opts)?);
    }
    let (witness_ray, best) = per_ray
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.partial_cmp(&b.1.value).unwrap())
        .map(|(i, r)| (i, r.value))
        .expect("fans have rays");
    Ok(AnalyticEstimate { value: best, witness_ray, per_ray })
}
