//! Monge–Ampère energy in dimension one, its quantization, and the weighted quantized energy.

use std::sync::Arc;

use deltam_core::weighted::WeightFunction;

use crate::basis::{dot, lse, ReferencePotential, SectionBasis};
use crate::error::{BergmanError, Result};
use crate::form::{energy_e_m, HermitianForm};
use crate::potential::BergmanPotential;
use crate::quadrature::{integrate, QuadOptions, Term};

/// A smooth torus-invariant potential on a curve: `x ↦ (φ, φ'')`.
pub trait CurvePotential: Sync {
    fn eval(&self, x: f64) -> (f64, f64);
    /// Points where `φ` changes behaviour, used as quadrature hints.
    fn hints(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// `c · sech(x)`.
#[derive(Clone, Copy, Debug)]
pub struct Sech(pub f64);

impl CurvePotential for Sech {
    fn eval(&self, x: f64) -> (f64, f64) {
        let s = 1.0 / x.cosh();
        let t = x.tanh();
        (self.0 * s, self.0 * s * (t * t - s * s))
    }
}

impl CurvePotential for BergmanPotential {
    fn eval(&self, x: f64) -> (f64, f64) {
        let HermitianForm::Diagonal { log_mu } = &self.form else {
            panic!("curve energy needs a torus-invariant form");
        };
        let b = &self.basis;
        let m = b.mf();
        let a: Vec<f64> = log_mu.iter().zip(&b.points).map(|(c, u)| c + u[0] * x).collect();
        let la = lse(a.iter().copied());
        let p: Vec<f64> = a.iter().map(|v| (v - la).exp()).collect();
        // (ψ+φ)'' = Var_p(u)/m, summed pairwise to avoid cancellation
        let mut var = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = b.points[i][0] - b.points[j][0];
                var += p[i] * p[j] * d * d;
            }
        }
        let psi = &b.reference;
        let lm = psi.log_ma(&[x]);
        (la / m - psi.psi(&[x]), var / m - lm.exp())
    }

    fn hints(&self) -> Vec<f64> {
        let mut h: Vec<f64> = BergmanPotential::hints(self).into_iter().map(|v| v[0]).collect();
        h.push(0.0);
        h
    }
}

fn require_curve(r: &ReferencePotential) -> Result<()> {
    if r.dim != 1 {
        return Err(BergmanError::Unsupported("Monge–Ampère energy is implemented for n = 1".into()));
    }
    Ok(())
}

/// `E(φ) = (1/(2V)) [∫ φ ω + ∫ φ ω_φ]` with `ω = ψ'' dx`.
pub fn ma_energy<P: CurvePotential + ?Sized>(
    reference: &ReferencePotential,
    volume: f64,
    phi: &P,
    opts: &QuadOptions,
) -> Result<f64> {
    require_curve(reference)?;
    let hints = vec![phi.hints()];
    let r = integrate(&hints, 2, opts, |x| {
        let (v, d2) = phi.eval(x[0]);
        let lm = reference.log_ma(x);
        let w = lm.exp() + d2;
        if v == 0.0 {
            return vec![Term::zero(), Term::zero()];
        }
        let lv = v.abs().ln();
        vec![Term::new(lv + lm, v.signum()), Term::new(lv + w.abs().ln(), v.signum() * w.signum())]
    })?;
    Ok((r.value(0) + r.value(1)) / (2.0 * volume))
}

/// `E_m(H_m, Hilb_m(φ))`, where `H_m` and `Hilb_m(φ)` are the plain `L^2` Gram forms of
/// `h^m` and `(h e^{-φ})^m` against `ω` and `ω_φ`.
pub fn quantized_energy<P: CurvePotential + ?Sized>(basis: &Arc<SectionBasis>, phi: &P, opts: &QuadOptions) -> Result<f64> {
    let r = &basis.reference;
    require_curve(r)?;
    let m = basis.mf();
    let d = basis.d();
    let hints = vec![phi.hints()];
    let out = integrate(&hints, 2 * d, opts, |x| {
        let (v, d2) = phi.eval(x[0]);
        let lm = r.log_ma(x);
        let lw = (lm.exp() + d2).ln();
        let base = -m * r.psi(x);
        let mut t = Vec::with_capacity(2 * d);
        for u in &basis.points {
            t.push(Term::positive(dot(u, x) + base + lm));
        }
        for u in &basis.points {
            t.push(Term::positive(dot(u, x) + base - m * v + lw));
        }
        t
    })?;
    let s: f64 = (0..d).map(|k| out.log(k) - out.log(d + k)).sum();
    Ok(s / (m * d as f64))
}

/// `E^g_m(H, φ) = Σ_u g(u/m) log μ_u / (m Σ_u g(u/m))`.
pub fn weighted_energy_e_g_m(basis: &SectionBasis, h: &HermitianForm, k: &HermitianForm, g: &WeightFunction) -> Result<f64> {
    if let WeightFunction::Constant = g {
        return Ok(energy_e_m(basis.m, h, k));
    }
    let (HermitianForm::Diagonal { log_mu: a }, HermitianForm::Diagonal { log_mu: b }) = (h, k) else {
        return Err(BergmanError::Unsupported("weighted energy needs torus-invariant forms".into()));
    };
    let m = basis.mf();
    let w: Vec<f64> = basis
        .points
        .iter()
        .map(|u| g.eval(&u.iter().map(|c| c / m).collect::<Vec<_>>()))
        .collect();
    let num: f64 = w.iter().zip(a.iter().zip(b)).map(|(wi, (x, y))| wi * (y - x)).sum();
    Ok(num / (m * w.iter().sum::<f64>()))
}
