//! Fubini–Study potentials, the twisted Hilbert map and the quantized Ding functional.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::basis::{dot, lse, tropical_vertices, SectionBasis};
use crate::error::{BergmanError, Result};
use crate::form::{energy_e_m, HermitianForm, C64};
use crate::quadrature::{QuadOptions, Term};

/// Torus-invariant twist `f`, given in log coordinates.
#[derive(Clone, Default)]
pub struct Twist {
    f: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    label: String,
}

impl fmt::Debug for Twist {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Twist({})", if self.f.is_none() { "0" } else { &self.label })
    }
}

impl Twist {
    pub fn zero() -> Self {
        Twist::default()
    }

    /// `amp * exp(-|x|^2)`, which extends smoothly over the toric boundary.
    pub fn bump(amp: f64) -> Self {
        Twist::custom(format!("bump({amp})"), move |x| amp * (-dot(x, x)).exp())
    }

    pub fn custom<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(label: String, f: F) -> Self {
        Twist { f: Some(Arc::new(f)), label }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(x))
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none()
    }

    pub fn label(&self) -> &str {
        if self.f.is_none() {
            "0"
        } else {
            &self.label
        }
    }
}

/// Output of one Hilbert-map evaluation.
#[derive(Clone, Debug)]
pub struct HilbOutput {
    pub form: HermitianForm,
    /// `log ∫ e^{f - δφ} MA`, reused by the Ding functional.
    pub log_z: f64,
    pub rel_error: f64,
}

/// `FS(K)` relative to the reference potential.
#[derive(Clone, Debug)]
pub struct BergmanPotential {
    pub basis: Arc<SectionBasis>,
    pub form: HermitianForm,
}

pub fn fs(basis: &Arc<SectionBasis>, form: HermitianForm) -> Result<BergmanPotential> {
    if form.d() != basis.d() {
        return Err(BergmanError::Domain(format!(
            "form has size {} but d_m = {}",
            form.d(),
            basis.d()
        )));
    }
    if let HermitianForm::Full { .. } = form {
        if basis.dim != 1 {
            return Err(BergmanError::Unsupported("full-matrix mode is implemented on P^1 only".into()));
        }
    }
    if let HermitianForm::Diagonal { log_mu } = &form {
        if log_mu.iter().any(|v| !v.is_finite()) {
            return Err(BergmanError::Domain("diagonal weights must be positive and finite".into()));
        }
    }
    Ok(BergmanPotential { basis: basis.clone(), form })
}

const THETA_START: usize = 16;
const THETA_MAX: usize = 4096;

impl BergmanPotential {
    fn m(&self) -> f64 {
        self.basis.mf()
    }

    /// Diagonal weights used for the tropical envelope (`log M_uu` in full mode).
    pub fn log_diagonal(&self) -> Vec<f64> {
        match &self.form {
            HermitianForm::Diagonal { log_mu } => log_mu.clone(),
            HermitianForm::Full { inv_gram } => inv_gram.diagonal().iter().map(|z| z.re.ln()).collect(),
        }
    }

    /// Kinks of the potential, used to place quadrature cells.
    pub fn hints(&self) -> Vec<Vec<f64>> {
        tropical_vertices(&self.log_diagonal(), &self.basis.points)
    }

    /// `φ(x)` for torus-invariant forms.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.form {
            HermitianForm::Diagonal { log_mu } => {
                let lq = lse(log_mu.iter().zip(&self.basis.points).map(|(c, u)| c + dot(u, x)));
                lq / self.m() - self.basis.reference.psi(x)
            }
            HermitianForm::Full { .. } => self.value_at(x[0], 0.0),
        }
    }

    /// `φ(x, θ)` on P^1, any mode.
    pub fn value_at(&self, x: f64, theta: f64) -> f64 {
        let (l, q) = self.scaled_q(x, &[theta]);
        (l + q[0].ln()) / self.m() - self.basis.reference.psi(&[x])
    }

    /// `max_u (log M_uu + u x)` and `q(θ_j) = e^{-L} Σ M_uv e^{(u+v)x/2 + i(u-v)θ_j}`.
    fn scaled_q(&self, x: f64, thetas: &[f64]) -> (f64, Vec<f64>) {
        let pts: Vec<f64> = self.basis.points.iter().map(|u| u[0]).collect();
        let diag = self.log_diagonal();
        let l = diag.iter().zip(&pts).map(|(c, u)| c + u * x).fold(f64::NEG_INFINITY, f64::max);
        let full = self.form.to_full();
        let d = pts.len();
        let a: Vec<f64> = pts.iter().map(|u| ((u * x - l) / 2.0).exp()).collect();
        let q = thetas
            .iter()
            .map(|&th| {
                let mut s = 0.0;
                for i in 0..d {
                    s += full[(i, i)].re * a[i] * a[i];
                    for j in i + 1..d {
                        let ph = C64::from_polar(1.0, (pts[i] - pts[j]) * th);
                        s += 2.0 * (full[(i, j)] * ph).re * a[i] * a[j];
                    }
                }
                s
            })
            .collect();
        (l, q)
    }

    /// `Hilb^{f,δ}(φ)` as an inverse Gram matrix, scaled so that `d_m / ∫ e^{f-δφ}` multiplies the Gram form.
    pub fn hilb(&self, f: &Twist, delta: f64, opts: &QuadOptions) -> Result<HilbOutput> {
        if !(delta > 0.0) {
            return Err(BergmanError::Domain("delta must be positive".into()));
        }
        match &self.form {
            HermitianForm::Diagonal { log_mu } => self.hilb_diagonal(log_mu, f, delta, opts),
            HermitianForm::Full { .. } => self.hilb_full(f, delta, opts),
        }
    }

    fn hilb_diagonal(&self, log_mu: &[f64], f: &Twist, delta: f64, opts: &QuadOptions) -> Result<HilbOutput> {
        let b = &self.basis;
        let m = self.m();
        let d = b.d();
        let r = b.integrate_ma(&self.hints(), d + 1, opts, |x, lm| {
            let ux: Vec<f64> = b.points.iter().map(|u| dot(u, x)).collect();
            let lq = lse(log_mu.iter().zip(&ux).map(|(c, v)| c + v));
            let phi = lq / m - b.reference.psi(x);
            let common = -delta * phi + f.eval(x) + lm;
            let mut out = Vec::with_capacity(d + 1);
            out.push(Term::positive(common));
            out.extend(ux.iter().map(|v| Term::positive(v - lq + common)));
            out
        })?;
        let log_z = r.log(0);
        let ln_d = (d as f64).ln();
        let form = HermitianForm::diagonal((0..d).map(|u| log_z - ln_d - r.log(u + 1)).collect());
        Ok(HilbOutput { form, log_z, rel_error: r.rel_error })
    }

    /// Angular averages `mean_j q_j^{-p} e^{-ikθ_j}` for `k = 0..d-1` and `mean_j q_j^{-δ/m}`,
    /// by trapezoid doubling.
    fn angular(&self, x: f64, p: f64, zexp: f64) -> (f64, Vec<(f64, f64)>, Vec<f64>) {
        let d = self.basis.d();
        let estimate = |n: usize| {
            let th: Vec<f64> = (0..n).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
            let (l, q) = self.scaled_q(x, &th);
            let mut c = vec![(0.0, 0.0); d];
            let mut z = 0.0;
            for (t, qj) in th.iter().zip(&q) {
                let w = qj.powf(-p);
                z += qj.powf(-zexp);
                for (k, ck) in c.iter_mut().enumerate() {
                    let a = -(k as f64) * t;
                    ck.0 += w * a.cos();
                    ck.1 += w * a.sin();
                }
            }
            let nf = n as f64;
            (l, c.into_iter().map(|(a, b)| (a / nf, b / nf)).collect::<Vec<_>>(), z / nf)
        };
        let mut n = THETA_START;
        let (mut l, mut c, mut z) = estimate(n);
        while n < THETA_MAX {
            n *= 2;
            let (l2, c2, z2) = estimate(n);
            let scale = c2[0].0.abs().max(1e-300);
            let diff = c.iter().zip(&c2).map(|(a, b)| (a.0 - b.0).abs() + (a.1 - b.1).abs()).fold(0.0, f64::max);
            let done = diff <= 1e-14 * scale && (z - z2).abs() <= 1e-14 * z2.abs();
            l = l2;
            c = c2;
            z = z2;
            if done {
                break;
            }
        }
        let lz: Vec<f64> = vec![z];
        (l, c, lz)
    }

    fn hilb_full(&self, f: &Twist, delta: f64, opts: &QuadOptions) -> Result<HilbOutput> {
        let b = &self.basis;
        let m = self.m();
        let d = b.d();
        let pts: Vec<f64> = b.points.iter().map(|u| u[0]).collect();
        let p = (m + delta) / m;
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
        // component layout: Z, then (Re, Im) of G'_{ij} for i <= j
        let diag_comp = |i: usize| 1 + 2 * pairs.iter().position(|&pq| pq == (i, i)).unwrap();
        let mut scales = vec![(0, 0)];
        for &(i, j) in &pairs {
            let s = (diag_comp(i), diag_comp(j));
            scales.push(s);
            scales.push(s);
        }
        let r = b.integrate_ma_relative(&self.hints(), 1 + 2 * pairs.len(), Some(&scales), opts, |x, lm| {
            let psi = b.reference.psi(x);
            let (l, c, z) = self.angular(x[0], p, delta / m);
            let base = delta * psi - p * l + f.eval(x) + lm;
            let mut out = Vec::with_capacity(1 + 2 * pairs.len());
            out.push(Term::positive(delta * psi - delta / m * l + f.eval(x) + lm + z[0].ln()));
            for &(i, j) in &pairs {
                // G'_{ij} = ∫ e^{(u_i+u_j)x/2} e^{-i(u_i-u_j)θ} (...)
                let k = j - i;
                let (re, im) = c[k];
                let e = (pts[i] + pts[j]) * x[0] / 2.0 + base;
                // e^{-i(u_i-u_j)θ} = e^{+ikθ}: conjugate of the stored mode
                out.push(Term::new(e, re));
                out.push(Term::new(e, -im));
            }
            out
        })?;
        let log_z = r.log(0);
        let mut g = DMatrix::<C64>::zeros(d, d);
        let shift = r.log_abs.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        for (n, &(i, j)) in pairs.iter().enumerate() {
            let v = C64::new(r.scaled(1 + 2 * n, shift), r.scaled(2 + 2 * n, shift));
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        let inv = g
            .try_inverse()
            .ok_or_else(|| BergmanError::Domain("Gram matrix is singular".into()))?;
        let scale = (log_z - (d as f64).ln() - shift).exp();
        let form = HermitianForm::full(inv * C64::new(scale, 0.0))?;
        Ok(HilbOutput { form, log_z, rel_error: r.rel_error })
    }

    /// `log ∫ e^{f - δφ} MA`.
    pub fn log_twisted_mass(&self, f: &Twist, delta: f64, opts: &QuadOptions) -> Result<f64> {
        let b = &self.basis;
        let m = self.m();
        let r = match &self.form {
            HermitianForm::Diagonal { .. } => b.integrate_ma(&self.hints(), 1, opts, |x, lm| {
                vec![Term::positive(-delta * self.value(x) + f.eval(x) + lm)]
            })?,
            HermitianForm::Full { .. } => b.integrate_ma(&self.hints(), 1, opts, |x, lm| {
                let psi = b.reference.psi(x);
                let (l, _, z) = self.angular(x[0], 1.0, delta / m);
                vec![Term::positive(delta * psi - delta / m * l + f.eval(x) + lm + z[0].ln())]
            })?,
        };
        Ok(r.log(0))
    }

    /// `F_m^{f,δ}(φ) = -(1/δ) log (1/V) ∫ e^{f - δφ} MA - E_m(H, φ)`.
    pub fn ding(&self, f: &Twist, delta: f64, h: &HermitianForm, opts: &QuadOptions) -> Result<f64> {
        let lz = self.log_twisted_mass(f, delta, opts)?;
        Ok(self.ding_from_log_z(lz, delta, h))
    }

    pub fn ding_from_log_z(&self, log_z: f64, delta: f64, h: &HermitianForm) -> f64 {
        -(log_z - self.basis.volume.ln()) / delta - energy_e_m(self.basis.m, h, &self.form)
    }

    /// Numerical supremum together with `(1/m) log max μ`.
    pub fn sup(&self) -> SupReport {
        let bound = self.form.log_max_eigenvalue() / self.m();
        let sup = match &self.form {
            HermitianForm::Diagonal { log_mu } => self.sup_diagonal(log_mu),
            HermitianForm::Full { .. } => self.sup_full(),
        };
        // log-sum-exp over a single term against the reference: max entropy is at most log d
        let r = &self.basis.reference;
        let certified = bound - (r.points.len() as f64).ln() / r.level as f64;
        SupReport { sup: sup.max(certified), max_mu: bound, raw: sup }
    }

    fn sup_diagonal(&self, log_mu: &[f64]) -> f64 {
        let b = &self.basis;
        let m = self.m();
        let lvl = b.reference.level as f64;
        let mut best = f64::NEG_INFINITY;
        for face in &b.faces {
            if face.dim == 0 {
                best = best.max(log_mu[face.sections[0]] / m);
                continue;
            }
            let pts: Vec<&Vec<f64>> = face.sections.iter().map(|&i| &b.points[i]).collect();
            let c: Vec<f64> = face.sections.iter().map(|&i| log_mu[i]).collect();
            let rp: Vec<&Vec<f64>> = face.reference.iter().map(|&i| &b.reference.points[i]).collect();
            let g = |y: &[f64]| -> (f64, Vec<f64>) {
                let a: Vec<f64> = pts.iter().zip(&c).map(|(u, ci)| ci + dot(u, y)).collect();
                let la = lse(a.iter().copied());
                let r: Vec<f64> = rp.iter().map(|u| dot(u, y)).collect();
                let lr = lse(r.iter().copied());
                let mut grad = vec![0.0; y.len()];
                for (u, ai) in pts.iter().zip(&a) {
                    let w = (ai - la).exp() / m;
                    for (gj, uj) in grad.iter_mut().zip(u.iter()) {
                        *gj += w * uj;
                    }
                }
                for (u, ri) in rp.iter().zip(&r) {
                    let w = (ri - lr).exp() / lvl;
                    for (gj, uj) in grad.iter_mut().zip(u.iter()) {
                        *gj -= w * uj;
                    }
                }
                (la / m - lr / lvl, grad)
            };
            let mut starts: Vec<Vec<f64>> = vec![vec![0.0; b.dim]];
            let fpts: Vec<Vec<f64>> = pts.iter().map(|u| (*u).clone()).collect();
            starts.extend(tropical_vertices(&c, &fpts).into_iter().take(32));
            for s in starts.into_iter().filter(|s| s.iter().all(|c| c.abs() <= ASCENT_BOX)) {
                best = best.max(ascend(&g, s));
            }
        }
        best
    }

    fn sup_full(&self) -> f64 {
        let hints = self.hints();
        let lo = hints.iter().map(|h| h[0]).fold(0.0f64, f64::min) - 30.0;
        let hi = hints.iter().map(|h| h[0]).fold(0.0f64, f64::max) + 30.0;
        let diag = self.log_diagonal();
        let m = self.m();
        let mut best = diag[0].max(diag[diag.len() - 1]) / m;
        let nth = 64;
        let mut arg = (0.0, 0.0);
        let nx = 2000;
        for i in 0..=nx {
            let x = lo + (hi - lo) * i as f64 / nx as f64;
            for j in 0..nth {
                let t = 2.0 * std::f64::consts::PI * j as f64 / nth as f64;
                let v = self.value_at(x, t);
                if v > best {
                    best = v;
                    arg = (x, t);
                }
            }
        }
        let (mut x, mut t) = arg;
        let (mut hx, mut ht) = ((hi - lo) / nx as f64, 0.1);
        while hx > 1e-10 {
            let mut moved = false;
            for (dx, dt) in [(hx, 0.0), (-hx, 0.0), (0.0, ht), (0.0, -ht)] {
                let v = self.value_at(x + dx, t + dt);
                if v > best {
                    best = v;
                    x += dx;
                    t += dt;
                    moved = true;
                }
            }
            if !moved {
                hx /= 2.0;
                ht /= 2.0;
            }
        }
        best
    }
}

const ASCENT_BOX: f64 = 500.0;

fn ascend<G: Fn(&[f64]) -> (f64, Vec<f64>)>(g: &G, mut y: Vec<f64>) -> f64 {
    let (mut v, mut grad) = g(&y);
    let mut step = 1.0;
    for _ in 0..2000 {
        let gn: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        if gn < 1e-12 {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let cand: Vec<f64> = y.iter().zip(&grad).map(|(a, b)| a + step * b).collect();
            // far out the face term is approached by a smaller face; large |y| only adds rounding
            if cand.iter().any(|c| c.abs() > ASCENT_BOX) {
                step /= 2.0;
                continue;
            }
            let (cv, cg) = g(&cand);
            if cv >= v + 1e-4 * step * gn * gn {
                y = cand;
                v = cv;
                grad = cg;
                step *= 2.0;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupReport {
    /// Best of the numerical maximum and the certified lower bound.
    pub sup: f64,
    /// `(1/m) log max μ`.
    pub max_mu: f64,
    /// The numerical maximum alone.
    pub raw: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use deltam_core::{Fan, Polarization, PolarizedToric};
    use deltam_core::rational::int;

    fn p1_basis(m: u64) -> Arc<SectionBasis> {
        let pair = PolarizedToric::anticanonical(Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()).unwrap();
        Arc::new(SectionBasis::new(&pair, m).unwrap())
    }

    fn interval_basis(m: u64) -> Arc<SectionBasis> {
        let fan = Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap();
        let pair = PolarizedToric::new(fan, Polarization::new(vec![int(0), int(1)])).unwrap();
        Arc::new(SectionBasis::new(&pair, m).unwrap())
    }

    fn opts() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn fs_of_identity_vanishes() {
        for b in [p1_basis(1), p1_basis(3), interval_basis(2)] {
            let phi = fs(&b, HermitianForm::identity(b.d())).unwrap();
            for x in [-50.0, -1.0, 0.0, 0.3, 12.0] {
                assert!(phi.value(&[x]).abs() < 1e-12);
            }
            let s = phi.sup();
            assert!(s.raw.abs() < 1e-12 && s.max_mu == 0.0);
        }
    }

    #[test]
    fn fs_shifts_with_scalars() {
        let b = p1_basis(2);
        let form = HermitianForm::diagonal(vec![0.3, -1.0, 2.0, 0.0, 0.5]);
        let phi = fs(&b, form.clone()).unwrap();
        let psi = fs(&b, form.shifted(2.0 * 1.5)).unwrap();
        for x in [-3.0, 0.0, 7.0] {
            assert!((psi.value(&[x]) - phi.value(&[x]) - 1.5).abs() < 1e-12);
        }
        assert!((psi.sup().raw - phi.sup().raw - 1.5).abs() < 1e-10);
    }

    #[test]
    fn hilb_is_equivariant_under_constants() {
        let b = p1_basis(2);
        let form = HermitianForm::diagonal(vec![0.3, -1.0, 2.0, 0.0, 0.5]);
        let a = fs(&b, form.clone()).unwrap().hilb(&Twist::zero(), 0.7, &opts()).unwrap();
        let c = fs(&b, form.shifted(2.0 * 0.8)).unwrap().hilb(&Twist::zero(), 0.7, &opts()).unwrap();
        let (HermitianForm::Diagonal { log_mu: x }, HermitianForm::Diagonal { log_mu: y }) = (&a.form, &c.form) else {
            panic!()
        };
        for (p, q) in x.iter().zip(y) {
            assert!((q - p - 1.6).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_start_stays_symmetric() {
        let b = p1_basis(1);
        let h = fs(&b, HermitianForm::identity(3)).unwrap().hilb(&Twist::zero(), 1.0, &opts()).unwrap();
        let HermitianForm::Diagonal { log_mu } = h.form else { panic!() };
        assert!((log_mu[0] - log_mu[2]).abs() < 1e-9);
    }

    #[test]
    fn full_mode_matches_diagonal_on_diagonal_input() {
        let b = p1_basis(1);
        let form = HermitianForm::diagonal(vec![0.4, -0.2, 1.0]);
        let full = HermitianForm::full(form.to_full()).unwrap();
        let f = Twist::bump(0.3);
        let a = fs(&b, form).unwrap().hilb(&f, 0.5, &opts()).unwrap();
        let c = fs(&b, full).unwrap().hilb(&f, 0.5, &opts()).unwrap();
        let diff = (a.form.to_full() - c.form.to_full()).norm() / a.form.to_full().norm();
        assert!(diff < 1e-8, "{diff}");
        assert!((a.log_z - c.log_z).abs() < 1e-8);
    }

    #[test]
    fn full_mode_rotation_equivariance() {
        let b = p1_basis(1);
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.2, 0.3),
                C64::new(-0.1, 0.05),
                C64::new(0.2, -0.3),
                C64::new(0.8, 0.0),
                C64::new(0.1, 0.1),
                C64::new(-0.1, -0.05),
                C64::new(0.1, -0.1),
                C64::new(1.3, 0.0),
            ],
        );
        let alpha = 0.7;
        let rot = |a: &DMatrix<C64>| {
            DMatrix::from_fn(3, 3, |i, j| a[(i, j)] * C64::from_polar(1.0, (i as f64 - j as f64) * alpha))
        };
        let h = fs(&b, HermitianForm::full(m.clone()).unwrap()).unwrap();
        let hr = fs(&b, HermitianForm::full(rot(&m)).unwrap()).unwrap();
        // rotating the form rotates the potential in θ
        assert!((h.value_at(0.4, 0.2 + alpha) - hr.value_at(0.4, 0.2)).abs() < 1e-12);
        let out = h.hilb(&Twist::zero(), 0.5, &opts()).unwrap().form.to_full();
        let outr = hr.hilb(&Twist::zero(), 0.5, &opts()).unwrap().form.to_full();
        assert!((rot(&out) - outr).norm() < 1e-8 * out.norm());
        // and the output is not diagonal: off-diagonal modes are actually carried
        assert!(out[(0, 1)].norm() > 1e-3);
    }

    #[test]
    fn ding_is_translation_invariant() {
        let b = interval_basis(2);
        let form = HermitianForm::diagonal(vec![0.3, -1.0, 2.0]);
        let h = HermitianForm::identity(3);
        let f = Twist::bump(0.5);
        let a = fs(&b, form.clone()).unwrap().ding(&f, 1.3, &h, &opts()).unwrap();
        let c = fs(&b, form.shifted(2.0 * 5.0)).unwrap().ding(&f, 1.3, &h, &opts()).unwrap();
        assert!(a.is_finite());
        assert!((a - c).abs() < 1e-8, "{a} {c}");
    }

    #[test]
    fn sup_of_a_lifted_vertex() {
        let b = p1_basis(1);
        let phi = fs(&b, HermitianForm::diagonal(vec![0.0, 0.0, 10.0])).unwrap();
        let s = phi.sup();
        assert!((s.raw - 10.0).abs() < 3f64.ln());
        assert!(s.raw <= s.max_mu + 1e-12);
    }
}
