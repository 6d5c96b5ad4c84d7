//! Hermitian inner products on `H^0(X, mL)` stored through their inverse Gram matrix.

use deltam_core::Rational;
use nalgebra::{Complex, DMatrix};
use num_traits::Zero;

use crate::error::{BergmanError, Result};

pub type C64 = Complex<f64>;

/// `M = G^{-1}` in the monomial basis, so `FS(M) = (1/m) log sum_{u,v} M_uv z^u conj(z^v)`.
/// The diagonal variant keeps `log M_uu`, which stays finite far along rays.
#[derive(Clone, Debug, PartialEq)]
pub enum HermitianForm {
    Diagonal { log_mu: Vec<f64> },
    Full { inv_gram: DMatrix<C64> },
}

impl HermitianForm {
    pub fn identity(d: usize) -> Self {
        HermitianForm::Diagonal { log_mu: vec![0.0; d] }
    }

    pub fn diagonal(log_mu: Vec<f64>) -> Self {
        HermitianForm::Diagonal { log_mu }
    }

    pub fn full(inv_gram: DMatrix<C64>) -> Result<Self> {
        let d = inv_gram.nrows();
        if inv_gram.ncols() != d {
            return Err(BergmanError::Domain("inverse Gram matrix must be square".into()));
        }
        let herm = (&inv_gram - inv_gram.adjoint()).norm();
        if herm > 1e-10 * inv_gram.norm() {
            return Err(BergmanError::Domain("inverse Gram matrix is not Hermitian".into()));
        }
        let sym = (&inv_gram + inv_gram.adjoint()) * C64::new(0.5, 0.0);
        let lo = sym.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if !(lo > 0.0) {
            return Err(BergmanError::Domain("inverse Gram matrix is not positive definite".into()));
        }
        Ok(HermitianForm::Full { inv_gram: sym })
    }

    pub fn to_full(&self) -> DMatrix<C64> {
        match self {
            HermitianForm::Diagonal { log_mu } => {
                DMatrix::from_fn(log_mu.len(), log_mu.len(), |i, j| {
                    if i == j {
                        C64::new(log_mu[i].exp(), 0.0)
                    } else {
                        C64::zero()
                    }
                })
            }
            HermitianForm::Full { inv_gram } => inv_gram.clone(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            HermitianForm::Diagonal { log_mu } => log_mu.len(),
            HermitianForm::Full { inv_gram } => inv_gram.nrows(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            HermitianForm::Diagonal { log_mu } => log_mu.iter().sum(),
            HermitianForm::Full { inv_gram } => {
                let l = inv_gram.clone().cholesky().expect("positive definite").l();
                2.0 * l.diagonal().iter().map(|z| z.re.ln()).sum::<f64>()
            }
        }
    }

    /// `M e^{c}`, i.e. `FS` shifted by `c/m`.
    pub fn shifted(&self, c: f64) -> Self {
        match self {
            HermitianForm::Diagonal { log_mu } => {
                HermitianForm::Diagonal { log_mu: log_mu.iter().map(|v| v + c).collect() }
            }
            HermitianForm::Full { inv_gram } => HermitianForm::Full { inv_gram: inv_gram * C64::new(c.exp(), 0.0) },
        }
    }

    /// Rescaled to `det M = 1`.
    pub fn normalized(&self) -> Self {
        self.shifted(-self.log_det() / self.d() as f64)
    }

    /// Log of the largest eigenvalue of `M`.
    pub fn log_max_eigenvalue(&self) -> f64 {
        match self {
            HermitianForm::Diagonal { log_mu } => log_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            HermitianForm::Full { inv_gram } => inv_gram
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .ln(),
        }
    }

    /// Logs of the eigenvalues of `other` relative to `self`.
    pub fn relative_log_eigenvalues(&self, other: &Self) -> Vec<f64> {
        match (self, other) {
            (HermitianForm::Diagonal { log_mu: a }, HermitianForm::Diagonal { log_mu: b }) => {
                a.iter().zip(b).map(|(x, y)| y - x).collect()
            }
            _ => {
                let (c, _) = relative_frame(&self.to_full(), &other.to_full());
                c.symmetric_eigenvalues().iter().map(|v| v.ln()).collect()
            }
        }
    }

    /// Largest form below both in the Loewner sense, simultaneously diagonalized.
    pub fn rooftop(&self, other: &Self) -> Self {
        match (self, other) {
            (HermitianForm::Diagonal { log_mu: a }, HermitianForm::Diagonal { log_mu: b }) => {
                HermitianForm::Diagonal { log_mu: a.iter().zip(b).map(|(x, y)| x.min(*y)).collect() }
            }
            _ => {
                let a = self.to_full();
                let (c, l) = relative_frame(&a, &other.to_full());
                let eig = c.symmetric_eigen();
                let lam = DMatrix::from_fn(a.nrows(), a.nrows(), |i, j| {
                    if i == j {
                        C64::new(eig.eigenvalues[i].min(1.0), 0.0)
                    } else {
                        C64::zero()
                    }
                });
                let u = &eig.eigenvectors;
                let inner = u * lam * u.adjoint();
                let m = &l * inner * l.adjoint();
                HermitianForm::Full { inv_gram: (&m + m.adjoint()) * C64::new(0.5, 0.0) }
            }
        }
    }

    /// Geodesic point `A^{1/2} (A^{-1/2} B A^{-1/2})^s A^{1/2}` between `self` and `other`.
    pub fn geodesic(&self, other: &Self, s: f64) -> Self {
        match (self, other) {
            (HermitianForm::Diagonal { log_mu: a }, HermitianForm::Diagonal { log_mu: b }) => {
                HermitianForm::Diagonal { log_mu: a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect() }
            }
            _ => {
                let a = self.to_full();
                let (c, l) = relative_frame(&a, &other.to_full());
                let eig = c.symmetric_eigen();
                let n = a.nrows();
                let lam = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        C64::new(eig.eigenvalues[i].powf(s), 0.0)
                    } else {
                        C64::zero()
                    }
                });
                let u = &eig.eigenvectors;
                let m = &l * (u * lam * u.adjoint()) * l.adjoint();
                HermitianForm::Full { inv_gram: (&m + m.adjoint()) * C64::new(0.5, 0.0) }
            }
        }
    }
}

/// `(L^{-1} B L^{-*}, L)` with `A = L L^*`.
fn relative_frame(a: &DMatrix<C64>, b: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let l = a.clone().cholesky().expect("positive definite").l();
    let li = l.clone().try_inverse().expect("invertible factor");
    let c = &li * b * li.adjoint();
    ((&c + c.adjoint()) * C64::new(0.5, 0.0), l)
}

/// `E_m(H, K) = (1/(m d)) log det (M_K M_H^{-1})`, i.e. the mean of `FS(K) - FS(H)` over
/// the spectrum.
pub fn energy_e_m(m: u64, h: &HermitianForm, k: &HermitianForm) -> f64 {
    (k.log_det() - h.log_det()) / (m as f64 * h.d() as f64)
}

/// Same energy for diagonal forms with rational `log M_uu`, evaluated exactly.
pub fn energy_e_m_exact(m: u64, h: &[Rational], k: &[Rational]) -> Rational {
    let s: Rational = k.iter().zip(h).map(|(a, b)| a - b).sum();
    s / Rational::from_integer(((m as usize) * h.len()).into())
}

/// Quantized Darvas distance `(1/(m d)) sum |log lambda_i|`.
pub fn d1_m(m: u64, a: &HermitianForm, b: &HermitianForm) -> f64 {
    a.relative_log_eigenvalues(b).iter().map(|v| v.abs()).sum::<f64>() / (m as f64 * a.d() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use deltam_core::rational::ratio;

    fn herm(d: usize, seed: u64) -> HermitianForm {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        let m = &a * a.adjoint() + DMatrix::<C64>::identity(d, d) * C64::new(0.3, 0.0);
        HermitianForm::full(m).unwrap()
    }

    #[test]
    fn energies_and_cocycle() {
        let (a, b, c) = (herm(3, 1), herm(3, 2), herm(3, 3));
        let m = 2;
        let lhs = energy_e_m(m, &a, &b) + energy_e_m(m, &b, &c);
        assert!((lhs - energy_e_m(m, &a, &c)).abs() < 1e-12);
        let h = vec![ratio(1, 3), ratio(-2, 1), ratio(0, 1)];
        let k = vec![ratio(5, 7), ratio(1, 2), ratio(-1, 4)];
        assert_eq!(energy_e_m_exact(2, &h, &k), ratio(1, 6) * (ratio(5, 7) - ratio(1, 3) + ratio(5, 2) - ratio(1, 4)));
    }

    #[test]
    fn rooftop_sits_between() {
        let (a, b) = (herm(3, 4), herm(3, 5));
        let p = a.rooftop(&b);
        for x in [&a, &b] {
            assert!(p.relative_log_eigenvalues(x).iter().all(|v| *v > -1e-9));
        }
        let d = d1_m(1, &a, &b);
        let via = energy_e_m(1, &p, &a) + energy_e_m(1, &p, &b);
        assert!((d - via).abs() < 1e-9, "{d} vs {via}");
    }

    #[test]
    fn geodesic_endpoints_and_midpoint_distance() {
        let (a, b) = (herm(2, 6), herm(2, 7));
        let g0 = a.geodesic(&b, 0.0).to_full();
        let g1 = a.geodesic(&b, 1.0).to_full();
        assert!((g0 - a.to_full()).norm() < 1e-10);
        assert!((g1 - b.to_full()).norm() < 1e-10);
        let mid = a.geodesic(&b, 0.5);
        assert!((d1_m(1, &a, &mid) - 0.5 * d1_m(1, &a, &b)).abs() < 1e-10);
    }

    #[test]
    fn diagonal_and_full_agree() {
        let a = HermitianForm::diagonal(vec![0.1, -1.0, 2.0]);
        let b = HermitianForm::diagonal(vec![1.0, 0.5, -0.5]);
        let af = HermitianForm::full(a.to_full()).unwrap();
        let bf = HermitianForm::full(b.to_full()).unwrap();
        assert!((d1_m(3, &a, &b) - d1_m(3, &af, &bf)).abs() < 1e-12);
        assert!((a.log_det() - af.log_det()).abs() < 1e-12);
        assert!(a.normalized().log_det().abs() < 1e-12);
        assert!((a.log_max_eigenvalue() - af.log_max_eigenvalue()).abs() < 1e-12);
    }

    #[test]
    fn full_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(HermitianForm::full(m).is_err());
    }
}
