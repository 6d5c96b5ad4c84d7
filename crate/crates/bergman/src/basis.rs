//! Monomial section bases, the reference potential and its Monge–Ampère density.

use std::collections::BTreeMap;
use std::sync::Arc;

use deltam_core::rational::to_f64;
use deltam_core::{LatticeVector, PolarizedToric};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{BergmanError, Result};
use crate::quadrature::{integrate_relative, Integral, QuadOptions, Term};

pub fn lse<I: IntoIterator<Item = f64>>(vals: I) -> f64 {
    let v: Vec<f64> = vals.into_iter().collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_i64(u: &LatticeVector) -> Vec<i64> {
    u.0.iter().map(|c| c.to_i64().expect("coordinate fits in i64")).collect()
}

/// Determinant of a small integer matrix by fraction-free elimination.
fn int_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn combinations(d: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > d {
        return;
    }
    loop {
        visit(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + d - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
        if k == 0 {
            return;
        }
    }
}

/// `psi(x) = (1/l) log sum_u exp(<u, x>)` over the lattice points of `lP`.
#[derive(Clone, Debug)]
pub struct ReferencePotential {
    pub level: u64,
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// `(s, log c_s)`: `det D^2 psi = l^{-n} sum_s c_s e^{<s,x>} / Z^{n+1}`.
    ma_terms: Vec<(Vec<f64>, f64)>,
}

impl ReferencePotential {
    pub fn new(pair: &PolarizedToric, level: u64) -> Result<Self> {
        let pts = pair.polytope.lattice_points(level)?;
        let ints: Vec<Vec<i64>> = pts.iter().map(to_i64).collect();
        let n = pair.dim();
        if ints.len() < n + 1 {
            return Err(BergmanError::Domain("too few sections for a reference metric".into()));
        }
        let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        combinations(ints.len(), n + 1, |t| {
            let rows: Vec<Vec<i128>> = (1..=n)
                .map(|i| (0..n).map(|j| (ints[t[i]][j] - ints[t[0]][j]) as i128).collect())
                .collect();
            let det = int_det(rows);
            if det != 0 {
                let s: Vec<i64> = (0..n).map(|j| t.iter().map(|&i| ints[i][j]).sum()).collect();
                *acc.entry(s).or_insert(0.0) += (det * det) as f64;
            }
        });
        let ma_terms = acc
            .into_iter()
            .map(|(s, c)| (s.into_iter().map(|x| x as f64).collect(), c.ln()))
            .collect();
        Ok(ReferencePotential {
            level,
            dim: n,
            points: ints.iter().map(|u| u.iter().map(|&c| c as f64).collect()).collect(),
            ma_terms,
        })
    }

    fn log_z(&self, x: &[f64]) -> f64 {
        lse(self.points.iter().map(|u| dot(u, x)))
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        self.log_z(x) / self.level as f64
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let lz = self.log_z(x);
        let mut g = vec![0.0; self.dim];
        for u in &self.points {
            let p = (dot(u, x) - lz).exp();
            for (gj, uj) in g.iter_mut().zip(u) {
                *gj += p * uj;
            }
        }
        g.iter().map(|v| v / self.level as f64).collect()
    }

    /// `log det D^2 psi(x)`, free of cancellation.
    pub fn log_ma(&self, x: &[f64]) -> f64 {
        let n = self.dim as f64;
        -n * (self.level as f64).ln() + lse(self.ma_terms.iter().map(|(s, c)| c + dot(s, x)))
            - (n + 1.0) * self.log_z(x)
    }
}

/// A face of `mP` given by the lattice points on it, at the basis level and the reference level.
#[derive(Clone, Debug)]
pub struct Face {
    pub dim: usize,
    pub sections: Vec<usize>,
    pub reference: Vec<usize>,
}

/// The monomial basis `chi^u`, `u in mP ∩ M`, with `|chi^u|^2 = exp(<u,x> - m psi(x))`.
#[derive(Clone, Debug)]
pub struct SectionBasis {
    pub m: u64,
    pub dim: usize,
    pub pair: PolarizedToric,
    pub lattice: Vec<LatticeVector>,
    pub points: Vec<Vec<f64>>,
    pub reference: Arc<ReferencePotential>,
    pub volume: f64,
    pub faces: Vec<Face>,
}

impl SectionBasis {
    pub fn new(pair: &PolarizedToric, m: u64) -> Result<Self> {
        Self::with_reference_level(pair, m, m)
    }

    /// Uses the reference metric built at `level`, so bases for several `m` share one `h`.
    pub fn with_reference_level(pair: &PolarizedToric, m: u64, level: u64) -> Result<Self> {
        let reference = Arc::new(ReferencePotential::new(pair, level)?);
        let lattice = pair.polytope.lattice_points(m)?;
        if lattice.len() < 2 {
            return Err(BergmanError::Domain("d_m must be at least 2".into()));
        }
        let points: Vec<Vec<f64>> = lattice.iter().map(|u| u.to_f64()).collect();
        let faces = enumerate_faces(pair, m, level, &lattice)?;
        Ok(SectionBasis {
            m,
            dim: pair.dim(),
            pair: pair.clone(),
            points,
            lattice,
            volume: to_f64(&pair.polytope.volume()),
            reference,
            faces,
        })
    }

    pub fn d(&self) -> usize {
        self.points.len()
    }

    pub fn mf(&self) -> f64 {
        self.m as f64
    }

    /// `log |chi^u|^2_{h^m}(x)`.
    pub fn log_norm2(&self, u: usize, x: &[f64]) -> f64 {
        dot(&self.points[u], x) - self.mf() * self.reference.psi(x)
    }

    /// Integrates against `det D^2 psi dx`; `f` receives `x` and `log det D^2 psi(x)`.
    pub fn integrate_ma<F>(&self, vertices: &[Vec<f64>], comps: usize, opts: &QuadOptions, f: F) -> Result<Integral>
    where
        F: Fn(&[f64], f64) -> Vec<Term> + Sync,
    {
        self.integrate_ma_relative(vertices, comps, None, opts, f)
    }

    pub fn integrate_ma_relative<F>(
        &self,
        vertices: &[Vec<f64>],
        comps: usize,
        scales: Option<&[(usize, usize)]>,
        opts: &QuadOptions,
        f: F,
    ) -> Result<Integral>
    where
        F: Fn(&[f64], f64) -> Vec<Term> + Sync,
    {
        let mut hints: Vec<Vec<f64>> = vec![vec![0.0]; self.dim];
        for v in vertices {
            for (h, c) in hints.iter_mut().zip(v) {
                h.push(*c);
            }
        }
        integrate_relative(&hints, comps, scales, opts, |x| {
            let lm = self.reference.log_ma(x);
            f(x, lm)
        })
    }
}

fn enumerate_faces(
    pair: &PolarizedToric,
    m: u64,
    level: u64,
    lattice: &[LatticeVector],
) -> Result<Vec<Face>> {
    let facets = pair.polytope.facets();
    let cm = pair.polytope.scaled_constants(m)?;
    let cl = pair.polytope.scaled_constants(level)?;
    let ref_pts = pair.polytope.lattice_points(level)?;
    let tight = |u: &LatticeVector, c: &[BigInt]| -> Vec<usize> {
        facets
            .iter()
            .zip(c)
            .enumerate()
            .filter(|(_, ((v, _), ci))| (v.dot(u) + *ci) == BigInt::from(0))
            .map(|(i, _)| i)
            .collect()
    };
    let tm: Vec<Vec<usize>> = lattice.iter().map(|u| tight(u, &cm)).collect();
    let tl: Vec<Vec<usize>> = ref_pts.iter().map(|u| tight(u, &cl)).collect();
    let mut seen: BTreeMap<Vec<usize>, Face> = BTreeMap::new();
    for t in &tm {
        // every subset of a point's tight facets cuts out a face containing it
        let k = t.len();
        for mask in 0u32..(1 << k) {
            let s: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| t[b]).collect();
            let sections: Vec<usize> = (0..lattice.len())
                .filter(|&i| s.iter().all(|r| tm[i].contains(r)))
                .collect();
            if seen.contains_key(&sections) {
                continue;
            }
            let reference: Vec<usize> = (0..ref_pts.len())
                .filter(|&i| s.iter().all(|r| tl[i].contains(r)))
                .collect();
            let base = &lattice[sections[0]];
            let rows: Vec<Vec<f64>> = sections
                .iter()
                .map(|&i| {
                    lattice[i]
                        .0
                        .iter()
                        .zip(&base.0)
                        .map(|(a, b)| (a - b).to_f64().unwrap())
                        .collect()
                })
                .collect();
            let mat = DMatrix::from_fn(rows.len(), pair.dim(), |i, j| rows[i][j]);
            let dim = mat.rank(1e-9);
            seen.insert(sections.clone(), Face { dim, sections, reference });
        }
    }
    Ok(seen.into_values().collect())
}

/// Points where `n + 1` affinely independent terms of `max_u (c_u + <u, x>)` tie at the max.
pub fn tropical_vertices(c: &[f64], points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points[0].len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    combinations(points.len(), n + 1, |t| {
        let a = DMatrix::from_fn(n, n, |i, j| points[t[i + 1]][j] - points[t[0]][j]);
        // lattice differences: singular systems have determinant exactly zero
        if a.determinant().abs() < 0.5 {
            return;
        }
        let b = DVector::from_fn(n, |i, _| c[t[0]] - c[t[i + 1]]);
        let Some(x) = a.lu().solve(&b) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if !x.iter().all(|v| v.is_finite()) {
            return;
        }
        let val = c[t[0]] + dot(&points[t[0]], &x);
        let top = c
            .iter()
            .zip(points)
            .map(|(ci, u)| ci + dot(u, &x))
            .fold(f64::NEG_INFINITY, f64::max);
        if top <= val + 1e-9 * (1.0 + val.abs()) && !out.iter().any(|y| dist(y, &x) < 0.25) {
            out.push(x);
        }
    });
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use deltam_core::Fan;

    fn p1() -> PolarizedToric {
        PolarizedToric::anticanonical(Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()).unwrap()
    }

    fn p2() -> PolarizedToric {
        PolarizedToric::anticanonical(
            Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[2, 0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn p1_reference_matches_closed_form() {
        let r = ReferencePotential::new(&p1(), 1).unwrap();
        for &x in &[-3.0f64, -0.2, 0.0, 1.5, 40.0] {
            let z = (-x).exp() + 1.0 + x.exp();
            assert!((r.psi(&[x]) - z.ln()).abs() < 1e-12);
            let (a, b) = (x.exp(), (-x).exp());
            let ma = (4.0 + a + b) / (z * z);
            assert!((r.log_ma(&[x]) - ma.ln()).abs() < 1e-9);
        }
        assert!(r.gradient(&[0.0])[0].abs() < 1e-15);
        // far out the density is tiny but still accurate
        let x = 300.0;
        assert!((r.log_ma(&[x]) - (-x + 0.0)).abs() < 1e-9);
    }

    #[test]
    fn ma_mass_is_volume() {
        let opts = QuadOptions::default();
        for (pair, m, vol) in [(p1(), 1, 2.0), (p1(), 3, 2.0), (p2(), 1, 4.5), (p2(), 2, 4.5)] {
            let b = SectionBasis::new(&pair, m).unwrap();
            let r = b.integrate_ma(&[], 1, &opts, |_, lm| vec![Term::positive(lm)]).unwrap();
            assert!((r.value(0) - vol).abs() < 1e-8 * vol, "m={m}: {}", r.value(0));
            assert!((b.volume - vol).abs() < 1e-15);
        }
    }

    #[test]
    fn faces_of_the_triangle() {
        let b = SectionBasis::new(&p2(), 1).unwrap();
        let by_dim = |k: usize| b.faces.iter().filter(|f| f.dim == k).count();
        assert_eq!((by_dim(0), by_dim(1), by_dim(2)), (3, 3, 1));
        let edge = b.faces.iter().find(|f| f.dim == 1).unwrap();
        assert_eq!(edge.sections.len(), 4);
    }

    #[test]
    fn tropical_breakpoints_in_one_dimension() {
        let pts = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let v = tropical_vertices(&[0.0, 10.0, 0.0], &pts);
        let mut xs: Vec<f64> = v.iter().map(|p| p[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(xs, vec![-10.0, 10.0]);
        assert_eq!(tropical_vertices(&[0.0, -5.0, 0.0], &pts), vec![vec![0.0]]);
    }
}
