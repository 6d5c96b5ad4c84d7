//! Polarizations, moment polytopes and their exact lattice data.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::fan::{Fan, LatticeVector};
use crate::linalg::{self, Matrix};
use crate::rational::{int, Rational, RationalVector};

/// A torus-invariant Q-divisor `sum_rho a_rho D_rho`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polarization {
    pub coeffs: Vec<Rational>,
}

impl Polarization {
    pub fn anticanonical(fan: &Fan) -> Polarization {
        Polarization {
            coeffs: vec![Rational::one(); fan.rays().len()],
        }
    }

    pub fn new(coeffs: Vec<Rational>) -> Polarization {
        Polarization { coeffs }
    }

    pub fn is_anticanonical(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_one())
    }
}

/// `{u : <u, v_rho> + a_rho >= 0 for all rho}` with its exact vertex set.
#[derive(Clone, Debug)]
pub struct MomentPolytope {
    dim: usize,
    facets: Vec<(LatticeVector, Rational)>,
    vertices: Vec<RationalVector>,
    // tight[v] = facet indices on which vertex v lies
    tight: Vec<BTreeSet<usize>>,
}

fn affine_rank(points: &[&RationalVector]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = points[0];
    let rows: Matrix = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    linalg::rank(&rows)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

impl MomentPolytope {
    /// Half-space description of a bounded polytope; vertices come from exact intersections of
    /// `dim`-tuples of facet hyperplanes.
    pub fn from_halfspaces(dim: usize, facets: Vec<(LatticeVector, Rational)>) -> Result<Self> {
        let mut verts: BTreeSet<RationalVector> = BTreeSet::new();
        for subset in combinations(facets.len(), dim) {
            let a: Matrix = subset.iter().map(|&i| facets[i].0.to_rational()).collect();
            let b: Vec<Rational> = subset.iter().map(|&i| -facets[i].1.clone()).collect();
            let Some(u) = linalg::solve(&a, &b) else { continue };
            let feasible = facets
                .iter()
                .all(|(v, c)| !(v.dot_rational(&u) + c).is_negative());
            if feasible {
                verts.insert(u);
            }
        }
        let vertices: Vec<RationalVector> = verts.into_iter().collect();
        if vertices.is_empty() {
            return Err(ToricError::NotAPolarization("polytope is empty".into()));
        }
        let refs: Vec<&RationalVector> = vertices.iter().collect();
        if affine_rank(&refs) < dim {
            return Err(ToricError::NotAPolarization(
                "polytope has empty interior".into(),
            ));
        }
        let tight = vertices
            .iter()
            .map(|u| {
                facets
                    .iter()
                    .enumerate()
                    .filter(|(_, (v, c))| (v.dot_rational(u) + c).is_zero())
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Ok(MomentPolytope {
            dim,
            facets,
            vertices,
            tight,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[(LatticeVector, Rational)] {
        &self.facets
    }

    pub fn vertices(&self) -> &[RationalVector] {
        &self.vertices
    }

    pub fn contains(&self, u: &[Rational]) -> bool {
        self.facets
            .iter()
            .all(|(v, c)| !(v.dot_rational(u) + c).is_negative())
    }

    /// The integral constants `m * a_rho`, or a divisibility error.
    pub fn scaled_constants(&self, m: u64) -> Result<Vec<BigInt>> {
        let mr = int(m as i64);
        self.facets
            .iter()
            .enumerate()
            .map(|(i, (_, a))| {
                let s = a * &mr;
                if s.is_integer() {
                    Ok(s.to_integer())
                } else {
                    Err(ToricError::Divisibility {
                        m,
                        ray: i,
                        coeff: a.to_string(),
                    })
                }
            })
            .collect()
    }

    /// All `u` in `mP ∩ M`, in lexicographic order.
    pub fn lattice_points(&self, m: u64) -> Result<Vec<LatticeVector>> {
        if m == 0 {
            return Err(ToricError::Domain("m must be positive".into()));
        }
        let consts = self.scaled_constants(m)?;
        let mr = int(m as i64);
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let (a, b) = crate::rational::min_max(self.vertices.iter().map(|v| &v[k]))
                .expect("nonempty vertex set");
            lo.push((a * &mr).floor().to_integer());
            hi.push((b * &mr).ceil().to_integer());
        }
        let normals: Vec<&LatticeVector> = self.facets.iter().map(|(v, _)| v).collect();
        let first: Vec<BigInt> = range(&lo[0], &hi[0]);
        let chunks: Vec<Vec<LatticeVector>> = first
            .par_iter()
            .map(|x0| {
                let mut out = Vec::new();
                let mut cur = vec![x0.clone()];
                enumerate_box(&lo, &hi, &mut cur, &normals, &consts, &mut out);
                out
            })
            .collect();
        Ok(chunks.into_iter().flatten().collect())
    }
}

fn range(lo: &BigInt, hi: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = lo.clone();
    while &x <= hi {
        out.push(x.clone());
        x += 1;
    }
    out
}

fn enumerate_box(
    lo: &[BigInt],
    hi: &[BigInt],
    cur: &mut Vec<BigInt>,
    normals: &[&LatticeVector],
    consts: &[BigInt],
    out: &mut Vec<LatticeVector>,
) {
    let k = cur.len();
    if k == lo.len() {
        let ok = normals.iter().zip(consts).all(|(v, c)| {
            let s: BigInt = v.0.iter().zip(cur.iter()).map(|(a, b)| a * b).sum();
            !(s + c).is_negative()
        });
        if ok {
            out.push(LatticeVector(cur.clone()));
        }
        return;
    }
    let mut x = lo[k].clone();
    while x <= hi[k] {
        cur.push(x.clone());
        enumerate_box(lo, hi, cur, normals, consts, out);
        cur.pop();
        x += 1;
    }
}

/// `b_m = (1 / (m d_m)) sum_u u`.
pub fn quantized_barycenter(points: &[LatticeVector], m: u64) -> Result<RationalVector> {
    let first = points
        .first()
        .ok_or_else(|| ToricError::Domain("empty lattice point set".into()))?;
    let mut sum = vec![BigInt::zero(); first.dim()];
    for p in points {
        for (s, x) in sum.iter_mut().zip(&p.0) {
            *s += x;
        }
    }
    let denom = BigInt::from(m) * BigInt::from(points.len());
    Ok(sum
        .into_iter()
        .map(|s| Rational::new(s, denom.clone()))
        .collect())
}

/// Apex used at every level of the recursive face triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Apex {
    /// Average of the face's vertices (relative interior point).
    VertexAverage,
    /// Lexicographically smallest vertex of the face.
    FirstVertex,
}

pub type Simplex = Vec<RationalVector>;

impl MomentPolytope {
    /// Triangulates by coning from an apex over recursively triangulated facets.
    pub fn triangulate(&self, apex: Apex) -> Vec<Simplex> {
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let mut out = Vec::new();
        self.tri_face(&all, self.dim, apex, &mut out);
        out.retain(|s| !simplex_volume(s).is_zero());
        out
    }

    fn tri_face(&self, face: &[usize], dim: usize, apex: Apex, out: &mut Vec<Simplex>) {
        if dim == 0 {
            out.push(vec![self.vertices[face[0]].clone()]);
            return;
        }
        let apex_point: RationalVector = match apex {
            Apex::VertexAverage => {
                let k = int(face.len() as i64);
                (0..self.dim)
                    .map(|j| face.iter().map(|&v| &self.vertices[v][j]).sum::<Rational>() / &k)
                    .collect()
            }
            Apex::FirstVertex => self.vertices[face[0]].clone(),
        };
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for rho in 0..self.facets.len() {
            let sub: Vec<usize> = face
                .iter()
                .copied()
                .filter(|&v| self.tight[v].contains(&rho))
                .collect();
            if sub.is_empty() || sub.len() == face.len() || seen.contains(&sub) {
                continue;
            }
            let refs: Vec<&RationalVector> = sub.iter().map(|&v| &self.vertices[v]).collect();
            if affine_rank(&refs) + 1 != dim {
                continue;
            }
            seen.insert(sub.clone());
            let mut inner = Vec::new();
            self.tri_face(&sub, dim - 1, apex, &mut inner);
            for mut s in inner {
                s.insert(0, apex_point.clone());
                out.push(s);
            }
        }
    }

    /// Exact volume, as the sum of `|det| / n!` over a triangulation.
    pub fn volume_with(&self, apex: Apex) -> Rational {
        self.triangulate(apex).iter().map(simplex_volume).sum()
    }

    pub fn volume(&self) -> Rational {
        self.volume_with(Apex::VertexAverage)
    }

    pub fn barycenter_with(&self, apex: Apex) -> RationalVector {
        let tri = self.triangulate(apex);
        let mut total = Rational::zero();
        let mut moment = vec![Rational::zero(); self.dim];
        let k = int(self.dim as i64 + 1);
        for s in &tri {
            let vol = simplex_volume(s);
            for j in 0..self.dim {
                let c: Rational = s.iter().map(|p| &p[j]).sum::<Rational>() / &k;
                moment[j] += &vol * c;
            }
            total += vol;
        }
        moment.into_iter().map(|x| x / &total).collect()
    }

    pub fn barycenter(&self) -> RationalVector {
        self.barycenter_with(Apex::VertexAverage)
    }
}

pub fn simplex_volume(s: &Simplex) -> Rational {
    let n = s.len() - 1;
    if n == 0 {
        return Rational::zero();
    }
    let rows: Matrix = s[1..]
        .iter()
        .map(|p| p.iter().zip(&s[0]).map(|(a, b)| a - b).collect())
        .collect();
    let fact: i64 = (1..=n as i64).product();
    linalg::det(&rows).abs() / int(fact)
}

/// Moment polytope of `(fan, L)`. Requires `L` ample.
pub fn polytope(fan: &Fan, l: &Polarization) -> Result<MomentPolytope> {
    if l.coeffs.len() != fan.rays().len() {
        return Err(ToricError::Input(format!(
            "polarization has {} coefficients for {} rays",
            l.coeffs.len(),
            fan.rays().len()
        )));
    }
    if let Some((i, w)) = fan
        .walls()
        .iter()
        .enumerate()
        .find(|(_, w)| !w.pairing(&l.coeffs).is_positive())
    {
        return Err(ToricError::NotAPolarization(format!(
            "divisor is not ample: wall {i} (rays {:?}) has intersection number {}",
            w.shared,
            w.pairing(&l.coeffs)
        )));
    }
    let facets = fan
        .rays()
        .iter()
        .cloned()
        .zip(l.coeffs.iter().cloned())
        .collect();
    MomentPolytope::from_halfspaces(fan.dim(), facets)
}

/// Value of `s(L) = sup{s : -K - sL nef}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum NefThreshold {
    Finite(#[serde(with = "crate::rational::serde_rational")] Rational),
    Unbounded,
}

impl NefThreshold {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            NefThreshold::Finite(r) => Some(r),
            NefThreshold::Unbounded => None,
        }
    }
}

/// Per wall the pairing `(-K - sL).C = k0 - s k1` is affine in `s`; the threshold is the smallest
/// root among walls with `k1 > 0`.
pub fn nef_threshold(fan: &Fan, l: &Polarization) -> Result<NefThreshold> {
    let ones = vec![Rational::one(); fan.rays().len()];
    let mut best: Option<Rational> = None;
    for w in fan.walls() {
        let k0 = w.pairing(&ones);
        if !k0.is_positive() {
            return Err(ToricError::Domain("fan is not Fano".into()));
        }
        let k1 = w.pairing(&l.coeffs);
        if k1.is_positive() {
            let s = k0 / k1;
            if best.as_ref().is_none_or(|b| &s < b) {
                best = Some(s);
            }
        }
    }
    Ok(best.map_or(NefThreshold::Unbounded, NefThreshold::Finite))
}

/// Fan, polarization and moment polytope held together.
#[derive(Clone, Debug)]
pub struct PolarizedToric {
    pub fan: Fan,
    pub polarization: Polarization,
    pub polytope: MomentPolytope,
}

impl PolarizedToric {
    pub fn new(fan: Fan, polarization: Polarization) -> Result<Self> {
        let polytope = polytope(&fan, &polarization)?;
        Ok(PolarizedToric {
            fan,
            polarization,
            polytope,
        })
    }

    pub fn anticanonical(fan: Fan) -> Result<Self> {
        let l = Polarization::anticanonical(&fan);
        PolarizedToric::new(fan, l)
    }

    pub fn dim(&self) -> usize {
        self.fan.dim()
    }

    /// Applies the unimodular map `A` to the rays (and `A^{-T}` implicitly to characters).
    pub fn transform(&self, a: &[Vec<i64>]) -> Result<Self> {
        PolarizedToric::new(self.fan.transform(a)?, self.polarization.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn p1() -> Fan {
        Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
    }
    fn p2() -> Fan {
        Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[2, 0]]).unwrap()
    }
    fn blp2() -> Fan {
        Fan::from_i64(
            2,
            &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]],
            &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]],
        )
        .unwrap()
    }
    fn pt(v: &[i64]) -> RationalVector {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn vertices_of_anticanonical_polytopes() {
        let f = p1();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        assert_eq!(p.vertices(), &[pt(&[-1]), pt(&[1])]);

        let f = p2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        let want: BTreeSet<_> = [pt(&[-1, -1]), pt(&[2, -1]), pt(&[-1, 2])].into_iter().collect();
        assert_eq!(p.vertices().iter().cloned().collect::<BTreeSet<_>>(), want);

        let f = blp2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        let want: BTreeSet<_> = [pt(&[-1, 0]), pt(&[0, -1]), pt(&[2, -1]), pt(&[-1, 2])]
            .into_iter()
            .collect();
        assert_eq!(p.vertices().iter().cloned().collect::<BTreeSet<_>>(), want);
    }

    // independent brute-force count: scan a generous box with the raw inequalities
    fn brute_count(fan: &Fan, a: &[i64], m: i64, r: i64) -> usize {
        let n = fan.dim();
        let mut count = 0;
        let total = (2 * r + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let u: Vec<i64> = (0..n)
                .map(|_| {
                    let x = c % (2 * r + 1) - r;
                    c /= 2 * r + 1;
                    x
                })
                .collect();
            let ok = fan.rays().iter().zip(a).all(|(v, &ai)| {
                let s: i64 = v.to_f64().iter().zip(&u).map(|(x, y)| *x as i64 * y).sum();
                s + m * ai >= 0
            });
            if ok {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn lattice_point_counts() {
        let f = p1();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        let pts = p.lattice_points(1).unwrap();
        assert_eq!(pts, vec![
            LatticeVector::from_i64(&[-1]),
            LatticeVector::from_i64(&[0]),
            LatticeVector::from_i64(&[1])
        ]);

        let f = p2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        assert_eq!(p.lattice_points(1).unwrap().len(), 10);
        assert_eq!(brute_count(&f, &[1, 1, 1], 1, 5), 10);
        for m in 1..=4 {
            assert_eq!(
                p.lattice_points(m).unwrap().len(),
                brute_count(&f, &[1, 1, 1], m as i64, 3 * m as i64 + 1)
            );
        }

        let f = blp2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        let pts = p.lattice_points(1).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(!pts.contains(&LatticeVector::from_i64(&[-1, -1])));
        assert_eq!(brute_count(&f, &[1, 1, 1, 1], 1, 5), 9);
        let mut sorted = pts.clone();
        sorted.sort();
        assert_eq!(sorted, pts);
    }

    #[test]
    fn divisibility_is_enforced() {
        let f = p1();
        let p = polytope(&f, &Polarization::new(vec![ratio(1, 2), ratio(1, 2)])).unwrap();
        assert!(matches!(
            p.lattice_points(1),
            Err(ToricError::Divisibility { .. })
        ));
        assert_eq!(p.lattice_points(2).unwrap().len(), 3);
    }

    #[test]
    fn barycenters() {
        let f = blp2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        let pts = p.lattice_points(1).unwrap();
        assert_eq!(quantized_barycenter(&pts, 1).unwrap(), vec![ratio(1, 9), ratio(1, 9)]);
        assert_eq!(p.barycenter(), vec![ratio(1, 12), ratio(1, 12)]);
        assert_eq!(p.volume(), int(4));

        let f = p2();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        assert_eq!(p.volume(), ratio(9, 2));
        assert_eq!(p.barycenter(), pt(&[0, 0]));
        assert_eq!(
            quantized_barycenter(&p.lattice_points(1).unwrap(), 1).unwrap(),
            pt(&[0, 0])
        );

        let f = p1();
        let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
        assert_eq!(p.volume(), int(2));
        assert_eq!(p.barycenter(), pt(&[0]));
        assert!(quantized_barycenter(&[], 1).is_err());
    }

    #[test]
    fn triangulations_agree() {
        for f in [p1(), p2(), blp2()] {
            let p = polytope(&f, &Polarization::anticanonical(&f)).unwrap();
            assert_eq!(p.volume_with(Apex::VertexAverage), p.volume_with(Apex::FirstVertex));
            assert_eq!(
                p.barycenter_with(Apex::VertexAverage),
                p.barycenter_with(Apex::FirstVertex)
            );
        }
    }

    #[test]
    fn nef_thresholds() {
        let f = p1();
        assert_eq!(
            nef_threshold(&f, &Polarization::new(vec![int(0), int(1)])).unwrap(),
            NefThreshold::Finite(int(2))
        );
        let f = p2();
        assert_eq!(
            nef_threshold(&f, &Polarization::new(vec![int(1), int(0), int(0)])).unwrap(),
            NefThreshold::Finite(int(3))
        );
        for f in [p1(), p2(), blp2()] {
            assert_eq!(
                nef_threshold(&f, &Polarization::anticanonical(&f)).unwrap(),
                NefThreshold::Finite(int(1))
            );
        }
    }

    #[test]
    fn non_ample_is_rejected() {
        let f = blp2();
        let e = polytope(&f, &Polarization::new(vec![int(1), int(1), int(1), int(2)]));
        assert!(matches!(e, Err(ToricError::NotAPolarization(_))));
    }
}
