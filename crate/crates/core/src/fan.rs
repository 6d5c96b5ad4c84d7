//! Smooth complete fans: validation, cone location and walls.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::linalg::{self, Matrix};
use crate::rational::{ratio, Rational};

/// An integer vector in the lattice `N` (rays) or `M` (characters).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVector(pub Vec<BigInt>);

impl LatticeVector {
    pub fn from_i64(v: &[i64]) -> Self {
        LatticeVector(v.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.0.iter().map(|x| Rational::from_integer(x.clone())).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.0.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn dot(&self, other: &LatticeVector) -> BigInt {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dot_rational(&self, other: &[Rational]) -> Rational {
        crate::rational::dot_int(&self.0, other)
    }

    fn gcd(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for LatticeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for x in &self.0 {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPrimitiveRay { index: usize, ray: String },
    NonSimplicialCone { index: usize, size: usize },
    NonSmoothCone { index: usize, det: String },
    Incomplete { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPrimitiveRay { index, ray } => {
                write!(f, "non-primitive ray at index {index} ({ray})")
            }
            Violation::NonSimplicialCone { index, size } => {
                write!(f, "maximal cone {index} has {size} rays, expected the fan dimension")
            }
            Violation::NonSmoothCone { index, det } => {
                write!(f, "non-smooth cone at index {index} (|det| = {det})")
            }
            Violation::Incomplete { detail } => write!(f, "fan is not complete: {detail}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "pass");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Codimension-one cone shared by two maximal cones, with its integral wall relation
/// `v_u + v_u' + sum_i b_i w_i = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Wall {
    pub cones: (usize, usize),
    pub shared: Vec<usize>,
    pub off: (usize, usize),
    #[serde(serialize_with = "serialize_ints")]
    pub coeffs: Vec<BigInt>,
}

fn serialize_ints<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

impl Wall {
    /// Intersection number of the divisor `sum_rho c_rho D_rho` with the wall curve.
    pub fn pairing(&self, c: &[Rational]) -> Rational {
        let mut s = &c[self.off.0] + &c[self.off.1];
        for (w, b) in self.shared.iter().zip(&self.coeffs) {
            s += Rational::from_integer(b.clone()) * &c[*w];
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Fan {
    dim: usize,
    rays: Vec<LatticeVector>,
    max_cones: Vec<Vec<usize>>,
    // inverse of the matrix whose columns are the rays of each maximal cone
    cone_inverses: Vec<Matrix>,
    walls: Vec<Wall>,
}

fn check_shape(dim: usize, rays: &[LatticeVector], max_cones: &[Vec<usize>]) -> Result<()> {
    if dim == 0 {
        return Err(ToricError::Input("fan dimension must be at least 1".into()));
    }
    if rays.is_empty() {
        return Err(ToricError::Input("fan has no rays".into()));
    }
    if max_cones.is_empty() {
        return Err(ToricError::Input("fan has no maximal cones".into()));
    }
    for (i, r) in rays.iter().enumerate() {
        if r.dim() != dim {
            return Err(ToricError::Input(format!(
                "ray {i} has {} coordinates, expected {dim}",
                r.dim()
            )));
        }
    }
    for (c, cone) in max_cones.iter().enumerate() {
        for &idx in cone {
            if idx >= rays.len() {
                return Err(ToricError::Input(format!(
                    "maximal cone {c} references ray index {idx}, but there are only {} rays",
                    rays.len()
                )));
            }
        }
        let mut sorted = cone.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != cone.len() {
            return Err(ToricError::Input(format!("maximal cone {c} repeats a ray index")));
        }
    }
    Ok(())
}

fn columns(rays: &[LatticeVector], idx: &[usize]) -> Matrix {
    let n = rays[idx[0]].dim();
    (0..n)
        .map(|i| {
            idx.iter()
                .map(|&j| Rational::from_integer(rays[j].0[i].clone()))
                .collect()
        })
        .collect()
}

/// Sign of `det[w_1, .., w_{n-1}, x]`.
fn side(rays: &[LatticeVector], shared: &[usize], x: usize) -> Rational {
    let mut idx = shared.to_vec();
    idx.push(x);
    linalg::det(&columns(rays, &idx))
}

// Generic probe points for the completeness check; coordinates avoid small rational relations.
fn probe_points(dim: usize) -> Vec<Vec<Rational>> {
    const NUMS: [(i64, i64); 6] = [(1, 1), (3, 7), (5, 13), (11, 29), (17, 43), (23, 61)];
    let mut out = Vec::new();
    for (shift, mask) in (0..3).flat_map(|k| (0..(1u32 << dim)).map(move |mask| (k, mask))) {
        let p: Vec<Rational> = (0..dim)
            .map(|i| {
                let (a, b) = NUMS[(i + shift) % NUMS.len()];
                let a = a + (i / NUMS.len()) as i64;
                let s = if mask & (1 << i) != 0 { -1 } else { 1 };
                ratio(s * a, b)
            })
            .collect();
        out.push(p);
    }
    out
}

/// Checks primitivity, smoothness and completeness. Malformed indices are input errors;
/// geometric failures are collected into the report.
pub fn validate_fan(
    dim: usize,
    rays: &[LatticeVector],
    max_cones: &[Vec<usize>],
) -> Result<ValidationReport> {
    check_shape(dim, rays, max_cones)?;
    let mut report = ValidationReport::default();
    for (i, r) in rays.iter().enumerate() {
        if !r.gcd().is_one() {
            report.violations.push(Violation::NonPrimitiveRay {
                index: i,
                ray: r.to_string(),
            });
        }
    }
    let mut simplicial = true;
    for (c, cone) in max_cones.iter().enumerate() {
        if cone.len() != dim {
            simplicial = false;
            report.violations.push(Violation::NonSimplicialCone {
                index: c,
                size: cone.len(),
            });
            continue;
        }
        let d = linalg::det(&columns(rays, cone));
        if d.abs() != Rational::one() {
            report.violations.push(Violation::NonSmoothCone {
                index: c,
                det: d.abs().to_string(),
            });
        }
    }
    if !simplicial || !report.passed() {
        return Ok(report);
    }
    // every facet of every maximal cone must be shared by exactly one other cone,
    // lying on the opposite side of the wall
    for (face, owners) in facet_owners(max_cones) {
        if owners.len() != 2 {
            report.violations.push(Violation::Incomplete {
                detail: format!(
                    "face {:?} lies in {} maximal cone(s), expected 2",
                    face,
                    owners.len()
                ),
            });
            continue;
        }
        let s0 = side(rays, &face, owners[0].1);
        let s1 = side(rays, &face, owners[1].1);
        if (s0.is_positive() && s1.is_positive()) || (s0.is_negative() && s1.is_negative()) {
            report.violations.push(Violation::Incomplete {
                detail: format!("cones {} and {} overlap across face {:?}", owners[0].0, owners[1].0, face),
            });
        }
    }
    if report.passed() {
        let inverses: Vec<Matrix> = max_cones
            .iter()
            .map(|c| linalg::inverse(&columns(rays, c)).expect("smooth cone is invertible"))
            .collect();
        for p in probe_points(dim) {
            let coords: Vec<Vec<Rational>> = inverses.iter().map(|inv| linalg::mat_vec(inv, &p)).collect();
            let closed = coords.iter().filter(|t| t.iter().all(|x| !x.is_negative())).count();
            let interior = coords.iter().filter(|t| t.iter().all(|x| x.is_positive())).count();
            if closed > 0 && interior == 0 {
                // the probe sits on a wall of this fan; it says nothing
                continue;
            }
            if closed != 1 {
                report.violations.push(Violation::Incomplete {
                    detail: format!("probe point lies in {closed} maximal cones"),
                });
                break;
            }
        }
    }
    Ok(report)
}

fn facet_owners(max_cones: &[Vec<usize>]) -> BTreeMap<Vec<usize>, Vec<(usize, usize)>> {
    let mut owners: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for (c, cone) in max_cones.iter().enumerate() {
        for (k, &off) in cone.iter().enumerate() {
            let mut face: Vec<usize> = cone
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, &r)| r)
                .collect();
            face.sort_unstable();
            owners.entry(face).or_default().push((c, off));
        }
    }
    owners
}

impl Fan {
    /// Builds a validated fan; fails with [`ToricError::InvalidFan`] if any invariant is violated.
    pub fn new(dim: usize, rays: Vec<LatticeVector>, max_cones: Vec<Vec<usize>>) -> Result<Fan> {
        let report = validate_fan(dim, &rays, &max_cones)?;
        if !report.passed() {
            return Err(ToricError::InvalidFan(report));
        }
        let cone_inverses = max_cones
            .iter()
            .map(|c| linalg::inverse(&columns(&rays, c)).expect("smooth cone is invertible"))
            .collect();
        let walls = compute_walls(&rays, &max_cones);
        Ok(Fan {
            dim,
            rays,
            max_cones,
            cone_inverses,
            walls,
        })
    }

    pub fn from_i64(dim: usize, rays: &[&[i64]], max_cones: &[&[usize]]) -> Result<Fan> {
        Fan::new(
            dim,
            rays.iter().map(|r| LatticeVector::from_i64(r)).collect(),
            max_cones.iter().map(|c| c.to_vec()).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    /// Finds a maximal cone containing `v` and the coordinates of `v` in that cone's ray basis.
    pub fn locate(&self, v: &[Rational]) -> (usize, Vec<Rational>) {
        for (c, inv) in self.cone_inverses.iter().enumerate() {
            let t = linalg::mat_vec(inv, v);
            if t.iter().all(|x| !x.is_negative()) {
                return (c, t);
            }
        }
        unreachable!("complete fan covers every vector")
    }

    /// Applies `v -> A v` to every ray; `A` must be unimodular.
    pub fn transform(&self, a: &[Vec<i64>]) -> Result<Fan> {
        let am: Matrix = a
            .iter()
            .map(|r| r.iter().map(|&x| crate::rational::int(x)).collect())
            .collect();
        if linalg::det(&am).abs() != Rational::one() {
            return Err(ToricError::Domain("transform is not unimodular".into()));
        }
        let rays = self
            .rays
            .iter()
            .map(|r| {
                LatticeVector(
                    a.iter()
                        .map(|row| row.iter().zip(&r.0).map(|(x, y)| BigInt::from(*x) * y).sum())
                        .collect(),
                )
            })
            .collect();
        Fan::new(self.dim, rays, self.max_cones.clone())
    }
}

fn compute_walls(rays: &[LatticeVector], max_cones: &[Vec<usize>]) -> Vec<Wall> {
    let mut walls = Vec::new();
    for (face, owners) in facet_owners(max_cones) {
        let (c0, u0) = owners[0];
        let (c1, u1) = owners[1];
        // express v_u' in the basis (w_1..w_{n-1}, v_u) of the first cone
        let mut basis = face.clone();
        basis.push(u0);
        let coords = linalg::solve(&columns(rays, &basis), &rays[u1].to_rational())
            .expect("smooth cone basis");
        debug_assert_eq!(coords[coords.len() - 1], -Rational::one());
        let coeffs = coords[..face.len()]
            .iter()
            .map(|t| {
                debug_assert!(t.is_integer());
                -t.to_integer()
            })
            .collect();
        walls.push(Wall {
            cones: (c0, c1),
            shared: face,
            off: (u0, u1),
            coeffs,
        });
    }
    walls
}

/// Outcome of a nef test: the first wall curve with negative intersection, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NefCheck {
    pub nef: bool,
    pub violated_wall: Option<usize>,
}

pub fn is_nef(fan: &Fan, coeffs: &[Rational]) -> NefCheck {
    let violated_wall = fan
        .walls()
        .iter()
        .position(|w| w.pairing(coeffs).is_negative());
    NefCheck {
        nef: violated_wall.is_none(),
        violated_wall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    pub(crate) fn p1() -> Fan {
        Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
    }

    pub(crate) fn p2() -> Fan {
        Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[2, 0]]).unwrap()
    }

    #[test]
    fn probe_on_a_ray_is_not_an_overlap() {
        // (7, 3) passes through the first probe point (1, 3/7)
        let f = Fan::from_i64(2, &[&[7, 3], &[2, 1], &[-9, -4]], &[&[0, 1], &[1, 2], &[2, 0]]);
        assert!(f.is_ok());
    }

    pub(crate) fn blp2() -> Fan {
        Fan::from_i64(
            2,
            &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]],
            &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]],
        )
        .unwrap()
    }

    #[test]
    fn standard_fans_pass() {
        p1();
        p2();
        blp2();
    }

    #[test]
    fn non_primitive_ray_is_reported() {
        let rays = vec![
            LatticeVector::from_i64(&[2, 0]),
            LatticeVector::from_i64(&[0, 1]),
            LatticeVector::from_i64(&[-1, -1]),
        ];
        let cones = vec![vec![0, 1], vec![1, 2], vec![2, 0]];
        let rep = validate_fan(2, &rays, &cones).unwrap();
        assert!(!rep.passed());
        assert!(rep.to_string().contains("non-primitive ray at index 0"));
    }

    #[test]
    fn bad_index_is_input_error() {
        let rays = vec![LatticeVector::from_i64(&[1]), LatticeVector::from_i64(&[-1])];
        let err = validate_fan(1, &rays, &[vec![0], vec![5]]).unwrap_err();
        assert!(matches!(err, ToricError::Input(_)));
    }

    #[test]
    fn incomplete_fan_is_reported() {
        let rays = vec![
            LatticeVector::from_i64(&[1, 0]),
            LatticeVector::from_i64(&[0, 1]),
            LatticeVector::from_i64(&[-1, -1]),
        ];
        let rep = validate_fan(2, &rays, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Incomplete { .. })));
    }

    #[test]
    fn non_smooth_cone_is_reported() {
        // weighted projective plane P(1,1,2)
        let rays = vec![
            LatticeVector::from_i64(&[1, 0]),
            LatticeVector::from_i64(&[0, 1]),
            LatticeVector::from_i64(&[-1, -2]),
        ];
        let rep = validate_fan(2, &rays, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonSmoothCone { .. })));
    }

    #[test]
    fn wall_relations() {
        let f = p2();
        assert_eq!(f.walls().len(), 3);
        for w in f.walls() {
            // e1 + e2 + (-e1-e2) = 0 style relations
            assert_eq!(w.coeffs, vec![BigInt::from(1)]);
        }
        let b = blp2();
        let exceptional = b
            .walls()
            .iter()
            .find(|w| w.shared == vec![3])
            .unwrap();
        assert_eq!(exceptional.coeffs, vec![BigInt::from(-1)]);
        let p = p1();
        assert_eq!(p.walls().len(), 1);
        assert!(p.walls()[0].shared.is_empty());
    }

    #[test]
    fn nef_examples() {
        assert!(is_nef(&p2(), &[int(1), int(1), int(1)]).nef);
        let c = is_nef(&blp2(), &[int(0), int(0), int(0), int(-1)]);
        assert!(!c.nef);
        assert!(c.violated_wall.is_some());
        assert!(is_nef(&p1(), &[int(1), int(0)]).nef);
    }

    #[test]
    fn locate_in_cone() {
        let f = p2();
        let (c, t) = f.locate(&[int(1), int(1)]);
        assert_eq!(f.max_cones()[c], vec![0, 1]);
        assert_eq!(t, vec![int(1), int(1)]);
    }
}
