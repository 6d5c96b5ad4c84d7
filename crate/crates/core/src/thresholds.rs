//! Valuative data of toric valuations and the exact `delta_m` invariants.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::fan::{Fan, LatticeVector};
use crate::polytope::{quantized_barycenter, NefThreshold, Polarization, PolarizedToric};
use crate::rational::{self, int, serde_rational, Rational, RationalVector};

/// A point of `N ⊗ Q`, i.e. a torus-invariant valuation up to scaling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToricValuation {
    pub v: RationalVector,
    pub ray: Option<usize>,
}

impl ToricValuation {
    pub fn new(v: RationalVector) -> Result<Self> {
        if v.iter().all(|x| x.is_zero()) {
            return Err(ToricError::Domain("valuation vector must be nonzero".into()));
        }
        Ok(ToricValuation { v, ray: None })
    }

    pub fn from_ray(fan: &Fan, index: usize) -> Self {
        ToricValuation {
            v: fan.rays()[index].to_rational(),
            ray: Some(index),
        }
    }

    pub fn rays(fan: &Fan) -> Vec<ToricValuation> {
        (0..fan.rays().len()).map(|i| Self::from_ray(fan, i)).collect()
    }
}

/// Piecewise-linear function with value `coeffs[rho]` at `v_rho`, linear on each maximal cone.
pub fn support_value(fan: &Fan, coeffs: &[Rational], v: &ToricValuation) -> Rational {
    let (c, t) = fan.locate(&v.v);
    fan.max_cones()[c]
        .iter()
        .zip(&t)
        .map(|(&r, ti)| ti * &coeffs[r])
        .sum()
}

/// `A_X(v)`: the sum of the cone coordinates of `v`.
pub fn log_discrepancy(fan: &Fan, v: &ToricValuation) -> Rational {
    let (_, t) = fan.locate(&v.v);
    t.into_iter().sum()
}

/// Lattice points of `mP` with their quantized barycenter.
#[derive(Clone, Debug)]
pub struct Sections {
    pub m: u64,
    pub points: Vec<LatticeVector>,
    pub barycenter: RationalVector,
}

impl Sections {
    pub fn new(pair: &PolarizedToric, m: u64) -> Result<Self> {
        let points = pair.polytope.lattice_points(m)?;
        let barycenter = quantized_barycenter(&points, m)?;
        Ok(Sections {
            m,
            points,
            barycenter,
        })
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }
}

/// `ord_v(chi^u) = <u, v> + m * phi_L(v)` for `chi^u` viewed as a section of `mL`.
pub fn ord_section(
    pair: &PolarizedToric,
    m: u64,
    u: &LatticeVector,
    v: &ToricValuation,
) -> Result<Rational> {
    let consts = pair.polytope.scaled_constants(m)?;
    let inside = pair
        .fan
        .rays()
        .iter()
        .zip(&consts)
        .all(|(r, c)| !(r.dot(u) + c).is_negative());
    if !inside {
        return Err(ToricError::Domain(format!("lattice point {u} lies outside {m}P")));
    }
    Ok(ord_unchecked(pair, m, u, v))
}

fn ord_unchecked(pair: &PolarizedToric, m: u64, u: &LatticeVector, v: &ToricValuation) -> Rational {
    u.dot_rational(&v.v) + int(m as i64) * support_value(&pair.fan, &pair.polarization.coeffs, v)
}

/// `S_m(v)` through the barycenter: `<b_m, v> + phi_L(v)`.
pub fn s_m(pair: &PolarizedToric, sections: &Sections, v: &ToricValuation) -> Rational {
    rational::dot(&sections.barycenter, &v.v)
        + support_value(&pair.fan, &pair.polarization.coeffs, v)
}

/// `S_m(v)` by summing vanishing orders over the monomial basis.
pub fn s_m_direct(pair: &PolarizedToric, sections: &Sections, v: &ToricValuation) -> Rational {
    let phi = support_value(&pair.fan, &pair.polarization.coeffs, v) * int(sections.m as i64);
    let total: Rational = sections
        .points
        .iter()
        .map(|u| u.dot_rational(&v.v) + &phi)
        .sum();
    total / (int(sections.m as i64) * int(sections.dim() as i64))
}

/// `tau_m(v)`: the largest vanishing order of a section of `mL` along `v`.
pub fn tau_m(pair: &PolarizedToric, sections: &Sections, v: &ToricValuation) -> Rational {
    sections
        .points
        .iter()
        .map(|u| ord_unchecked(pair, sections.m, u, v))
        .max()
        .expect("nonempty section basis")
}

/// Minimum of `1 / value` over rays, ties broken by lowest index. Rays with nonpositive
/// value contribute `+inf`.
fn minimize_reciprocal(values: &[Rational]) -> Result<(Rational, usize, Vec<usize>)> {
    let best = values
        .iter()
        .filter(|x| x.is_positive())
        .max()
        .ok_or(ToricError::TrivialPolarization)?;
    let tied: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, x)| *x == best)
        .map(|(i, _)| i)
        .collect();
    Ok((best.recip(), tied[0], tied))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaT {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    pub witness_ray: usize,
    pub tied_rays: Vec<usize>,
    /// `S_m(v_rho) = <b_m, v_rho> + a_rho` for each ray.
    #[serde(with = "serde_rational::vec")]
    pub per_ray: Vec<Rational>,
}

/// `delta_m^T = min_rho A(v_rho) / S_m(v_rho) = min_rho 1 / (<b_m, v_rho> + a_rho)`.
pub fn delta_m_t(pair: &PolarizedToric, sections: &Sections) -> Result<DeltaT> {
    let per_ray = ray_table(pair, &sections.barycenter);
    let (value, witness_ray, tied_rays) = minimize_reciprocal(&per_ray)?;
    Ok(DeltaT {
        value,
        witness_ray,
        tied_rays,
        per_ray,
    })
}

fn ray_table(pair: &PolarizedToric, b: &[Rational]) -> Vec<Rational> {
    pair.fan
        .rays()
        .iter()
        .zip(&pair.polarization.coeffs)
        .map(|(v, a)| v.dot_rational(b) + a)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    pub m: u64,
    #[serde(with = "serde_rational")]
    pub delta_t: Rational,
    pub s_l: NefThreshold,
    #[serde(with = "serde_rational")]
    pub lower: Rational,
    #[serde(with = "serde_rational")]
    pub upper: Rational,
    pub exact: bool,
    pub witness_ray: usize,
    pub tied_rays: Vec<usize>,
    #[serde(with = "serde_rational::vec")]
    pub per_ray: Vec<Rational>,
}

impl ThresholdReport {
    /// `delta_m` itself when the bracket closes.
    pub fn delta_m(&self) -> Option<&Rational> {
        self.exact.then_some(&self.upper)
    }
}

/// `min{delta_m^T, s(L)} <= delta_m <= delta_m^T`.
pub fn delta_m_bracket(pair: &PolarizedToric, m: u64) -> Result<ThresholdReport> {
    let sections = Sections::new(pair, m)?;
    let dt = delta_m_t(pair, &sections)?;
    let s_l = crate::polytope::nef_threshold(&pair.fan, &pair.polarization)?;
    let (lower, exact) = match s_l.finite() {
        Some(s) if s < &dt.value => (s.clone(), false),
        _ => (dt.value.clone(), true),
    };
    Ok(ThresholdReport {
        m,
        upper: dt.value.clone(),
        delta_t: dt.value,
        s_l,
        lower,
        exact,
        witness_ray: dt.witness_ray,
        tied_rays: dt.tied_rays,
        per_ray: dt.per_ray,
    })
}

/// `1 / max_rho (<b(P), v_rho> + a_rho)` with the continuous barycenter.
pub fn delta_limit(pair: &PolarizedToric) -> Result<DeltaT> {
    let per_ray = ray_table(pair, &pair.polytope.barycenter());
    let (value, witness_ray, tied_rays) = minimize_reciprocal(&per_ray)?;
    Ok(DeltaT {
        value,
        witness_ray,
        tied_rays,
        per_ray,
    })
}

/// T-invariant variant of Tian's alpha invariant: `min_rho m / tau_m(v_rho)`, the worst log
/// canonical threshold of `(1/m) div(chi^u)` along boundary divisors.
pub fn alpha_m_t(pair: &PolarizedToric, sections: &Sections) -> Result<Rational> {
    let m = int(sections.m as i64);
    ToricValuation::rays(&pair.fan)
        .iter()
        .map(|v| tau_m(pair, sections, v))
        .filter(|t| t.is_positive())
        .map(|t| &m / t)
        .min()
        .ok_or(ToricError::TrivialPolarization)
}

/// Renders an m-sweep as TSV rows `m, delta_m, lower, upper, witness`.
pub fn sweep_tsv(reports: &[ThresholdReport]) -> String {
    let mut out = String::from("#m\tdelta_m\tlower\tupper\twitness\n");
    for r in reports {
        let d = r.delta_m().map_or_else(|| "-".to_string(), |d| d.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.m, d, r.lower, r.upper, r.witness_ray
        ));
    }
    out
}

/// One summand `L_i` of a decomposition `-K_X = sum_i L_i`, quantized at level `m_i`.
#[derive(Clone, Debug)]
pub struct CoupledComponent {
    pub polarization: Polarization,
    pub m: u64,
}

fn check_decomposition(fan: &Fan, parts: &[&Polarization]) -> Result<()> {
    if parts.is_empty() {
        return Err(ToricError::Decomposition("no components".into()));
    }
    for (rho, _) in fan.rays().iter().enumerate() {
        let mut s = Rational::zero();
        for p in parts {
            let a = p.coeffs.get(rho).ok_or_else(|| {
                ToricError::Decomposition(format!("component lacks a coefficient for ray {rho}"))
            })?;
            s += a;
        }
        if !s.is_one() {
            return Err(ToricError::Decomposition(format!(
                "coefficients at ray {rho} sum to {s}, expected 1"
            )));
        }
    }
    Ok(())
}

/// Coupled `delta_m = 1 / max_rho (<sum_i b_{m_i}(P_i), v_rho> + 1)`.
pub fn coupled_delta_m(fan: &Fan, comps: &[CoupledComponent]) -> Result<DeltaT> {
    check_decomposition(fan, &comps.iter().map(|c| &c.polarization).collect::<Vec<_>>())?;
    let mut total = vec![Rational::zero(); fan.dim()];
    for c in comps {
        let pair = PolarizedToric::new(fan.clone(), c.polarization.clone())?;
        let b = Sections::new(&pair, c.m)?.barycenter;
        for (t, x) in total.iter_mut().zip(b) {
            *t += x;
        }
    }
    coupled_from_sum(fan, &total)
}

fn coupled_from_sum(fan: &Fan, total: &[Rational]) -> Result<DeltaT> {
    let per_ray: Vec<Rational> = fan
        .rays()
        .iter()
        .map(|v| v.dot_rational(total) + Rational::one())
        .collect();
    let (value, witness_ray, tied_rays) = minimize_reciprocal(&per_ray)?;
    Ok(DeltaT {
        value,
        witness_ray,
        tied_rays,
        per_ray,
    })
}

/// Limit of the coupled invariant, built from the continuous barycenters.
pub fn coupled_delta_limit(fan: &Fan, parts: &[Polarization]) -> Result<DeltaT> {
    check_decomposition(fan, &parts.iter().collect::<Vec<_>>())?;
    let total = summed_barycenter(fan, parts)?;
    coupled_from_sum(fan, &total)
}

fn summed_barycenter(fan: &Fan, parts: &[Polarization]) -> Result<RationalVector> {
    let mut total = vec![Rational::zero(); fan.dim()];
    for p in parts {
        let pair = PolarizedToric::new(fan.clone(), p.clone())?;
        for (t, x) in total.iter_mut().zip(pair.polytope.barycenter()) {
            *t += x;
        }
    }
    Ok(total)
}

/// A coupled Kähler–Einstein tuple exists iff the barycenters of the `P_i` sum to zero.
pub fn coupled_ke_criterion(fan: &Fan, parts: &[Polarization]) -> Result<bool> {
    check_decomposition(fan, &parts.iter().collect::<Vec<_>>())?;
    Ok(summed_barycenter(fan, parts)?.iter().all(|x| x.is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn p1() -> Fan {
        Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
    }
    fn pn(n: usize) -> Fan {
        let mut rays: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1 } else { 0 }).collect())
            .collect();
        rays.push(vec![-1; n]);
        let cones: Vec<Vec<usize>> = (0..=n)
            .map(|skip| (0..=n).filter(|&j| j != skip).collect())
            .collect();
        Fan::new(
            n,
            rays.iter().map(|r| LatticeVector::from_i64(r)).collect(),
            cones,
        )
        .unwrap()
    }
    fn blp2() -> Fan {
        Fan::from_i64(
            2,
            &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]],
            &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]],
        )
        .unwrap()
    }
    fn val(v: &[i64]) -> ToricValuation {
        ToricValuation::new(v.iter().map(|&x| int(x)).collect()).unwrap()
    }

    #[test]
    fn support_and_discrepancy() {
        let f = pn(2);
        let ones = vec![int(1); 3];
        assert_eq!(support_value(&f, &ones, &val(&[1, 0])), int(1));
        assert_eq!(support_value(&f, &ones, &val(&[1, 1])), int(2));
        assert_eq!(log_discrepancy(&f, &val(&[1, 1])), int(2));
        let half = ToricValuation::new(vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(log_discrepancy(&f, &half), int(1));
        let p = p1();
        assert_eq!(support_value(&p, &[int(1), int(0)], &val(&[-1])), int(0));
        for v in ToricValuation::rays(&blp2()) {
            assert_eq!(log_discrepancy(&blp2(), &v), int(1));
        }
    }

    #[test]
    fn vanishing_orders_on_p1() {
        let pair = PolarizedToric::anticanonical(p1()).unwrap();
        let got: Vec<Rational> = [-1, 0, 1]
            .iter()
            .map(|&u| ord_section(&pair, 1, &LatticeVector::from_i64(&[u]), &val(&[1])).unwrap())
            .collect();
        assert_eq!(got, vec![int(0), int(1), int(2)]);
        let got: Vec<Rational> = [-1, 0, 1]
            .iter()
            .map(|&u| ord_section(&pair, 1, &LatticeVector::from_i64(&[u]), &val(&[-1])).unwrap())
            .collect();
        assert_eq!(got, vec![int(2), int(1), int(0)]);
        assert!(ord_section(&pair, 1, &LatticeVector::from_i64(&[2]), &val(&[1])).is_err());
    }

    #[test]
    fn expected_orders() {
        let pair = PolarizedToric::anticanonical(p1()).unwrap();
        let s = Sections::new(&pair, 1).unwrap();
        assert_eq!(s_m(&pair, &s, &val(&[1])), int(1));
        assert_eq!(s_m_direct(&pair, &s, &val(&[1])), int(1));
        assert_eq!(tau_m(&pair, &s, &val(&[1])), int(2));

        let pair = PolarizedToric::anticanonical(blp2()).unwrap();
        let s = Sections::new(&pair, 1).unwrap();
        assert_eq!(s_m(&pair, &s, &val(&[1, 1])), ratio(11, 9));
        assert_eq!(s_m_direct(&pair, &s, &val(&[1, 1])), ratio(11, 9));
    }

    #[test]
    fn projective_spaces_have_unit_delta() {
        for n in 1..=3 {
            let pair = PolarizedToric::anticanonical(pn(n)).unwrap();
            for m in 1..=5 {
                let r = delta_m_bracket(&pair, m).unwrap();
                assert_eq!(r.delta_m(), Some(&int(1)), "n={n} m={m}");
                let s = Sections::new(&pair, m).unwrap();
                for v in ToricValuation::rays(&pair.fan) {
                    assert_eq!(s_m(&pair, &s, &v), int(1));
                }
            }
        }
    }

    #[test]
    fn blowup_values() {
        let pair = PolarizedToric::anticanonical(blp2()).unwrap();
        let r = delta_m_bracket(&pair, 1).unwrap();
        assert_eq!(r.delta_t, ratio(9, 11));
        assert!(r.exact);
        assert_eq!(r.lower, ratio(9, 11));
        assert_eq!(r.witness_ray, 3);
        assert_eq!(delta_limit(&pair).unwrap().value, ratio(6, 7));
    }

    #[test]
    fn p1_degree_one() {
        let pair = PolarizedToric::new(p1(), Polarization::new(vec![int(0), int(1)])).unwrap();
        for m in 1..=6 {
            let s = Sections::new(&pair, m).unwrap();
            assert_eq!(s.barycenter, vec![ratio(1, 2)]);
            let d = delta_m_t(&pair, &s).unwrap();
            assert_eq!(d.value, int(2));
            assert_eq!(d.tied_rays, vec![0, 1]);
        }
        let r = delta_m_bracket(&pair, 3).unwrap();
        assert_eq!((r.lower.clone(), r.upper.clone(), r.exact), (int(2), int(2), true));
        assert_eq!(delta_limit(&pair).unwrap().value, int(2));
    }

    #[test]
    fn alpha_values() {
        let pair = PolarizedToric::anticanonical(p1()).unwrap();
        assert_eq!(alpha_m_t(&pair, &Sections::new(&pair, 1).unwrap()).unwrap(), ratio(1, 2));
        let pair = PolarizedToric::anticanonical(pn(2)).unwrap();
        assert_eq!(alpha_m_t(&pair, &Sections::new(&pair, 1).unwrap()).unwrap(), ratio(1, 3));
        let pair = PolarizedToric::new(p1(), Polarization::new(vec![int(0), int(1)])).unwrap();
        assert_eq!(alpha_m_t(&pair, &Sections::new(&pair, 2).unwrap()).unwrap(), int(1));
    }

    #[test]
    fn coupled_p1() {
        let f = p1();
        let l1 = Polarization::new(vec![int(0), int(1)]);
        let l2 = Polarization::new(vec![int(1), int(0)]);
        for m in 1..=4 {
            let d = coupled_delta_m(
                &f,
                &[
                    CoupledComponent { polarization: l1.clone(), m },
                    CoupledComponent { polarization: l2.clone(), m },
                ],
            )
            .unwrap();
            assert_eq!(d.value, int(1));
        }
        assert!(coupled_ke_criterion(&f, &[l1.clone(), l2.clone()]).unwrap());
        let half = Polarization::new(vec![ratio(1, 2), ratio(1, 2)]);
        assert!(coupled_ke_criterion(&f, &[half.clone(), half.clone()]).unwrap());
        let d = coupled_delta_m(
            &f,
            &[
                CoupledComponent { polarization: half.clone(), m: 2 },
                CoupledComponent { polarization: half, m: 2 },
            ],
        )
        .unwrap();
        assert_eq!(d.value, int(1));
        let bad = coupled_ke_criterion(&f, &[l1.clone(), l1]);
        assert!(matches!(bad, Err(ToricError::Decomposition(_))));
        // k = 1 reduces to the anticanonical invariant
        let pair = PolarizedToric::anticanonical(blp2()).unwrap();
        let d = coupled_delta_m(
            &pair.fan,
            &[CoupledComponent { polarization: pair.polarization.clone(), m: 1 }],
        )
        .unwrap();
        assert_eq!(d.value, ratio(9, 11));
    }

    #[test]
    fn tsv_rows() {
        let pair = PolarizedToric::anticanonical(blp2()).unwrap();
        let rows: Vec<_> = (1..=3).map(|m| delta_m_bracket(&pair, m).unwrap()).collect();
        let tsv = sweep_tsv(&rows);
        let data: Vec<&str> = tsv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 3);
        assert!(data[0].starts_with("1\t9/11\t"));
    }
}
