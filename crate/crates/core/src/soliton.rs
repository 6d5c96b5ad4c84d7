//! Kähler–Ricci soliton vectors: the `xi` for which the `exp(<xi, .>)`-weighted barycenter
//! of the polytope (or of its quantized lattice points) vanishes.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::polytope::{Apex, PolarizedToric};
use crate::rational;
use crate::thresholds::Sections;
use crate::weighted::{self, WeightFunction, WeightedValue};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
const GAUSS_ORDER: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonMode {
    Quantized(u64),
    Continuous,
}

/// Value, gradient and Hessian of a log-partition function.
#[derive(Clone, Debug)]
pub struct LogPartition {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolitonSolution {
    pub xi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub mode: SolitonMode,
}

/// Sample points and weights whose weighted sums realize the objective.
///
/// Quantized: the points `u/m` with unit weights. Continuous: Gauss nodes of a collapsed
/// tensor rule on every simplex of a triangulation, with Jacobian-times-volume weights.
#[derive(Clone, Debug)]
pub struct Measure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Measure {
    pub fn quantized(sections: &Sections) -> Result<Self> {
        let m = sections.m as f64;
        let points: Vec<Vec<f64>> = sections
            .points
            .iter()
            .map(|u| u.to_f64().into_iter().map(|x| x / m).collect())
            .collect();
        let dim = sections.barycenter.len();
        let measure = Measure {
            dim,
            weights: vec![1.0; points.len()],
            points,
        };
        if measure.affine_rank() < dim {
            return Err(ToricError::Rank(format!(
                "lattice points of {}P do not affinely span",
                sections.m
            )));
        }
        Ok(measure)
    }

    pub fn continuous(pair: &PolarizedToric) -> Self {
        let dim = pair.dim();
        let rule = GaussLegendre::new(NonZeroUsize::new(GAUSS_ORDER).expect("nonzero"));
        // nodes on [0, 1]
        let nodes: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
            .collect();
        let simplices: Vec<Vec<Vec<f64>>> = pair
            .polytope
            .triangulate(Apex::VertexAverage)
            .iter()
            .map(|s| {
                s.iter()
                    .map(|p| p.iter().map(rational::to_f64).collect::<Vec<f64>>())
                    .collect::<Vec<_>>()
            })
            .flat_map(|s| barycentric_split(&s))
            .collect();
        let parts: Vec<(Vec<Vec<f64>>, Vec<f64>)> = simplices
            .par_iter()
            .map(|s| collapsed_rule(s, &nodes))
            .collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in parts {
            points.extend(p);
            weights.extend(w);
        }
        Measure {
            dim,
            points,
            weights,
        }
    }

    fn affine_rank(&self) -> usize {
        let base = &self.points[0];
        let rows: Vec<Vec<f64>> = self.points[1..]
            .iter()
            .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        if rows.is_empty() {
            return 0;
        }
        let mat = DMatrix::from_fn(rows.len(), self.dim, |i, j| rows[i][j]);
        mat.rank(1e-9)
    }

    /// `log sum_k w_k exp(<xi, y_k>)` and its first two derivatives.
    pub fn log_partition(&self, xi: &[f64]) -> LogPartition {
        let n = self.dim;
        let exps: Vec<f64> = self.points.iter().map(|y| dot(xi, y)).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut first = DVector::zeros(n);
        let mut second = DMatrix::zeros(n, n);
        for ((y, w), e) in self.points.iter().zip(&self.weights).zip(&exps) {
            let p = w * (e - top).exp();
            z += p;
            let yv = DVector::from_column_slice(y);
            first += &yv * p;
            second += &yv * yv.transpose() * p;
        }
        let gradient = first / z;
        let hessian = second / z - &gradient * gradient.transpose();
        LogPartition {
            value: z.ln() + top,
            gradient,
            hessian,
        }
    }
}

/// Mean of the quantized sample points.
pub fn log_partition(measure: &Measure, xi: &[f64]) -> LogPartition {
    measure.log_partition(xi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn barycentric_split(s: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let k = s.len() as f64;
    let c: Vec<f64> = (0..s[0].len())
        .map(|j| s.iter().map(|p| p[j]).sum::<f64>() / k)
        .collect();
    (0..s.len())
        .map(|skip| {
            let mut t = s.to_vec();
            t[skip] = c.clone();
            t
        })
        .collect()
}

fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// Collapsed (Duffy) tensor Gauss rule on one simplex.
fn collapsed_rule(s: &[Vec<f64>], nodes: &[(f64, f64)]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = s.len() - 1;
    let edges: Vec<Vec<f64>> = s[1..]
        .iter()
        .map(|p| p.iter().zip(&s[0]).map(|(a, b)| a - b).collect())
        .collect();
    // n! vol = |det|
    let scale = det(&edges).abs();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let total = nodes.len().pow(n as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut t = Vec::with_capacity(n);
        let mut w = scale;
        for _ in 0..n {
            let (x, wx) = nodes[idx % nodes.len()];
            idx /= nodes.len();
            t.push(x);
            w *= wx;
        }
        let mut lambda = vec![0.0; n];
        let mut remain = 1.0;
        for k in 0..n {
            lambda[k] = remain * t[k];
            if k + 1 < n {
                w *= (1.0 - t[k]).powi((n - 1 - k) as i32);
            }
            remain *= 1.0 - t[k];
        }
        let y: Vec<f64> = (0..s[0].len())
            .map(|j| s[0][j] + (0..n).map(|k| lambda[k] * edges[k][j]).sum::<f64>())
            .collect();
        points.push(y);
        weights.push(w);
    }
    (points, weights)
}

/// Finds `xi` with vanishing weighted barycenter by damped Newton from `xi = 0`.
pub fn solve_soliton_vector(
    pair: &PolarizedToric,
    mode: SolitonMode,
    tol: f64,
) -> Result<SolitonSolution> {
    if pair.polarization.coeffs.iter().any(|a| !a.is_positive()) {
        return Err(ToricError::NoSolitonVector(
            "the origin is not an interior point of the polytope".into(),
        ));
    }
    let measure = match mode {
        SolitonMode::Quantized(m) => Measure::quantized(&Sections::new(pair, m)?)?,
        SolitonMode::Continuous => Measure::continuous(pair),
    };
    let (xi, residual, iterations) = newton(&measure, tol)?;
    Ok(SolitonSolution {
        xi,
        residual,
        iterations,
        mode,
    })
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn newton(measure: &Measure, tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let n = measure.dim;
    let mut xi = DVector::zeros(n);
    let mut cur = measure.log_partition(xi.as_slice());
    let mut trace = Vec::new();
    for it in 0..=MAX_ITERATIONS {
        let res = sup_norm(&cur.gradient);
        trace.push((it, res));
        if res < tol {
            return Ok((xi.iter().copied().collect(), res, it));
        }
        if it == MAX_ITERATIONS {
            break;
        }
        let chol = cur.hessian.clone().cholesky().ok_or_else(|| {
            ToricError::Rank("log-partition Hessian is not positive definite".into())
        })?;
        let step = chol.solve(&(-&cur.gradient));
        let slope = cur.gradient.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &xi + &step * t;
            let next = measure.log_partition(trial.as_slice());
            if next.value <= cur.value + 1e-4 * t * slope || sup_norm(&next.gradient) < res {
                accepted = Some((trial, next));
                break;
            }
            t /= 2.0;
        }
        match accepted {
            Some((x, next)) => {
                xi = x;
                cur = next;
            }
            None => break,
        }
    }
    Err(ToricError::NonConvergence {
        iterations: trace.len() - 1,
        residual: sup_norm(&cur.gradient),
        trace,
    })
}

/// `delta^g_m` for the quantized soliton weight at level `m`.
pub fn delta_g_at_soliton(pair: &PolarizedToric, m: u64, tol: f64) -> Result<(SolitonSolution, f64)> {
    let sol = solve_soliton_vector(pair, SolitonMode::Quantized(m), tol)?;
    let sections = Sections::new(pair, m)?;
    let g = WeightFunction::Exponential(sol.xi.clone());
    let d = weighted::delta_g_m(pair, &sections, &g, weighted::DEFAULT_PRECISION)?;
    let value = match d.value {
        WeightedValue::Exact(r) => rational::to_f64(&r),
        WeightedValue::Approx(f) => f.to_f64(),
    };
    Ok((sol, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::Fan;
    use crate::polytope::Polarization;
    use crate::rational::{int, to_f64};

    fn blp2() -> PolarizedToric {
        PolarizedToric::anticanonical(
            Fan::from_i64(
                2,
                &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]],
                &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]],
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn p1() -> Fan {
        Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
    }

    #[test]
    fn gradient_at_zero_is_barycenter() {
        let pair = blp2();
        let s = Sections::new(&pair, 3).unwrap();
        let q = Measure::quantized(&s).unwrap().log_partition(&[0.0, 0.0]);
        for j in 0..2 {
            assert!((q.gradient[j] - to_f64(&s.barycenter[j])).abs() < 1e-15);
        }
        let c = Measure::continuous(&pair).log_partition(&[0.0, 0.0]);
        assert!((c.gradient[0] - 1.0 / 12.0).abs() < 1e-14);
        assert!((c.gradient[1] - 1.0 / 12.0).abs() < 1e-14);
        assert!((c.value - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn interval_continuous_matches_closed_form() {
        let pair = PolarizedToric::anticanonical(p1()).unwrap();
        let meas = Measure::continuous(&pair);
        assert!(meas.log_partition(&[0.0]).gradient[0].abs() < 1e-15);
        let xi = 0.7f64;
        let exact = ((xi.exp() - (-xi).exp()) / xi).ln();
        assert!((meas.log_partition(&[xi]).value - exact).abs() < 1e-13);
    }

    #[test]
    fn simplex_moments_three_dim() {
        // standard P^3 simplex: volume 32/3, barycenter 0
        let rays: Vec<crate::fan::LatticeVector> = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]
            .iter()
            .map(|r| crate::fan::LatticeVector::from_i64(r))
            .collect();
        let cones = (0..4).map(|s| (0..4).filter(|&j| j != s).collect()).collect();
        let pair = PolarizedToric::anticanonical(Fan::new(3, rays, cones).unwrap()).unwrap();
        let lp = Measure::continuous(&pair).log_partition(&[0.0, 0.0, 0.0]);
        assert!((lp.value - (32.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(lp.gradient.iter().all(|g| g.abs() < 1e-13));
    }

    #[test]
    fn symmetric_polytopes_give_zero() {
        let pair = PolarizedToric::anticanonical(p1()).unwrap();
        for mode in [SolitonMode::Continuous, SolitonMode::Quantized(3)] {
            let s = solve_soliton_vector(&pair, mode, DEFAULT_TOL).unwrap();
            assert_eq!(s.iterations, 0);
            assert_eq!(s.xi, vec![0.0]);
        }
    }

    #[test]
    fn blowup_soliton() {
        let pair = blp2();
        let s = solve_soliton_vector(&pair, SolitonMode::Continuous, DEFAULT_TOL).unwrap();
        assert!(s.residual < 1e-12);
        assert!(s.xi[0] < 0.0);
        assert!((s.xi[0] - s.xi[1]).abs() < 1e-12);
        let (_, d) = delta_g_at_soliton(&pair, 1, DEFAULT_TOL).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn origin_outside_interior() {
        let pair = PolarizedToric::new(p1(), Polarization::new(vec![int(0), int(1)])).unwrap();
        assert!(matches!(
            solve_soliton_vector(&pair, SolitonMode::Continuous, DEFAULT_TOL),
            Err(ToricError::NoSolitonVector(_))
        ));
    }
}
