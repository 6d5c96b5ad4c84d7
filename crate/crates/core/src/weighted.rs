//! `g`-weighted expected vanishing orders and thresholds.
//!
//! Exponential weights `g(y) = exp(<xi, y>)` are irrational, so they are evaluated in
//! `rug::Float` at a configurable precision. The constant weight is routed through the
//! exact rational path.


use rug::Float;

use crate::error::{Result, ToricError};
use crate::polytope::PolarizedToric;
use crate::rational::Rational;
use crate::thresholds::{self, support_value, Sections, ToricValuation};

pub const DEFAULT_PRECISION: u32 = 128;

#[derive(Clone, Debug, PartialEq)]
pub enum WeightFunction {
    Constant,
    Exponential(Vec<f64>),
}

impl WeightFunction {
    pub fn exponential(xi: Vec<f64>) -> Self {
        WeightFunction::Exponential(xi)
    }

    /// `g(y)` in double precision.
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            WeightFunction::Constant => 1.0,
            WeightFunction::Exponential(xi) => xi.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().exp(),
        }
    }
}

/// Either an exact value (constant weight) or an extended-precision one.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightedValue {
    Exact(Rational),
    Approx(Float),
}

impl WeightedValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            WeightedValue::Exact(r) => crate::rational::to_f64(r),
            WeightedValue::Approx(f) => f.to_f64(),
        }
    }
}

pub fn rational_to_float(r: &Rational, prec: u32) -> Float {
    let q = rug::Rational::from((
        rug::Integer::from_str_radix(&r.numer().to_string(), 10).expect("integer"),
        rug::Integer::from_str_radix(&r.denom().to_string(), 10).expect("integer"),
    ));
    Float::with_val(prec, &q)
}

/// Weighted quantized barycenter `sum g(u/m) u / (m sum g(u/m))`.
pub fn weighted_barycenter(sections: &Sections, xi: &[f64], prec: u32) -> Vec<Float> {
    let m = sections.m as f64;
    let xi: Vec<Float> = xi.iter().map(|&x| Float::with_val(prec, x)).collect();
    let exps: Vec<Float> = sections
        .points
        .iter()
        .map(|u| {
            let mut s = Float::with_val(prec, 0);
            for (x, c) in xi.iter().zip(&u.0) {
                s += Float::with_val(prec, x * rational_to_float(&Rational::from(c.clone()), prec));
            }
            s / m
        })
        .collect();
    let top = exps
        .iter()
        .cloned()
        .reduce(|a, b| if b > a { b } else { a })
        .expect("nonempty");
    let weights: Vec<Float> = exps.into_iter().map(|e| (e - &top).exp()).collect();
    let total = weights.iter().fold(Float::with_val(prec, 0), |acc, w| acc + w);
    let n = sections.barycenter.len();
    (0..n)
        .map(|j| {
            let mut s = Float::with_val(prec, 0);
            for (w, u) in weights.iter().zip(&sections.points) {
                s += Float::with_val(prec, w * rational_to_float(&Rational::from(u.0[j].clone()), prec));
            }
            s / &total / m
        })
        .collect()
}

/// `S^g_m(v) = <b^g_m, v> + phi_L(v)`.
pub fn weighted_s_m(
    pair: &PolarizedToric,
    sections: &Sections,
    v: &ToricValuation,
    g: &WeightFunction,
    prec: u32,
) -> WeightedValue {
    match g {
        WeightFunction::Constant => WeightedValue::Exact(thresholds::s_m(pair, sections, v)),
        WeightFunction::Exponential(xi) => {
            let b = weighted_barycenter(sections, xi, prec);
            WeightedValue::Approx(pair_value(pair, &b, v, prec))
        }
    }
}

fn pair_value(pair: &PolarizedToric, b: &[Float], v: &ToricValuation, prec: u32) -> Float {
    let mut s = rational_to_float(&support_value(&pair.fan, &pair.polarization.coeffs, v), prec);
    for (bj, vj) in b.iter().zip(&v.v) {
        s += Float::with_val(prec, bj * rational_to_float(vj, prec));
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaG {
    pub value: WeightedValue,
    pub witness_ray: usize,
    pub per_ray: Vec<WeightedValue>,
}

/// `delta^g_m = min_rho A(v_rho) / S^g_m(v_rho)`.
pub fn delta_g_m(
    pair: &PolarizedToric,
    sections: &Sections,
    g: &WeightFunction,
    prec: u32,
) -> Result<DeltaG> {
    match g {
        WeightFunction::Constant => {
            let d = thresholds::delta_m_t(pair, sections)?;
            Ok(DeltaG {
                value: WeightedValue::Exact(d.value),
                witness_ray: d.witness_ray,
                per_ray: d.per_ray.into_iter().map(WeightedValue::Exact).collect(),
            })
        }
        WeightFunction::Exponential(xi) => {
            let b = weighted_barycenter(sections, xi, prec);
            let per: Vec<Float> = ToricValuation::rays(&pair.fan)
                .iter()
                .map(|v| pair_value(pair, &b, v, prec))
                .collect();
            let mut best: Option<usize> = None;
            for (i, s) in per.iter().enumerate() {
                if s.is_sign_positive() && !s.is_zero() && best.is_none_or(|j| *s > per[j]) {
                    best = Some(i);
                }
            }
            let i = best.ok_or(ToricError::TrivialPolarization)?;
            let value = Float::with_val(prec, 1) / &per[i];
            Ok(DeltaG {
                value: WeightedValue::Approx(value),
                witness_ray: i,
                per_ray: per.into_iter().map(WeightedValue::Approx).collect(),
            })
        }
    }
}
