//! Randomized property checks over the shipped corpus, reproducible from a seed.

use std::sync::Arc;

use deltam_bergman::{d1_m, energy_e_m, energy_e_m_exact, fs, HermitianForm, QuadOptions, SectionBasis, Twist};
use deltam_core::input::Input;
use deltam_core::rational::ratio;
use deltam_core::thresholds::{
    alpha_m_t, delta_limit, delta_m_bracket, delta_m_t, log_discrepancy, s_m, Sections, ToricValuation,
};
use deltam_core::{PolarizedToric, Rational};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const CORPUS: [(&str, &str); 6] = [
    ("p1", include_str!("../../../data/p1.json")),
    ("p1_O1", include_str!("../../../data/p1_O1.json")),
    ("p2", include_str!("../../../data/p2.json")),
    ("p3", include_str!("../../../data/p3.json")),
    ("blp2", include_str!("../../../data/blp2.json")),
    ("p1xp1", include_str!("../../../data/p1xp1.json")),
];

pub fn corpus() -> Vec<(&'static str, PolarizedToric)> {
    CORPUS
        .iter()
        .map(|(name, raw)| (*name, Input::parse(raw).and_then(|i| i.polarized()).expect("shipped corpus is valid")))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl Check {
    pub fn status(&self) -> &'static str {
        if self.failures == 0 {
            "pass"
        } else {
            "fail"
        }
    }
}

fn check<F>(name: &'static str, seed: u64, cases: usize, mut case: F) -> Check
where
    F: FnMut(&mut ChaCha8Rng, usize) -> Result<(), String>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_failure = None;
    for i in 0..cases {
        if let Err(e) = case(&mut rng, i) {
            failures += 1;
            first_failure.get_or_insert(format!("case {i}: {e}"));
        }
    }
    Check { name, cases, failures, first_failure }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_diagonal(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> HermitianForm {
    HermitianForm::diagonal((0..d).map(|_| rng.gen_range(-scale..scale)).collect())
}

/// A random element of GL(n, Z) as a product of elementary moves.
pub fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<i64>> {
    let mut a: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    if n == 1 {
        a[0][0] = if rng.gen_bool(0.5) { 1 } else { -1 };
        return a;
    }
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        match rng.gen_range(0..4) {
            0 => a.swap(i, j),
            1 => a[i].iter_mut().for_each(|x| *x = -*x),
            _ => {
                let k = rng.gen_range(-2..=2);
                let rj = a[j].clone();
                for (x, y) in a[i].iter_mut().zip(rj) {
                    *x += k * y;
                }
            }
        }
    }
    a
}

fn cone_point(rng: &mut ChaCha8Rng, pair: &PolarizedToric, cone: &[usize]) -> Vec<Rational> {
    loop {
        let mut v = vec![Rational::zero(); pair.dim()];
        for &r in cone {
            let t = ratio(rng.gen_range(0..30), rng.gen_range(1..9));
            for (x, y) in v.iter_mut().zip(pair.fan.rays()[r].to_rational()) {
                *x += &t * y;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            return v;
        }
    }
}

/// Runs every check with `cases` random cases each.
pub fn run(seed: u64, cases: usize) -> Vec<Check> {
    let corpus = corpus();
    let sections: Vec<(usize, u64, Sections)> = corpus
        .iter()
        .enumerate()
        .flat_map(|(i, (_, p))| (1..=3).map(move |m| (i, m, Sections::new(p, m).expect("corpus levels"))))
        .collect();
    let one_d: Vec<Arc<SectionBasis>> = corpus
        .iter()
        .filter(|(_, p)| p.dim() == 1)
        .flat_map(|(_, p)| (1..=3).map(|m| Arc::new(SectionBasis::new(p, m).expect("corpus levels"))))
        .collect();
    let small: Vec<Arc<SectionBasis>> = corpus
        .iter()
        .flat_map(|(_, p)| {
            let top = if p.dim() == 1 { 4 } else { 2 };
            (1..=top).filter(move |_| p.dim() < 3).map(|m| Arc::new(SectionBasis::new(p, m).expect("corpus levels")))
        })
        .collect();
    let quad = QuadOptions::default();

    vec![
        check("energy_cocycle", seed, cases, |rng, _| {
            let m = rng.gen_range(1..6);
            let d = rng.gen_range(2..12);
            let q: Vec<Vec<Rational>> = (0..3)
                .map(|_| (0..d).map(|_| ratio(rng.gen_range(-50..50), rng.gen_range(1..9))).collect())
                .collect();
            let (h, k, l) = (&q[0], &q[1], &q[2]);
            ensure(energy_e_m_exact(m, h, k) + energy_e_m_exact(m, k, l) == energy_e_m_exact(m, h, l), || {
                "exact cocycle".into()
            })?;
            let (a, b, c) = (random_diagonal(rng, d, 5.0), random_diagonal(rng, d, 5.0), random_diagonal(rng, d, 5.0));
            let gap = energy_e_m(m, &a, &b) + energy_e_m(m, &b, &c) - energy_e_m(m, &a, &c);
            ensure(gap.abs() < 1e-12, || format!("float cocycle gap {gap:e}"))
        }),
        check("d1m_metric", seed.wrapping_add(1), cases, |rng, _| {
            let m = rng.gen_range(1..6);
            let d = rng.gen_range(2..12);
            let (a, b, c) = (random_diagonal(rng, d, 4.0), random_diagonal(rng, d, 4.0), random_diagonal(rng, d, 4.0));
            let (ab, bc, ac) = (d1_m(m, &a, &b), d1_m(m, &b, &c), d1_m(m, &a, &c));
            ensure(ab == d1_m(m, &b, &a), || "symmetry".into())?;
            ensure(d1_m(m, &a, &a) == 0.0 && ab > 0.0, || "identity of indiscernibles".into())?;
            ensure(ac <= ab + bc + 1e-12, || format!("triangle {ac} > {ab} + {bc}"))
        }),
        check("s_m_cone_linearity", seed.wrapping_add(2), cases, |rng, _| {
            let (i, m, sec) = &sections[rng.gen_range(0..sections.len())];
            let pair = &corpus[*i].1;
            let cone = &pair.fan.max_cones()[rng.gen_range(0..pair.fan.max_cones().len())];
            let (v, w) = (cone_point(rng, pair, cone), cone_point(rng, pair, cone));
            let (s, t) = (ratio(rng.gen_range(0..9), 5), ratio(rng.gen_range(1..9), 3));
            let u: Vec<Rational> = v.iter().zip(&w).map(|(a, b)| &s * a + &t * b).collect();
            let val = |x: &[Rational]| ToricValuation::new(x.to_vec()).map_err(|e| e.to_string());
            let (v, w, u) = (val(&v)?, val(&w)?, val(&u)?);
            ensure(s_m(pair, sec, &u) == &s * s_m(pair, sec, &v) + &t * s_m(pair, sec, &w), || {
                format!("S_{m} not linear on a cone of {}", corpus[*i].0)
            })?;
            ensure(
                log_discrepancy(&pair.fan, &u) == &s * log_discrepancy(&pair.fan, &v) + &t * log_discrepancy(&pair.fan, &w),
                || "A not linear on a cone".into(),
            )
        }),
        check("mediant_bound", seed.wrapping_add(3), cases, |rng, _| {
            let (i, m, sec) = &sections[rng.gen_range(0..sections.len())];
            let pair = &corpus[*i].1;
            let d = delta_m_t(pair, sec).map_err(|e| e.to_string())?.value;
            let cone = &pair.fan.max_cones()[rng.gen_range(0..pair.fan.max_cones().len())];
            let (v, w) = (cone_point(rng, pair, cone), cone_point(rng, pair, cone));
            let u: Vec<Rational> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            let ratio_at = |x: &[Rational]| -> Result<Option<Rational>, String> {
                let val = ToricValuation::new(x.to_vec()).map_err(|e| e.to_string())?;
                let s = s_m(pair, sec, &val);
                Ok(s.is_positive().then(|| log_discrepancy(&pair.fan, &val) / s))
            };
            let (rv, rw, ru) = (ratio_at(&v)?, ratio_at(&w)?, ratio_at(&u)?);
            for r in [&rv, &rw, &ru].into_iter().flatten() {
                ensure(r >= &d, || format!("A/S_{m} = {r} below delta_m^T = {d} on {}", corpus[*i].0))?;
            }
            if let (Some(a), Some(b), Some(c)) = (rv, rw, ru) {
                ensure(c >= a.clone().min(b), || "mediant bound".into())?;
            }
            Ok(())
        }),
        check("gl_equivariance", seed.wrapping_add(4), cases, |rng, _| {
            let (name, pair) = &corpus[rng.gen_range(0..corpus.len())];
            let m = if pair.dim() == 3 { rng.gen_range(1..3) } else { rng.gen_range(1..4) };
            let a = random_unimodular(rng, pair.dim());
            let moved = pair.transform(&a).map_err(|e| format!("{name}: {e}"))?;
            let (x, y) = (delta_m_bracket(pair, m), delta_m_bracket(&moved, m));
            let (x, y) = (x.map_err(|e| e.to_string())?, y.map_err(|e| e.to_string())?);
            ensure(x == y, || format!("{name} m={m}: delta_m report changed under {a:?}"))?;
            let (p, q) = (delta_limit(pair).map_err(|e| e.to_string())?, delta_limit(&moved).map_err(|e| e.to_string())?);
            ensure(p == q, || format!("{name}: limit changed under {a:?}"))?;
            let (s, t) = (Sections::new(pair, m), Sections::new(&moved, m));
            let (s, t) = (s.map_err(|e| e.to_string())?, t.map_err(|e| e.to_string())?);
            let (al, bl) = (alpha_m_t(pair, &s), alpha_m_t(&moved, &t));
            ensure(al.map_err(|e| e.to_string())? == bl.map_err(|e| e.to_string())?, || {
                format!("{name} m={m}: alpha changed under {a:?}")
            })
        }),
        check("ding_translation", seed.wrapping_add(5), cases, |rng, _| {
            let b = &one_d[rng.gen_range(0..one_d.len())];
            let form = random_diagonal(rng, b.d(), 3.0);
            let c = rng.gen_range(-10.0..10.0);
            let delta = rng.gen_range(0.1..3.0);
            let f = if rng.gen_bool(0.5) { Twist::zero() } else { Twist::bump(rng.gen_range(-1.0..1.0)) };
            let h = HermitianForm::identity(b.d());
            let ding = |form: HermitianForm| -> Result<f64, String> {
                fs(b, form).and_then(|p| p.ding(&f, delta, &h, &quad)).map_err(|e| e.to_string())
            };
            let (x, y) = (ding(form.clone())?, ding(form.shifted(b.m as f64 * c))?);
            ensure((x - y).abs() < 1e-7 * (1.0 + x.abs()), || format!("F moved from {x} to {y} under +{c}"))
        }),
        check("sup_vs_max_mu", seed.wrapping_add(6), cases, |rng, _| {
            let b = &small[rng.gen_range(0..small.len())];
            let form = random_diagonal(rng, b.d(), 6.0);
            let s = fs(b, form).map_err(|e| e.to_string())?.sup();
            let eps = (b.d() as f64).ln() / b.m as f64;
            ensure(s.raw <= s.max_mu + 1e-9, || format!("sup {} above max mu {}", s.raw, s.max_mu))?;
            ensure(s.max_mu - s.raw <= eps + 1e-9, || format!("gap {} above log(d_m)/m = {eps}", s.max_mu - s.raw))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodular_matrices_have_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            for _ in 0..50 {
                let a = random_unimodular(&mut rng, n);
                let det = match n {
                    1 => a[0][0],
                    2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
                    _ => {
                        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
                    }
                };
                assert_eq!(det.abs(), 1, "{a:?}");
            }
        }
    }

    #[test]
    fn small_run_passes() {
        assert!(run(3, 20).iter().all(|c| c.failures == 0));
    }
}
