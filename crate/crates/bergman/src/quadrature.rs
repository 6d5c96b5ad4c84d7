//! Adaptive tensor Gauss–Legendre quadrature on `R^n`.
//!
//! Each axis is cut at caller-supplied hint points (kinks of the tropical envelopes of the
//! integrand) with cells graded away from every hint, and the two unbounded ends are
//! compactified by `x = a ± s p / (1 - p)`, `p in [0, 1)`. Cells are refined by bisection of
//! every axis, guided by the gap between two Gauss rules of different order. Integrands
//! return log-magnitudes so values spanning hundreds of orders of magnitude stay finite.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{BergmanError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Relative tolerance per component.
    pub tol: f64,
    pub order: usize,
    pub max_cells: usize,
    /// Cap on the width of initial finite cells.
    pub max_width: f64,
    pub tail_scale: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: 1e-9,
            order: 10,
            max_cells: 400_000,
            max_width: f64::INFINITY,
            tail_scale: 4.0,
        }
    }
}

/// A signed value `factor * exp(log)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub log: f64,
    pub factor: f64,
}

impl Term {
    pub fn positive(log: f64) -> Term {
        Term { log, factor: 1.0 }
    }

    pub fn new(log: f64, factor: f64) -> Term {
        Term { log, factor }
    }

    pub fn zero() -> Term {
        Term {
            log: f64::NEG_INFINITY,
            factor: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
    /// Largest estimated relative error over components.
    pub rel_error: f64,
    pub cells: usize,
}

impl Integral {
    pub fn value(&self, k: usize) -> f64 {
        self.sign[k] * self.log_abs[k].exp()
    }

    /// Log of a component known to be positive.
    pub fn log(&self, k: usize) -> f64 {
        debug_assert!(self.sign[k] > 0.0);
        self.log_abs[k]
    }

    /// Component `k` as a multiple of `exp(shift)`.
    pub fn scaled(&self, k: usize, shift: f64) -> f64 {
        self.sign[k] * (self.log_abs[k] - shift).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Finite,
    Upper(f64),
    Lower(f64),
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    kind: Kind,
    p0: f64,
    p1: f64,
}

impl Piece {
    fn map(&self, p: f64, scale: f64) -> (f64, f64) {
        match self.kind {
            Kind::Finite => (p, 1.0),
            Kind::Upper(a) => (a + scale * p / (1.0 - p), scale / ((1.0 - p) * (1.0 - p))),
            Kind::Lower(a) => (a - scale * p / (1.0 - p), scale / ((1.0 - p) * (1.0 - p))),
        }
    }

    fn halves(&self) -> [Piece; 2] {
        let mid = 0.5 * (self.p0 + self.p1);
        [
            Piece { p1: mid, ..*self },
            Piece { p0: mid, ..*self },
        ]
    }
}

fn graded_cuts(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    // cut points strictly inside (a, b), widths 1, 1, 2, 4, ... from both ends
    let mid = 0.5 * (a + b);
    let mut cuts = Vec::new();
    let mut w = 1.0;
    let mut x = a + 1.0;
    while x < mid {
        cuts.push(x);
        x += w;
        w *= 2.0;
    }
    let mut w = 1.0;
    let mut x = b - 1.0;
    while x > mid {
        cuts.push(x);
        x -= w;
        w *= 2.0;
    }
    cuts.push(mid);
    cuts.retain(|&c| c > a && c < b);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut full = vec![a];
    full.extend(cuts);
    full.push(b);
    let mut out = Vec::new();
    for win in full.windows(2) {
        let k = ((win[1] - win[0]) / max_width).ceil().max(1.0) as usize;
        for j in 1..k {
            out.push(win[0] + (win[1] - win[0]) * j as f64 / k as f64);
        }
        out.push(win[1]);
    }
    out.pop();
    out
}

fn axis_pieces(hints: &[f64], max_width: f64) -> Vec<Piece> {
    let mut h: Vec<f64> = hints.iter().copied().filter(|x| x.is_finite()).collect();
    if h.is_empty() {
        h.push(0.0);
    }
    h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    h.dedup_by(|a, b| (*a - *b).abs() < 0.5);
    let lo = h[0] - 2.0;
    let hi = h[h.len() - 1] + 2.0;
    let mut pts = vec![lo, lo + 1.0];
    for (i, &x) in h.iter().enumerate() {
        if i > 0 {
            let a = h[i - 1];
            pts.extend(graded_cuts(a, x, max_width).into_iter().filter(|&c| c > a));
        }
        pts.push(x);
    }
    pts.push(hi - 1.0);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut pieces = vec![
        Piece { kind: Kind::Lower(lo), p0: 0.5, p1: 1.0 },
        Piece { kind: Kind::Lower(lo), p0: 0.0, p1: 0.5 },
    ];
    for w in pts.windows(2) {
        pieces.push(Piece { kind: Kind::Finite, p0: w[0], p1: w[1] });
    }
    pieces.push(Piece { kind: Kind::Upper(hi), p0: 0.0, p1: 0.5 });
    pieces.push(Piece { kind: Kind::Upper(hi), p0: 0.5, p1: 1.0 });
    pieces
}

struct Rules {
    high: Vec<(f64, f64)>,
    low: Vec<(f64, f64)>,
}

impl Rules {
    fn new(order: usize) -> Rules {
        let make = |q: usize| {
            GaussLegendre::new(NonZeroUsize::new(q).expect("positive order"))
                .as_node_weight_pairs()
                .to_vec()
        };
        Rules {
            high: make(order),
            low: make(order.saturating_sub(3).max(2)),
        }
    }
}

/// Per-cell estimate in units of `exp(shift[k])`.
#[derive(Clone, Debug)]
struct Cell {
    pieces: Vec<Piece>,
    shift: Vec<f64>,
    est: Vec<f64>,
    abs: Vec<f64>,
    err: Vec<f64>,
}

fn eval_rule<F>(pieces: &[Piece], rule: &[(f64, f64)], scale: f64, f: &F, comps: usize) -> (Vec<Vec<Term>>, Vec<f64>)
where
    F: Fn(&[f64]) -> Vec<Term> + Sync,
{
    let n = pieces.len();
    let q = rule.len();
    let total = q.pow(n as u32);
    let mut terms = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut idx = flat;
        let mut w = 1.0;
        for (j, pc) in pieces.iter().enumerate() {
            let (t, wt) = rule[idx % q];
            idx /= q;
            let half = 0.5 * (pc.p1 - pc.p0);
            let p = pc.p0 + half * (t + 1.0);
            let (xj, jac) = pc.map(p, scale);
            x[j] = xj;
            w *= wt * half * jac;
        }
        if w == 0.0 || !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        let vals = f(&x);
        debug_assert_eq!(vals.len(), comps);
        terms.push(vals);
        weights.push(w);
    }
    (terms, weights)
}

fn evaluate_cell<F>(pieces: Vec<Piece>, rules: &Rules, scale: f64, f: &F, comps: usize) -> Cell
where
    F: Fn(&[f64]) -> Vec<Term> + Sync,
{
    let (th, wh) = eval_rule(&pieces, &rules.high, scale, f, comps);
    let (tl, wl) = eval_rule(&pieces, &rules.low, scale, f, comps);
    let mut shift = vec![f64::NEG_INFINITY; comps];
    for t in th.iter().chain(tl.iter()) {
        for (s, v) in shift.iter_mut().zip(t) {
            if v.factor != 0.0 && v.log > *s {
                *s = v.log;
            }
        }
    }
    let mut est = vec![0.0; comps];
    let mut abs = vec![0.0; comps];
    let mut low = vec![0.0; comps];
    for (t, w) in th.iter().zip(&wh) {
        for k in 0..comps {
            if t[k].factor != 0.0 {
                let e = w * (t[k].log - shift[k]).exp();
                est[k] += e * t[k].factor;
                abs[k] += e * t[k].factor.abs();
            }
        }
    }
    for (t, w) in tl.iter().zip(&wl) {
        for k in 0..comps {
            if t[k].factor != 0.0 {
                low[k] += w * (t[k].log - shift[k]).exp() * t[k].factor;
            }
        }
    }
    let err = est.iter().zip(&low).map(|(a, b)| (a - b).abs()).collect();
    Cell {
        pieces,
        shift,
        est,
        abs,
        err,
    }
}

fn children(pieces: &[Piece]) -> Vec<Vec<Piece>> {
    let mut out = vec![Vec::new()];
    for p in pieces {
        let [a, b] = p.halves();
        let mut next = Vec::with_capacity(out.len() * 2);
        for c in out {
            let mut ca = c.clone();
            ca.push(a);
            let mut cb = c;
            cb.push(b);
            next.push(ca);
            next.push(cb);
        }
        out = next;
    }
    out
}

/// Integrates the `comps` components returned by `f` over `R^n`.
pub fn integrate<F>(hints: &[Vec<f64>], comps: usize, opts: &QuadOptions, f: F) -> Result<Integral>
where
    F: Fn(&[f64]) -> Vec<Term> + Sync,
{
    integrate_relative(hints, comps, None, opts, f)
}

/// As [`integrate`], but the error of component `k` may be measured against
/// `sqrt(|I_a| |I_b|)` for `scales[k] = (a, b)`, e.g. off-diagonal Gram entries
/// against the diagonal.
pub fn integrate_relative<F>(
    hints: &[Vec<f64>],
    comps: usize,
    scales: Option<&[(usize, usize)]>,
    opts: &QuadOptions,
    f: F,
) -> Result<Integral>
where
    F: Fn(&[f64]) -> Vec<Term> + Sync,
{
    let rules = Rules::new(opts.order);
    let axes: Vec<Vec<Piece>> = hints.iter().map(|h| axis_pieces(h, opts.max_width)).collect();
    let mut initial: Vec<Vec<Piece>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::new();
        for c in &initial {
            for p in axis {
                let mut cc = c.clone();
                cc.push(*p);
                next.push(cc);
            }
        }
        initial = next;
    }
    let mut cells: Vec<Cell> = initial
        .into_par_iter()
        .map(|p| evaluate_cell(p, &rules, opts.tail_scale, &f, comps))
        .collect();

    loop {
        let mut shift = vec![f64::NEG_INFINITY; comps];
        for c in &cells {
            for k in 0..comps {
                if c.abs[k] > 0.0 && c.shift[k] > shift[k] {
                    shift[k] = c.shift[k];
                }
            }
        }
        let mut total = vec![0.0; comps];
        let mut total_abs = vec![0.0; comps];
        let mut total_err = vec![0.0; comps];
        for c in &cells {
            for k in 0..comps {
                if c.abs[k] > 0.0 {
                    let s = (c.shift[k] - shift[k]).exp();
                    total[k] += c.est[k] * s;
                    total_abs[k] += c.abs[k] * s;
                    total_err[k] += c.err[k] * s;
                }
            }
        }
        // denominators in the common shift of component k
        let denom: Vec<f64> = (0..comps)
            .map(|k| match scales {
                Some(sc) => {
                    let (a, b) = sc[k];
                    let ga = 0.5 * (total_abs[a].ln() + shift[a] + total_abs[b].ln() + shift[b]) - shift[k];
                    total_abs[k].max(ga.exp())
                }
                None => total_abs[k],
            })
            .collect();
        let rel = (0..comps)
            .filter(|&k| denom[k] > 0.0 && total_abs[k] > 0.0)
            .map(|k| total_err[k] / denom[k])
            .fold(0.0, f64::max);
        if rel <= opts.tol || cells.len() >= opts.max_cells {
            if rel > opts.tol {
                return Err(BergmanError::Quadrature {
                    achieved: rel,
                    tol: opts.tol,
                });
            }
            let log_abs = (0..comps)
                .map(|k| {
                    if total[k] == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        total[k].abs().ln() + shift[k]
                    }
                })
                .collect();
            let sign = total.iter().map(|t| if *t < 0.0 { -1.0 } else { 1.0 }).collect();
            return Ok(Integral {
                log_abs,
                sign,
                rel_error: rel,
                cells: cells.len(),
            });
        }
        // refine the worst quarter of cells
        let score = |c: &Cell| -> f64 {
            (0..comps)
                .filter(|&k| denom[k] > 0.0 && total_abs[k] > 0.0 && c.abs[k] > 0.0)
                .map(|k| c.err[k] * (c.shift[k] - shift[k]).exp() / denom[k])
                .fold(0.0, f64::max)
        };
        let mut scored: Vec<(f64, usize)> = cells.iter().enumerate().map(|(i, c)| (score(c), i)).collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let budget = opts.tol / 4.0;
        let take = scored
            .iter()
            .take_while(|(s, _)| *s > budget / cells.len() as f64)
            .count()
            .clamp(1, (cells.len() / 4).max(1));
        let mut chosen: Vec<usize> = scored[..take].iter().map(|&(_, i)| i).collect();
        chosen.sort_unstable_by(|a, b| b.cmp(a));
        let parents: Vec<Cell> = chosen.iter().map(|&i| cells.swap_remove(i)).collect();
        let fresh: Vec<Cell> = parents
            .par_iter()
            .flat_map_iter(|c| children(&c.pieces))
            .map(|p| evaluate_cell(p, &rules, opts.tail_scale, &f, comps))
            .collect();
        cells.extend(fresh);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_and_laplace() {
        let opts = QuadOptions::default();
        let r = integrate(&[vec![0.0]], 2, &opts, |x| {
            vec![Term::positive(-x[0] * x[0]), Term::positive(-x[0].abs())]
        })
        .unwrap();
        assert!((r.value(0) - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        assert!((r.value(1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn far_kink_with_huge_scale() {
        // integrand exp(-|x - 5000|) / 2 has mass 1 far from the origin
        let opts = QuadOptions::default();
        let r = integrate(&[vec![0.0, 5000.0]], 1, &opts, |x| {
            vec![Term::positive(-(x[0] - 5000.0).abs() - 2f64.ln() + 800.0)]
        })
        .unwrap();
        assert!((r.log(0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn signed_two_dimensional() {
        let opts = QuadOptions { max_width: 2.0, ..QuadOptions::default() };
        let r = integrate(&[vec![0.0], vec![0.0]], 1, &opts, |x| {
            let v = x[0] * (-x[0] * x[0] - x[1] * x[1]).exp();
            let w = (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp();
            let s = v + w;
            vec![Term::new(s.abs().ln(), s.signum())]
        })
        .unwrap();
        let expect = std::f64::consts::PI / 2f64.sqrt();
        assert!((r.value(0) - expect).abs() < 1e-8, "{}", r.value(0));
    }
}
