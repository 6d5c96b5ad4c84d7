//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rational;

pub type Matrix = Vec<Vec<Rational>>;

/// Row-echelon reduction in place; returns the rank and the determinant sign/scale factor
/// accumulated from row swaps and pivots (only meaningful for square input).
fn eliminate(a: &mut Matrix) -> (usize, Rational) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut det = Rational::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            det = Rational::zero();
            continue;
        };
        if p != r {
            a.swap(p, r);
            det = -det;
        }
        let pivot = a[r][c].clone();
        det = det * &pivot;
        for i in (r + 1)..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &pivot;
            for j in c..cols {
                let t = &f * &a[r][j];
                a[i][j] -= t;
            }
        }
        r += 1;
    }
    (r, det)
}

pub fn rank(a: &Matrix) -> usize {
    let mut m = a.clone();
    eliminate(&mut m).0
}

pub fn det(a: &Matrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let (r, d) = eliminate(&mut m);
    if r < n {
        Rational::zero()
    } else {
        d
    }
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &Matrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    // Gauss-Jordan
    for c in 0..n {
        let p = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(p, c);
        let pivot = aug[c][c].clone();
        for j in c..=n {
            aug[c][j] = &aug[c][j] / &pivot;
        }
        for i in 0..n {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in c..=n {
                    let t = &f * &aug[c][j];
                    aug[i][j] -= t;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<Rational> = (0..n)
            .map(|i| if i == k { Rational::one() } else { Rational::zero() })
            .collect();
        cols.push(solve(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| crate::rational::dot(row, v)).collect()
}
