#![allow(dead_code)]

use deltam_core::{Fan, LatticeVector, PolarizedToric};

pub fn fan(dim: usize, rays: &[&[i64]], cones: &[&[usize]]) -> Fan {
    Fan::new(
        dim,
        rays.iter().map(|r| LatticeVector::from_i64(r)).collect(),
        cones.iter().map(|c| c.to_vec()).collect(),
    )
    .unwrap()
}

pub fn pn(n: usize) -> Fan {
    let mut rays: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    rays.push(vec![-1; n]);
    let cones = (0..=n)
        .map(|s| (0..=n).filter(|&j| j != s).collect())
        .collect();
    Fan::new(n, rays.iter().map(|r| LatticeVector::from_i64(r)).collect(), cones).unwrap()
}

pub fn p1() -> Fan {
    pn(1)
}

pub fn blp2() -> Fan {
    fan(
        2,
        &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]],
        &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]],
    )
}

pub fn p1xp1() -> Fan {
    fan(
        2,
        &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]],
        &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
    )
}

/// P^2 blown up at two torus-fixed points.
pub fn dp7() -> Fan {
    fan(
        2,
        &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1]],
        &[&[0, 1], &[1, 2], &[2, 3], &[3, 4], &[4, 0]],
    )
}

/// P^2 blown up at three torus-fixed points.
pub fn dp6() -> Fan {
    fan(
        2,
        &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1], &[0, -1]],
        &[&[0, 1], &[1, 2], &[2, 3], &[3, 4], &[4, 5], &[5, 0]],
    )
}

/// P^1 x P^1 x P^1.
pub fn p1cubed() -> Fan {
    let rays: Vec<Vec<i64>> = vec![
        vec![1, 0, 0],
        vec![-1, 0, 0],
        vec![0, 1, 0],
        vec![0, -1, 0],
        vec![0, 0, 1],
        vec![0, 0, -1],
    ];
    let mut cones = Vec::new();
    for a in [0, 1] {
        for b in [2, 3] {
            for c in [4, 5] {
                cones.push(vec![a, b, c]);
            }
        }
    }
    Fan::new(3, rays.iter().map(|r| LatticeVector::from_i64(r)).collect(), cones).unwrap()
}

pub fn fano_corpus() -> Vec<(&'static str, Fan)> {
    vec![
        ("P1", p1()),
        ("P2", pn(2)),
        ("P3", pn(3)),
        ("Bl_pP2", blp2()),
        ("P1xP1", p1xp1()),
        ("dP7", dp7()),
        ("dP6", dp6()),
        ("P1^3", p1cubed()),
    ]
}

pub fn anticanonical(f: Fan) -> PolarizedToric {
    PolarizedToric::anticanonical(f).unwrap()
}
