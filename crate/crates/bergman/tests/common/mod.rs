#![allow(dead_code)]

use std::sync::Arc;

use deltam_bergman::SectionBasis;
use deltam_core::rational::int;
use deltam_core::{Fan, Polarization, PolarizedToric};

pub fn p1() -> Fan {
    Fan::from_i64(1, &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
}

pub fn p2() -> Fan {
    Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[2, 0]]).unwrap()
}

pub fn blp2() -> Fan {
    Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]], &[&[0, 3], &[3, 1], &[1, 2], &[2, 0]]).unwrap()
}

pub fn p1xp1() -> Fan {
    Fan::from_i64(2, &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]], &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]]).unwrap()
}

pub fn dp7() -> Fan {
    Fan::from_i64(
        2,
        &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1]],
        &[&[0, 1], &[1, 2], &[2, 3], &[3, 4], &[4, 0]],
    )
    .unwrap()
}

pub fn anti(f: Fan) -> PolarizedToric {
    PolarizedToric::anticanonical(f).unwrap()
}

/// P^1 with moment polytope [0, 1].
pub fn interval() -> PolarizedToric {
    PolarizedToric::new(p1(), Polarization::new(vec![int(0), int(1)])).unwrap()
}

pub fn basis(pair: &PolarizedToric, m: u64) -> Arc<SectionBasis> {
    Arc::new(SectionBasis::new(pair, m).unwrap())
}

pub fn corpus() -> Vec<(&'static str, PolarizedToric)> {
    vec![
        ("P1", anti(p1())),
        ("P1 [0,1]", interval()),
        ("P2", anti(p2())),
        ("Bl_p P2", anti(blp2())),
        ("P1xP1", anti(p1xp1())),
        ("dP7", anti(dp7())),
    ]
}
