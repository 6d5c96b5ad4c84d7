//! Exact stability thresholds for polarized toric Fano manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`fan`], [`polytope`] hold the exact combinatorics (fans, walls, moment polytopes,
//!   lattice points, barycenters, volumes, nef thresholds);
//! * [`thresholds`] computes valuative data and the `delta_m` family of invariants;
//! * [`weighted`] carries the `g`-weighted variants in extended precision;
//! * [`soliton`] solves for the Kähler–Ricci soliton vector;
//! * [`input`] parses the JSON fan/polarization format.
//!
//! All exact quantities are [`rational::Rational`]s.

pub mod error;
pub mod fan;
pub mod input;
pub mod linalg;
pub mod polytope;
pub mod rational;
pub mod soliton;
pub mod thresholds;
pub mod weighted;

pub use error::{Result, ToricError};
pub use fan::{is_nef, validate_fan, Fan, LatticeVector, NefCheck, ValidationReport, Violation, Wall};
pub use polytope::{
    nef_threshold, polytope, quantized_barycenter, MomentPolytope, NefThreshold, Polarization,
    PolarizedToric,
};
pub use rational::{format_rational, parse_rational, Rational, RationalVector};
