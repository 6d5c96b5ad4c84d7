//! Quantized Bergman-space machinery over toric varieties: Fubini–Study potentials,
//! the Hilbert map, quantized Ding functionals, geodesic rays and the balanced iteration.

pub mod basis;
pub mod balanced;
pub mod energy;
pub mod error;
pub mod form;
pub mod potential;
pub mod quadrature;
pub mod ray;

pub use balanced::{balanced_iterate, balanced_threshold, BalancedOptions, BalancedOutcome, BalancedThreshold, ThresholdOptions, TraceEntry};
pub use basis::{lse, tropical_vertices, ReferencePotential, SectionBasis};
pub use energy::{ma_energy, quantized_energy, weighted_energy_e_g_m, CurvePotential, Sech};
pub use error::{BergmanError, Result};
pub use form::{d1_m, energy_e_m, energy_e_m_exact, HermitianForm};
pub use potential::{fs, BergmanPotential, HilbOutput, SupReport, Twist};
pub use quadrature::{integrate, Integral, QuadOptions, Term};
pub use ray::{delta_a_m_estimate, ray_from_valuation, AnalyticEstimate, GeodesicRay, MtOptions, MtThreshold};
