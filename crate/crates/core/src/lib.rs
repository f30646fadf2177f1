//! Pseudo-spectral simulation of one-dimensional dispersive shallow-water
//! models (nonlinear shallow water, Serre-Green-Naghdi, abcd-Boussinesq) on
//! the periodic circle, instrumented for finite-time blow-up detection:
//! pointwise jet ODE reductions, analytic-norm energies on shrinking strips,
//! singular weighted functionals, and sign-change criteria.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`];
//! concrete `f64` aliases are exported at the crate root.

pub mod diagnostics;
pub mod models;
pub mod reduction;
pub mod scalar;
pub mod scenarios;
pub mod spectral;
pub mod stepping;

pub use scalar::Real;

pub type Field64 = spectral::SpectralField<f64>;
pub type Grid64 = spectral::GridField<f64>;
pub type Params64 = models::ModelParams<f64>;
pub type State64 = models::ModelState<f64>;
pub type Jet64 = reduction::PointJet<f64>;
pub type JetState64 = reduction::JetState<f64>;
