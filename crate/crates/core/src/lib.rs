//! Fractional Sobolev trace inequalities on the half-space: sharp constants,
//! Poisson and non-Poisson extensions, affine L^p energies and brute-force
//! oracles, generic over `f32`/`f64` through [`Real`].

// `!(x > 0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Series coefficients are kept at the digits they were published with.
#![allow(clippy::excessive_precision)]

pub mod affine;
pub mod constants;
pub mod error;
pub mod extension;
pub mod inequalities;
pub mod oracle;
pub mod quadrature;
pub mod real;
pub mod sampling;
pub mod search;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision aliases for the generic types.
pub type Params = constants::Params<f64>;
pub type Grid = sampling::Grid<f64>;
pub type TGrid = sampling::TGrid<f64>;
pub type Field = sampling::Field<f64>;
pub type HalfSpaceField = sampling::HalfSpaceField<f64>;
pub type RadialProfile = extension::RadialProfile<f64>;
pub type GradientStack = affine::GradientStack<f64>;
pub type SphereRule = affine::SphereRule<f64>;
pub type ExtremalParams = inequalities::ExtremalParams<f64>;
pub type QuotientReport = inequalities::QuotientReport<f64>;
