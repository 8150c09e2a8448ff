//! Orbit reduction of jet-space exterior differential systems under
//! finite-dimensional Lie group actions.

pub mod conslaw;
pub mod exterior;
pub mod jetspace;
pub mod liegroup;
pub mod reconstruct;
pub mod reduction;
mod sampling;
pub mod scalar;
pub mod symcore;
pub mod varcalc;

pub use num_rational::BigRational;

pub type Rational = BigRational;
pub type Real = f64;
pub type ExactMatrix = scalar::Matrix<Rational>;
pub type RealMatrix = scalar::Matrix<Real>;
