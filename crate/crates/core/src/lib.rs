//! Dirichlet series in Bergman-type Hilbert spaces: divisor sums, the
//! Laplace correspondence with weighted Bergman spaces on the half-plane
//! Re s > 1/2, discretization of profiles into Dirichlet polynomials, a
//! Cauchy-transform ∂̄ solver, and an iterative construction of Dirichlet
//! polynomials vanishing on a prescribed finite set.

pub mod conditions;
pub mod dbar;
pub mod discretization;
pub mod divisor;
pub mod error;
pub mod paley_wiener;
pub mod quadrature;
pub mod scheme;
pub mod spaces;
pub mod summation;
pub mod verify;

pub use error::{Error, Result};
