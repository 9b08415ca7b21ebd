//! Variable-exponent Lebesgue/Sobolev toolkit and variational solvers for
//! Neumann problems driven by the (p1(x), p2(x))-Laplacian.

pub mod cli;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod expr;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solvers;
pub mod space;

pub use error::{Error, Result};
pub use exponent::{Combine, Critical, ExponentField, Region};
pub use mesh::{DiscreteField, Mesh};
