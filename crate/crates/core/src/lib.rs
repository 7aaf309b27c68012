//! Scattering matrices of a disordered two-dimensional waveguide, the
//! generalized Wigner-Smith operators derived from them, and the optimal
//! classical and quantum probe states built on their eigenchannels.

// NaN-rejecting guards are written as `!(x >= 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod scenario;
pub mod solver;
pub mod gws;
pub mod gaussian;
pub mod fock;
pub mod metrology;
pub mod micromanip;
pub mod vacuum;

pub use error::{Category, Error, Result};
pub use scenario::{Scenario, ScattererSpec, Shape, Material, ThetaKind, ThetaSpec};
pub use solver::{scattering_matrix, solve_scenario, FieldMap, ScatteringMatrix};
