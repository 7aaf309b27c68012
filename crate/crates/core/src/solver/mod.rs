//! Lattice Helmholtz solver for a two-lead waveguide.

pub mod landscape;
pub mod lead;
pub mod solve;

pub use landscape::{build_landscape, Grid, IndexLandscape};
pub use lead::{lead_modes, transverse_eigenvalue, transverse_profile, LeadBasis};
pub use solve::{
    field_residual, scattering_matrix, solve_scattering, solve_scenario, Channel, FieldMap,
    ScatteringMatrix, Side, Solution, UNITARITY_WARNING,
};
