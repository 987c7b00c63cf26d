//! Traveling-wave dynamical systems.

pub mod eigen;
pub mod profile;
pub mod systems;

pub use eigen::{fixed_point_eigensystem, EigenSystem};
pub use profile::{
    conserved_quantity, conserved_value, rankine_hugoniot_speed, tfe_endpoints, tfe_explicit_profile, tfe_intermediate,
    Manifold, Side, WaveEndpoints,
};
pub use systems::{
    from_concentrations, ipm_rhs, ipm_rhs_rescaled, reflect4, swap4, swap6, tfe_rhs, tfe_rhs_branch, to_concentrations,
    Branch, Tw4, Tw6,
};
