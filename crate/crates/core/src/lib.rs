//! Unstable density stratification in two coupled porous tubes.
//!
//! - [`model`]: grids, parameters, fields, configuration.
//! - [`pde`]: finite-volume method-of-lines solver for the TFE and IPM closures.
//! - [`tw`]: traveling-wave dynamical systems, fixed points, closed forms.
//! - [`hetero`]: heteroclinic connections, Hugoniot loci, terraces.
//! - [`analyze`]: terrace extraction from PDE output.
//! - [`io`] and [`cli`]: file formats and the command-line driver.

pub mod analyze;
pub mod cli;
pub mod error;
pub mod exec;
pub mod hetero;
pub mod io;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod pde;
pub mod tw;

pub use error::{Error, Result};
pub use exec::Exec;
