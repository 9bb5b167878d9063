//! Simulation and verification toolkit for radially symmetric
//! attraction-repulsion chemotaxis with logistic source on a ball.
//!
//! - [`model`]: parameters, geometry and initial profiles
//! - [`radial`]: finite-volume grid and the elliptic signal solver
//! - [`solver`]: adaptive time integration of the density with blow-up detection
//! - [`mass`]: independent solver for the cumulated mass `U(s)`, `s = r^n`
//! - [`functionals`]: `Ψ`, `Φ`, energy decomposition and bound residuals
//! - [`bounds`]: constants and lower bounds on the blow-up time

pub mod bounds;
pub mod error;
pub mod functionals;
pub mod mass;
pub mod model;
pub mod quadrature;
pub mod radial;
pub mod solver;
pub mod tridiag;

pub use error::{Error, Result, ValidationError};
pub use model::{make_profile, validate_params, InitialProfile, ModelParams, ParamRecord, ProfileKind};
pub use radial::{build_grid, RadialGrid, Stretching};
pub use solver::{Status, StepControl};
