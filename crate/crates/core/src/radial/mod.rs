//! Radial finite-volume discretisation of the ball and the elliptic signal solver.

mod elliptic;
mod grid;

pub use elliptic::{elliptic_residual, laplacian, radial_gradient, solve_elliptic};
pub(crate) use elliptic::shifted_laplacian;
pub use grid::{build_grid, RadialGrid, Stretching, MIN_CELLS};
