use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use crate::tridiag::Tridiagonal;

/// Discrete radial Laplacian in flux form with zero flux through r = 0 and r = R.
pub fn laplacian(grid: &RadialGrid, phi: &[f64]) -> Vec<f64> {
    let c = grid.conductance();
    let vol = grid.volumes();
    let m = grid.cells();
    (0..m)
        .map(|i| {
            let outer = if i + 1 < m { c[i + 1] * (phi[i + 1] - phi[i]) } else { 0.0 };
            let inner = if i > 0 { c[i] * (phi[i] - phi[i - 1]) } else { 0.0 };
            (outer - inner) / vol[i]
        })
        .collect()
}

/// Tridiagonal matrix of `shift·I − scale·Δ_h`.
pub(crate) fn shifted_laplacian(grid: &RadialGrid, shift: f64, scale: f64) -> Tridiagonal {
    let c = grid.conductance();
    let vol = grid.volumes();
    let m = grid.cells();
    let mut t = Tridiagonal::zeros(m);
    for i in 0..m {
        let inner = c[i] * scale / vol[i];
        let outer = c[i + 1] * scale / vol[i];
        t.lower[i] = -inner;
        t.upper[i] = -outer;
        t.diag[i] = shift + inner + outer;
    }
    t
}

/// Solve `Δφ − bφ = −a·source` on the ball with homogeneous Neumann data.
///
/// The matrix is a strictly diagonally dominant M-matrix, so a nonnegative
/// source yields a nonnegative solution.
pub fn solve_elliptic(grid: &RadialGrid, source: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::arg("decay", format!("must be positive, got {b}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::arg("coupling", format!("must be positive, got {a}")));
    }
    if source.len() != grid.cells() {
        return Err(Error::arg(
            "source",
            format!("length {} does not match {} cells", source.len(), grid.cells()),
        ));
    }
    let rhs: Vec<f64> = source.iter().map(|s| a * s).collect();
    let phi = shifted_laplacian(grid, b, 1.0).solve(&rhs)?;
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("elliptic solution"));
    }
    Ok(phi)
}

/// Residual of `Δφ − bφ + a·source`, cell by cell relative to the magnitude of
/// the terms entering that cell's equation; returns the maximum.
pub fn elliptic_residual(grid: &RadialGrid, phi: &[f64], source: &[f64], a: f64, b: f64) -> f64 {
    let lap = laplacian(grid, phi);
    let c = grid.conductance();
    let vol = grid.volumes();
    let m = grid.cells();
    (0..m)
        .map(|i| {
            let res = (lap[i] - b * phi[i] + a * source[i]).abs();
            let inner = if i > 0 { c[i] * (phi[i].abs() + phi[i - 1].abs()) } else { 0.0 };
            let outer = if i + 1 < m { c[i + 1] * (phi[i + 1].abs() + phi[i].abs()) } else { 0.0 };
            let scale = (a * source[i]).abs() + (b * phi[i]).abs() + (inner + outer) / vol[i];
            if scale > 0.0 {
                res / scale
            } else {
                res
            }
        })
        .fold(0.0, f64::max)
}

/// Two-point derivative at every face; exactly zero at r = 0 and r = R.
pub fn radial_gradient(grid: &RadialGrid, field: &[f64]) -> Vec<f64> {
    let m = grid.cells();
    let centers = grid.centers();
    let mut g = vec![0.0; m + 1];
    for f in 1..m {
        g[f] = (field[f] - field[f - 1]) / (centers[f] - centers[f - 1]);
    }
    g
}
