//! Semi-discrete right-hand side of the density equation in flux form.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::radial::{laplacian, radial_gradient, solve_elliptic, RadialGrid};

/// Test hook that corrupts the advective fluxes.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxHook {
    #[default]
    Exact,
    /// The inner cell of every face sees the advective flux with flipped sign,
    /// so the two cells sharing a face no longer agree on what crossed it.
    FlipInnerSide,
}

/// Attractant `v` and repellent `w` for density `u`.
pub fn signals(grid: &RadialGrid, params: &ModelParams, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = solve_elliptic(grid, u, params.alpha, params.beta)?;
    let w = solve_elliptic(grid, u, params.gamma, params.delta)?;
    Ok((v, w))
}

/// Drift velocity `χ v_r − ξ w_r` at every face (zero on both boundary faces).
pub fn advective_velocity(grid: &RadialGrid, params: &ModelParams, v: &[f64], w: &[f64]) -> Vec<f64> {
    let gv = radial_gradient(grid, v);
    let gw = radial_gradient(grid, w);
    gv.iter()
        .zip(&gw)
        .map(|(a, b)| params.chi * a - params.xi * b)
        .collect()
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

// Limited slope per cell; the two boundary cells are kept piecewise constant.
fn slopes(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let m = grid.cells();
    let c = grid.centers();
    let mut s = vec![0.0; m];
    for i in 1..m - 1 {
        let left = (u[i] - u[i - 1]) / (c[i] - c[i - 1]);
        let right = (u[i + 1] - u[i]) / (c[i + 1] - c[i]);
        s[i] = minmod(left, right);
    }
    s
}

/// Advective flux `A_f · c_f · u_f` through every face, with `u_f` the upwind
/// minmod reconstruction. Boundary fluxes are zero.
pub fn face_fluxes(grid: &RadialGrid, u: &[f64], velocity: &[f64]) -> Vec<f64> {
    let m = grid.cells();
    let r = grid.faces();
    let c = grid.centers();
    let a = grid.face_areas();
    let s = slopes(grid, u);
    let mut flux = vec![0.0; m + 1];
    for f in 1..m {
        let vel = velocity[f];
        let face_value = if vel > 0.0 {
            u[f - 1] + s[f - 1] * (r[f] - c[f - 1])
        } else {
            u[f] + s[f] * (r[f] - c[f])
        };
        flux[f] = a[f] * vel * face_value;
    }
    flux
}

/// Cross-diffusion term `−χ∇·(u∇v) + ξ∇·(u∇w)` per cell.
pub fn transport(grid: &RadialGrid, params: &ModelParams, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
    transport_with_hook(grid, params, u, v, w, FluxHook::Exact)
}

#[doc(hidden)]
pub fn transport_with_hook(
    grid: &RadialGrid,
    params: &ModelParams,
    u: &[f64],
    v: &[f64],
    w: &[f64],
    hook: FluxHook,
) -> Vec<f64> {
    let vel = advective_velocity(grid, params, v, w);
    let flux = face_fluxes(grid, u, &vel);
    let vol = grid.volumes();
    let outer_sign = match hook {
        FluxHook::Exact => 1.0,
        FluxHook::FlipInnerSide => -1.0,
    };
    (0..grid.cells())
        .map(|i| (flux[i] - outer_sign * flux[i + 1]) / vol[i])
        .collect()
}

/// Logistic source `λu − μu^k`.
pub fn reaction(params: &ModelParams, u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|&x| params.lambda * x - params.mu * x.powf(params.k))
        .collect()
}

/// Full time derivative of the density, signals solved from `u`.
pub fn rhs(grid: &RadialGrid, params: &ModelParams, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != grid.cells() {
        return Err(Error::arg("u", format!("length {} does not match {} cells", u.len(), grid.cells())));
    }
    let (v, w) = signals(grid, params, u)?;
    let lap = laplacian(grid, u);
    let tr = transport(grid, params, u, &v, &w);
    let re = reaction(params, u);
    Ok((0..u.len()).map(|i| lap[i] + tr[i] + re[i]).collect())
}
