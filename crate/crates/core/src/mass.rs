//! Second solver working on the cumulated mass `U(s) = ∫_0^{s^{1/n}} ρ^{n−1} u(ρ) dρ`.
//!
//! With `s = r^n` the density equation becomes the scalar problem
//!
//! ```text
//! U_t = n² s^{2−2/n} U_ss + n U_s [χ(αU − βV) − ξ(γU − δW)] + λU − n^{k−1} μ ∫_0^s U_s^k
//! n² s^{2−2/n} V_ss = βV − αU,   V(0) = 0,   V(R^n) = (α/β) U(R^n)
//! n² s^{2−2/n} W_ss = δW − γU,   W(0) = 0,   W(R^n) = (γ/δ) U(R^n)
//! ```
//!
//! discretised by finite differences on the nodes `s_j = r_j^n` (the images
//! of the primal faces), so that `U_s` on an interval equals `u/n` on the
//! corresponding cell. The total mass obeys `σ_n U(R^n)` and at the last node
//! the scheme reduces to the exact mass balance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::radial::RadialGrid;
use crate::solver::{integrate, rhs, Discretization, Scheme, Status, StepControl, Trajectory};
use crate::tridiag::Tridiagonal;

/// `U(s_j)` at every node from cell densities.
pub fn density_to_mass(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.dim() as f64;
    let mut acc = Vec::with_capacity(u.len() + 1);
    let mut total = 0.0;
    acc.push(0.0);
    for (x, h) in u.iter().zip(grid.s_widths()) {
        total += x * h / n;
        acc.push(total);
    }
    acc
}

/// Cell densities `u_i = n (U_{i+1} − U_i) / h_i`; inverse of [`density_to_mass`].
pub fn mass_to_density(grid: &RadialGrid, mass: &[f64]) -> Vec<f64> {
    let n = grid.dim() as f64;
    mass.windows(2)
        .zip(grid.s_widths())
        .map(|(m, h)| n * (m[1] - m[0]) / h)
        .collect()
}

// n² s^{2−2/n} at every node (= n² r^{2n−2}).
fn diffusivity(grid: &RadialGrid) -> Vec<f64> {
    let n = grid.dim();
    grid.faces()
        .iter()
        .map(|r| (n * n) as f64 * r.powi(2 * n as i32 - 2))
        .collect()
}

// Coefficient of (d_j − d_{j−1}) in the diffusion term at interior node j.
fn diffusion_weights(grid: &RadialGrid) -> Vec<f64> {
    let a = diffusivity(grid);
    let h = grid.s_widths();
    let m = h.len();
    let mut c = vec![0.0; m + 1];
    for j in 1..m {
        c[j] = 2.0 * a[j] / (h[j] + h[j - 1]);
    }
    c
}

fn slopes(grid: &RadialGrid, mass: &[f64]) -> Vec<f64> {
    mass.windows(2)
        .zip(grid.s_widths())
        .map(|(m, h)| (m[1] - m[0]) / h)
        .collect()
}

/// Solve the signal problem `n² s^{2−2/n} Φ_ss = bΦ − aU` with Dirichlet data
/// `Φ(0) = 0`, `Φ(R^n) = (a/b) U(R^n)`.
pub fn solve_mass_signal(grid: &RadialGrid, mass: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    let m = grid.cells();
    if mass.len() != m + 1 {
        return Err(Error::arg(
            "mass",
            format!("length {} does not match {} nodes", mass.len(), m + 1),
        ));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::arg("coupling", format!("need a > 0 and b > 0, got {a}, {b}")));
    }
    let c = diffusion_weights(grid);
    let h = grid.s_widths();
    let last = a / b * mass[m];
    // unknowns at nodes 1..m−1
    let size = m - 1;
    let mut t = Tridiagonal::zeros(size);
    let mut rhs = vec![0.0; size];
    for r in 0..size {
        let j = r + 1;
        let lo = c[j] / h[j - 1];
        let hi = c[j] / h[j];
        t.lower[r] = -lo;
        t.upper[r] = -hi;
        t.diag[r] = lo + hi + b;
        rhs[r] = a * mass[j];
    }
    rhs[size - 1] += c[m - 1] / h[m - 1] * last;
    t.lower[0] = 0.0;
    t.upper[size - 1] = 0.0;
    let inner = t.solve(&rhs)?;
    let mut phi = Vec::with_capacity(m + 1);
    phi.push(0.0);
    phi.extend(inner);
    phi.push(last);
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("mass signal"));
    }
    Ok(phi)
}

/// `V` and `W` for the cumulated mass.
pub fn mass_signals(grid: &RadialGrid, params: &ModelParams, mass: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = solve_mass_signal(grid, mass, params.alpha, params.beta)?;
    let w = solve_mass_signal(grid, mass, params.gamma, params.delta)?;
    Ok((v, w))
}

#[derive(Debug, Clone)]
pub(crate) struct MassSignals {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

struct MassForm<'a> {
    grid: &'a RadialGrid,
    params: &'a ModelParams,
    weights: Vec<f64>,
}

impl<'a> MassForm<'a> {
    fn new(grid: &'a RadialGrid, params: &'a ModelParams) -> Self {
        MassForm {
            grid,
            params,
            weights: diffusion_weights(grid),
        }
    }

    // Node velocity n[χ(αU − βV) − ξ(γU − δW)], forced to zero at both ends.
    fn velocity(&self, mass: &[f64], sig: &MassSignals) -> Vec<f64> {
        let p = self.params;
        let n = self.grid.dim() as f64;
        let m = mass.len() - 1;
        let mut a: Vec<f64> = (0..=m)
            .map(|j| {
                n * (p.chi * (p.alpha * mass[j] - p.beta * sig.v[j])
                    - p.xi * (p.gamma * mass[j] - p.delta * sig.w[j]))
            })
            .collect();
        a[0] = 0.0;
        a[m] = 0.0;
        a
    }

    fn explicit_part(&self, mass: &[f64], sig: &MassSignals, diffusion: bool) -> Vec<f64> {
        let p = self.params;
        let n = self.grid.dim() as f64;
        let h = self.grid.s_widths();
        let s = self.grid.s_nodes();
        let m = mass.len() - 1;
        let d = slopes(self.grid, mass);
        let vel = self.velocity(mass, sig);

        // limited s-slopes of d on interior intervals
        let mid: Vec<f64> = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut q = vec![0.0; m];
        for i in 1..m - 1 {
            let left = (d[i] - d[i - 1]) / (mid[i] - mid[i - 1]);
            let right = (d[i + 1] - d[i]) / (mid[i + 1] - mid[i]);
            q[i] = if left * right <= 0.0 {
                0.0
            } else if left.abs() < right.abs() {
                left
            } else {
                right
            };
        }

        let mut out = vec![0.0; m + 1];
        let mut degraded = 0.0;
        for j in 1..=m {
            degraded += h[j - 1] * d[j - 1].max(0.0).powf(p.k);
            let mut val = p.lambda * mass[j] - n.powf(p.k - 1.0) * p.mu * degraded;
            if j < m {
                let up = if vel[j] > 0.0 { j } else { j - 1 };
                let grad = d[up] + q[up] * (s[j] - mid[up]);
                val += vel[j] * grad;
                if diffusion {
                    val += self.weights[j] * (d[j] - d[j - 1]);
                }
            }
            out[j] = val;
        }
        out
    }
}

impl Discretization for MassForm<'_> {
    type Aux = MassSignals;

    fn prepare(&self, mass: &[f64]) -> Result<MassSignals> {
        let (v, w) = mass_signals(self.grid, self.params, mass)?;
        Ok(MassSignals { v, w })
    }

    fn positivity_dt(&self, mass: &[f64], sig: &MassSignals, scheme: Scheme) -> f64 {
        let p = self.params;
        let n = self.grid.dim() as f64;
        let h = self.grid.s_widths();
        let d = slopes(self.grid, mass);
        let vel = self.velocity(mass, sig);
        let mut rate: f64 = 0.0;
        for i in 0..d.len() {
            let adv = vel[i].max(0.0) + (-vel[i + 1]).max(0.0);
            let diff = match scheme {
                Scheme::Heun => self.weights[i] + self.weights[i + 1],
                Scheme::ImexHeun => 0.0,
            };
            let r = (2.0 * adv + diff) / h[i]
                + (-p.lambda).max(0.0)
                + p.mu * (n * d[i].max(0.0)).powf(p.k - 1.0);
            rate = rate.max(r);
        }
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    fn stage(&self, mass: &[f64], sig: &MassSignals, step: f64, scheme: Scheme) -> Result<Vec<f64>> {
        let implicit = scheme == Scheme::ImexHeun;
        let e = self.explicit_part(mass, sig, !implicit);
        let b: Vec<f64> = mass.iter().zip(&e).map(|(x, y)| x + step * y).collect();
        if !implicit {
            return Ok(b);
        }
        // (I − step·D) on nodes 1..=m; node 0 stays at zero, node m has no diffusion
        let m = mass.len() - 1;
        let h = self.grid.s_widths();
        let mut t = Tridiagonal::zeros(m);
        for r in 0..m {
            let j = r + 1;
            if j < m {
                let lo = step * self.weights[j] / h[j - 1];
                let hi = step * self.weights[j] / h[j];
                t.lower[r] = if r > 0 { -lo } else { 0.0 };
                t.upper[r] = -hi;
                t.diag[r] = 1.0 + lo + hi;
            } else {
                t.diag[r] = 1.0;
            }
        }
        let inner = t.solve(&b[1..])?;
        let mut out = Vec::with_capacity(m + 1);
        out.push(0.0);
        out.extend(inner);
        Ok(out)
    }

    fn admissible(&self, mass: &[f64]) -> bool {
        mass.iter().all(|x| x.is_finite()) && mass.windows(2).all(|w| w[1] >= w[0])
    }

    fn relative_change(&self, old: &[f64], new: &[f64]) -> f64 {
        let a = slopes(self.grid, old);
        let b = slopes(self.grid, new);
        let floor = 1e-3 * a.iter().fold(0.0f64, |m, x| m.max(*x));
        a.iter()
            .zip(&b)
            .map(|(x, y)| (y - x).abs() / (x.abs() + floor))
            .fold(0.0, f64::max)
    }

    fn peak(&self, mass: &[f64]) -> f64 {
        let n = self.grid.dim() as f64;
        n * slopes(self.grid, mass).iter().fold(0.0f64, |m, x| m.max(*x))
    }
}

/// Time derivative of `U` at every node with all terms explicit.
pub fn mass_rhs(grid: &RadialGrid, params: &ModelParams, mass: &[f64]) -> Result<Vec<f64>> {
    let form = MassForm::new(grid, params);
    let sig = form.prepare(mass)?;
    Ok(form.explicit_part(mass, &sig, true))
}

#[derive(Debug, Clone, Serialize)]
pub struct MassSnapshot {
    pub t: f64,
    pub dt: f64,
    /// `U` at the nodes `s_j`.
    pub mass: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl MassSnapshot {
    pub fn density(&self, grid: &RadialGrid) -> Vec<f64> {
        mass_to_density(grid, &self.mass)
    }
}

#[derive(Debug, Clone)]
pub struct MassTrajectory {
    pub samples: Vec<MassSnapshot>,
    pub status: Status,
    pub steps: u64,
    pub rejections: u64,
}

/// Integrate the mass formulation from `U0` (node values, `U0[0] = 0`).
///
/// Steps that would make `U` decrease anywhere are rejected like negative
/// densities in the primal solver.
pub fn run_mass(
    grid: &RadialGrid,
    params: &ModelParams,
    mass0: Vec<f64>,
    ctrl: &StepControl,
) -> Result<MassTrajectory> {
    ctrl.validate()?;
    if mass0.len() != grid.cells() + 1 {
        return Err(Error::arg(
            "mass0",
            format!("length {} does not match {} nodes", mass0.len(), grid.cells() + 1),
        ));
    }
    if mass0[0] != 0.0 {
        return Err(Error::arg("mass0", "must vanish at s = 0"));
    }
    let form = MassForm::new(grid, params);
    if !form.admissible(&mass0) {
        return Err(Error::arg("mass0", "must be finite and nondecreasing"));
    }
    let out = integrate(&form, mass0, ctrl, true)?;
    Ok(MassTrajectory {
        samples: out
            .samples
            .into_iter()
            .map(|s| MassSnapshot {
                t: s.t,
                dt: s.dt,
                mass: s.x,
                v: s.aux.v,
                w: s.aux.w,
            })
            .collect(),
        status: out.status,
        steps: out.steps,
        rejections: out.rejections,
    })
}

/// Agreement between a primal trajectory and a mass-formulation rerun.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulationAgreement {
    /// End of the compared window.
    pub window_end: f64,
    pub samples: usize,
    /// `max_t ‖T(rhs_primal) − mass_rhs‖_∞ / ‖mass_rhs‖_∞`, `T` the density-to-mass map.
    pub max_rhs_error: f64,
    /// `max_t ‖U_primal − U_mass‖_∞ / U_primal(R^n)`.
    pub max_mass_error: f64,
    /// The same at the outer node `s = R^n` alone, where the scheme is the mass balance.
    pub max_boundary_error: f64,
}

/// Rerun the mass formulation from the first sample of `traj` up to the
/// last sample time not after `window_end` and compare at shared samples.
pub fn compare_formulations(
    grid: &RadialGrid,
    params: &ModelParams,
    traj: &Trajectory,
    ctrl: &StepControl,
    window_end: f64,
) -> Result<FormulationAgreement> {
    let first = traj
        .samples
        .first()
        .ok_or_else(|| Error::arg("trajectory", "has no samples"))?;
    let window_end = traj
        .samples
        .iter()
        .map(|s| s.t)
        .filter(|t| *t <= window_end)
        .fold(0.0, f64::max);
    let ctrl = StepControl {
        t_end: window_end,
        ..*ctrl
    };
    let mt = run_mass(grid, params, density_to_mass(grid, &first.u), &ctrl)?;
    if mt.status != Status::Completed {
        return Err(Error::Inconsistent(format!(
            "mass formulation ended with {} before t = {window_end}",
            mt.status.label()
        )));
    }
    let max_abs = |x: &mut dyn Iterator<Item = f64>| x.fold(0.0, |m: f64, v| m.max(v.abs()));
    let (mut rhs_err, mut mass_err, mut boundary_err, mut samples): (f64, f64, f64, usize) = (0.0, 0.0, 0.0, 0);
    for (a, b) in traj.samples.iter().zip(&mt.samples) {
        if (a.t - b.t).abs() > 1e-9 * a.t.abs().max(1.0) {
            return Err(Error::Inconsistent(format!("sample times {} and {} differ", a.t, b.t)));
        }
        let primal = density_to_mass(grid, &a.u);
        let top = primal[primal.len() - 1];
        mass_err = mass_err.max(max_abs(&mut primal.iter().zip(&b.mass).map(|(x, y)| x - y)) / top);
        boundary_err = boundary_err.max((top - b.mass[b.mass.len() - 1]).abs() / top);
        let transformed = density_to_mass(grid, &rhs(grid, params, &a.u)?);
        let direct = mass_rhs(grid, params, &primal)?;
        let scale = max_abs(&mut direct.iter().copied());
        rhs_err = rhs_err.max(max_abs(&mut transformed.iter().zip(&direct).map(|(x, y)| x - y)) / scale);
        samples += 1;
    }
    Ok(FormulationAgreement {
        window_end,
        samples,
        max_rhs_error: rhs_err,
        max_mass_error: mass_err,
        max_boundary_error: boundary_err,
    })
}
