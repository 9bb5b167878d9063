//! Functionals evaluated along trajectories: mass, `Ψ`, the moment `Φ`, the
//! decomposition of `Ψ'` and the residuals of the growth inequalities.

use serde::{Deserialize, Serialize};

use crate::bounds::{compute_constants, BoundConstants, GNConfig};
use crate::error::{Error, Result, ValidationError};
use crate::mass::density_to_mass;
use crate::model::{m_star, ModelParams};
use crate::radial::{elliptic_residual, RadialGrid};
use crate::solver::Trajectory;

/// Weighted moment `Φ = ∫_0^{s0} s^{−p}(s0 − s) U(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    pub p: f64,
    pub s0: f64,
}

impl MomentConfig {
    /// `p = 1 − 1/n`, `s0 = (R/2)^n`.
    pub fn default_for(n: usize, radius: f64) -> Self {
        MomentConfig {
            p: 1.0 - 1.0 / n as f64,
            s0: (0.5 * radius).powi(n as i32),
        }
    }

    pub fn validate(&self, n: usize, radius: f64) -> std::result::Result<(), ValidationError> {
        let mut err = ValidationError::default();
        let lo = 1.0 - 2.0 / n as f64;
        err.check(
            self.p > lo && self.p < 1.0,
            "p",
            &format!("{lo} < p < 1"),
            self.p,
        );
        let top = radius.powi(n as i32);
        err.check(self.s0 > 0.0 && self.s0 < top, "s0", &format!("0 < s0 < R^n = {top}"), self.s0);
        err.into_result()
    }
}

/// `Ψ = (1/σ) ∫ u^σ`.
pub fn psi(grid: &RadialGrid, u: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 1.0) {
        return Err(Error::arg("sigma", format!("must exceed 1, got {sigma}")));
    }
    Ok(grid.integrate_map(u, |x| x.powf(sigma)) / sigma)
}

// ∫_a^b s^q ds for q > −1.
fn power_integral(a: f64, b: f64, q: f64) -> f64 {
    (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0)
}

/// `Φ` for node values of `U` on the grid's s-nodes.
///
/// `U` is taken piecewise linear between nodes and each piece is integrated
/// exactly against `s^{−p}(s0 − s)`; on the first interval this is the
/// analytic treatment of `U ≈ U_s(0⁺) s` near the weight singularity.
pub fn phi(grid: &RadialGrid, mass: &[f64], cfg: &MomentConfig) -> Result<f64> {
    cfg.validate(grid.dim(), grid.radius())?;
    let s = grid.s_nodes();
    if mass.len() != s.len() {
        return Err(Error::arg(
            "mass",
            format!("length {} does not match {} nodes", mass.len(), s.len()),
        ));
    }
    let (p, s0) = (cfg.p, cfg.s0);
    let mut total = 0.0;
    for j in 0..s.len() - 1 {
        let a = s[j];
        if a >= s0 {
            break;
        }
        let b = s[j + 1].min(s0);
        let slope = (mass[j + 1] - mass[j]) / (s[j + 1] - s[j]);
        let c0 = mass[j] - slope * a;
        // s^{−p}(s0 − s)(c0 + slope·s)
        total += c0 * s0 * power_integral(a, b, -p) + (slope * s0 - c0) * power_integral(a, b, 1.0 - p)
            - slope * power_integral(a, b, 2.0 - p);
    }
    Ok(total)
}

/// `Φ` directly from cell densities.
pub fn phi_of_density(grid: &RadialGrid, u: &[f64], cfg: &MomentConfig) -> Result<f64> {
    phi(grid, &density_to_mass(grid, u), cfg)
}

/// The five contributions to `Ψ'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
}

impl EnergyTerms {
    pub fn sum(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4 + self.i5
    }
}

/// Largest admissible scaled elliptic residual before the decomposition refuses.
pub const SIGNAL_TOLERANCE: f64 = 1e-8;

fn dirichlet_form(grid: &RadialGrid, u: &[f64], sigma: f64) -> f64 {
    let c = grid.conductance();
    let h = sigma / 2.0;
    (1..u.len())
        .map(|f| {
            let d = u[f].powf(h) - u[f - 1].powf(h);
            c[f] * d * d
        })
        .sum()
}

/// `(I₁, …, I₅)` with the signal terms rewritten through the elliptic equations:
///
/// ```text
/// I₁ = −4(σ−1)/σ² ∫|∇u^{σ/2}|²
/// I₂ = −χβ(σ−1)/σ ∫u^σ v + χα(σ−1)/σ ∫u^{σ+1}
/// I₃ =  ξδ(σ−1)/σ ∫u^σ w − ξγ(σ−1)/σ ∫u^{σ+1}
/// I₄ =  λ ∫u^σ,   I₅ = −μ ∫u^{σ+k−1}
/// ```
///
/// Since `αu − βv = −Δv` and `γu − δw = −Δw`, `I₂` and `I₃` are summed by
/// parts over faces, `χ(σ−1)/σ Σ K_f [u^σ]_f [v]_f` and its analogue. This
/// avoids the cancellation of the two volume integrals near constant states.
///
/// Refuses when `v` or `w` does not solve its elliptic problem for `u`.
pub fn energy_decomposition(
    grid: &RadialGrid,
    params: &ModelParams,
    u: &[f64],
    v: &[f64],
    w: &[f64],
    sigma: f64,
) -> Result<EnergyTerms> {
    if !(sigma > 1.0) {
        return Err(Error::arg("sigma", format!("must exceed 1, got {sigma}")));
    }
    let rv = elliptic_residual(grid, v, u, params.alpha, params.beta);
    let rw = elliptic_residual(grid, w, u, params.gamma, params.delta);
    if !(rv <= SIGNAL_TOLERANCE && rw <= SIGNAL_TOLERANCE) {
        return Err(Error::Inconsistent(format!(
            "scaled residuals v: {rv:e}, w: {rw:e} exceed {SIGNAL_TOLERANCE:e}"
        )));
    }
    let vol = grid.volumes();
    let cond = grid.conductance();
    let q = (sigma - 1.0) / sigma;
    let (mut us, mut usk) = (0.0, 0.0);
    for i in 0..u.len() {
        let a = u[i].powf(sigma) * vol[i];
        us += a;
        usk += a * u[i].powf(params.k - 1.0);
    }
    let (mut dv, mut dw) = (0.0, 0.0);
    for f in 1..u.len() {
        let jump = cond[f] * (u[f].powf(sigma) - u[f - 1].powf(sigma));
        dv += jump * (v[f] - v[f - 1]);
        dw += jump * (w[f] - w[f - 1]);
    }
    Ok(EnergyTerms {
        i1: -4.0 * (sigma - 1.0) / (sigma * sigma) * dirichlet_form(grid, u, sigma),
        i2: q * params.chi * dv,
        i3: -q * params.xi * dw,
        i4: params.lambda * us,
        i5: -params.mu * usk,
    })
}

/// Smallest `C_GN` for which the split interpolation estimate holds on `u`:
/// `∫u^{σ+1} / [(∫|∇u^{σ/2}|²)^{(σ+1)θ₀/σ}(∫u^σ)^{(σ+1)(1−θ₀)/σ} + (∫u^σ)^{(σ+1)/σ}]`.
pub fn gn_ratio(grid: &RadialGrid, u: &[f64], sigma: f64) -> f64 {
    let n = grid.dim() as f64;
    let theta0 = n / (2.0 * (sigma + 1.0));
    let e = (sigma + 1.0) / sigma;
    let num = grid.integrate_map(u, |x| x.powf(sigma + 1.0));
    let grad = dirichlet_form(grid, u, sigma);
    let lp = grid.integrate_map(u, |x| x.powf(sigma));
    let den = grad.powf(e * theta0) * lp.powf(e * (1.0 - theta0)) + lp.powf(e);
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Solution of the comparison problem `y' = λ₊y − μ̄y^k`, `y(0) = m0`,
/// with `μ̄ = μ|Ω|^{1−k}`, via the Bernoulli substitution `z = y^{1−k}`.
pub fn comparison_mass(params: &ModelParams, m0: f64, t: f64) -> f64 {
    if m0 <= 0.0 {
        return 0.0;
    }
    let k = params.k;
    let lp = params.lambda_plus();
    let mu_bar = params.mu * params.omega_volume().powf(1.0 - k);
    let z0 = m0.powf(1.0 - k);
    let z = if lp > 0.0 {
        let zs = mu_bar / lp;
        zs + (z0 - zs) * (-(k - 1.0) * lp * t).exp()
    } else {
        z0 + (k - 1.0) * mu_bar * t
    };
    z.powf(1.0 / (1.0 - k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBoundReport {
    pub m_star: f64,
    /// `max_t (mass − m_star)`; nonpositive when the bound holds.
    pub max_excess: f64,
    /// `max_t (mass / y(t) − 1)` against the comparison solution.
    pub max_comparison_excess: f64,
    pub holds: bool,
}

/// Check `mass ≤ m_star` and `mass ≤ y(t)` along sampled masses (first sample at t = 0).
pub fn check_mass_bound(params: &ModelParams, times: &[f64], masses: &[f64]) -> Result<MassBoundReport> {
    if masses.is_empty() || times.len() != masses.len() {
        return Err(Error::arg("masses", "need a nonempty series matching the times"));
    }
    let m0 = masses[0];
    let ms = m_star(params, m0)?;
    let mut excess = f64::NEG_INFINITY;
    let mut cmp = f64::NEG_INFINITY;
    for (t, m) in times.iter().zip(masses) {
        excess = excess.max(m - ms);
        let y = comparison_mass(params, m0, *t);
        if y > 0.0 {
            cmp = cmp.max(m / y - 1.0);
        }
    }
    Ok(MassBoundReport {
        m_star: ms,
        max_excess: excess,
        max_comparison_excess: cmp,
        holds: excess <= 1e-6 * ms && cmp <= 1e-6,
    })
}

/// Centered differences of `values` over `times`, one-sided at the ends.
pub fn time_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiGrowthReport {
    pub ratios: Vec<f64>,
    /// Infimum over samples with `0 < t < window_end` and `Φ ≠ 0`.
    pub infimum: f64,
    /// Indices where `Φ = 0` made the ratio undefined.
    pub skipped: Vec<usize>,
    /// True when the infimum over the window is positive.
    pub positive: bool,
}

/// `Φ'/(s0^{p−3}Φ²)` at every sample, `Φ'` by centered differences.
pub fn phi_growth_report(times: &[f64], phis: &[f64], cfg: &MomentConfig, window_end: f64) -> PhiGrowthReport {
    let rate = time_derivative(times, phis);
    let scale = cfg.s0.powf(cfg.p - 3.0);
    let mut skipped = Vec::new();
    let ratios: Vec<f64> = phis
        .iter()
        .zip(&rate)
        .enumerate()
        .map(|(i, (f, d))| {
            if *f == 0.0 {
                skipped.push(i);
                f64::NAN
            } else {
                d / (scale * f * f)
            }
        })
        .collect();
    let infimum = times
        .iter()
        .zip(&ratios)
        .filter(|(t, r)| **t > 0.0 && **t < window_end && r.is_finite())
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    PhiGrowthReport {
        positive: infimum > 0.0 && infimum.is_finite(),
        ratios,
        infimum,
        skipped,
    }
}

/// One row of the per-sample diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub linf: f64,
    pub psi: f64,
    pub phi: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
    #[serde(rename = "I4")]
    pub i4: f64,
    #[serde(rename = "I5")]
    pub i5: f64,
    pub psi_rate_numeric: f64,
    pub residual_mass_bound: f64,
    pub residual_psi_ineq: f64,
    pub phi_ratio: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 15] = [
        "t",
        "dt",
        "mass",
        "linf",
        "psi",
        "phi",
        "I1",
        "I2",
        "I3",
        "I4",
        "I5",
        "psi_rate_numeric",
        "residual_mass_bound",
        "residual_psi_ineq",
        "phi_ratio",
    ];

    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.dt,
            self.mass,
            self.linf,
            self.psi,
            self.phi,
            self.i1,
            self.i2,
            self.i3,
            self.i4,
            self.i5,
            self.psi_rate_numeric,
            self.residual_mass_bound,
            self.residual_psi_ineq,
            self.phi_ratio,
        ]
    }

    pub fn energy(&self) -> EnergyTerms {
        EnergyTerms {
            i1: self.i1,
            i2: self.i2,
            i3: self.i3,
            i4: self.i4,
            i5: self.i5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub moment: MomentConfig,
    pub gn: GNConfig,
}

impl DiagnosticsConfig {
    pub fn default_for(params: &ModelParams) -> Self {
        DiagnosticsConfig {
            moment: MomentConfig::default_for(params.dim(), params.radius),
            gn: GNConfig::default_for(params.dim()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub records: Vec<DiagnosticsRecord>,
    pub constants: BoundConstants,
    pub m_star: f64,
    /// Largest [`gn_ratio`] over the samples.
    pub c_gn_required: f64,
}

/// Evaluate every functional on every sample of a primal trajectory.
pub fn diagnose(
    grid: &RadialGrid,
    params: &ModelParams,
    traj: &Trajectory,
    cfg: &DiagnosticsConfig,
) -> Result<Diagnostics> {
    let constants = compute_constants(params, &cfg.gn)?;
    let sigma = cfg.gn.sigma;
    let first = traj
        .samples
        .first()
        .ok_or_else(|| Error::arg("trajectory", "has no samples"))?;
    let ms = m_star(params, grid.integrate(&first.u))?;
    let mut c_gn_required: f64 = 0.0;
    let mut rows = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let energy = energy_decomposition(grid, params, &s.u, &s.v, &s.w, sigma)?;
        c_gn_required = c_gn_required.max(gn_ratio(grid, &s.u, sigma));
        let mass = grid.integrate(&s.u);
        rows.push(DiagnosticsRecord {
            t: s.t,
            dt: s.dt,
            mass,
            linf: s.u.iter().fold(0.0, |m: f64, x| m.max(*x)),
            psi: psi(grid, &s.u, sigma)?,
            phi: phi_of_density(grid, &s.u, &cfg.moment)?,
            i1: energy.i1,
            i2: energy.i2,
            i3: energy.i3,
            i4: energy.i4,
            i5: energy.i5,
            psi_rate_numeric: f64::NAN,
            residual_mass_bound: mass - ms,
            residual_psi_ineq: f64::NAN,
            phi_ratio: f64::NAN,
        });
    }
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let psis: Vec<f64> = rows.iter().map(|r| r.psi).collect();
    let phis: Vec<f64> = rows.iter().map(|r| r.phi).collect();
    let psi_rate = time_derivative(&times, &psis);
    let growth = phi_growth_report(&times, &phis, &cfg.moment, f64::INFINITY);
    for (i, r) in rows.iter_mut().enumerate() {
        r.psi_rate_numeric = psi_rate[i];
        r.residual_psi_ineq = psi_rate[i] - constants.growth(r.psi);
        r.phi_ratio = growth.ratios[i];
    }
    Ok(Diagnostics {
        records: rows,
        constants,
        m_star: ms,
        c_gn_required,
    })
}
