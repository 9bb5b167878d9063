//! Lower bounds on the blow-up time from the growth inequality for
//! `Ψ(t) = (1/σ) ∫ u^σ`:
//!
//! ```text
//! Ψ' ≤ B₁Ψ + B₂Ψ^{γ₁} + B₃Ψ^{γ₂}   ⇒   T_max ≥ ∫_{Ψ₀}^∞ dη / (B₁η + B₂η^{γ₁} + B₃η^{γ₂})
//! ```
//!
//! The constants depend on a Gagliardo–Nirenberg constant `C_GN` that has no
//! known closed form. A larger `C_GN` inflates every `Bᵢ` and lowers the
//! bound, so an over-estimate keeps the bound valid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::model::ModelParams;
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GNConfig {
    pub c_gn: f64,
    pub sigma: f64,
}

impl Default for GNConfig {
    fn default() -> Self {
        GNConfig { c_gn: 10.0, sigma: 2.0 }
    }
}

impl GNConfig {
    /// Smallest integer `σ > n/2`, which is 2 in three dimensions.
    pub fn default_for(n: usize) -> Self {
        GNConfig {
            sigma: (n / 2 + 1) as f64,
            ..GNConfig::default()
        }
    }

    pub fn validate(&self, n: usize) -> std::result::Result<(), ValidationError> {
        let mut err = ValidationError::default();
        err.check(self.c_gn > 0.0 && self.c_gn.is_finite(), "c_gn", "c_gn > 0", self.c_gn);
        let half = n as f64 / 2.0;
        err.check(
            self.sigma > half && self.sigma.is_finite(),
            "sigma",
            &format!("sigma > n/2 = {half}"),
            self.sigma,
        );
        err.into_result()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub n: usize,
    pub sigma: f64,
    pub c_gn: f64,
    pub theta0: f64,
    pub beta0: f64,
    pub eps1: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c1_tilde: f64,
    pub c2_tilde: f64,
    pub c3_tilde: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Assemble the constant ledger, taking the largest admissible `ε₁`.
///
/// With `ε₁ = 4/(σ χα C_GN β₀)` the gradient term `c̃₁` equals the
/// dissipation `4(σ−1)/σ²` exactly; any smaller `ε₁` only inflates `c₂`.
pub fn compute_constants(params: &ModelParams, gn: &GNConfig) -> Result<BoundConstants> {
    let n = params.dim();
    gn.validate(n)?;
    let nf = n as f64;
    let s = gn.sigma;
    let theta0 = nf / (2.0 * (s + 1.0));
    let beta0 = nf / (2.0 * s);
    let chi_alpha = params.chi * params.alpha;
    let eps1 = 4.0 / (s * chi_alpha * gn.c_gn * beta0);
    let c1 = gn.c_gn * eps1 * beta0;
    let c2 = gn.c_gn * eps1.powf(-beta0 / (1.0 - beta0)) * (1.0 - beta0);
    let c3 = gn.c_gn;
    let pre = chi_alpha * (s - 1.0) / s;
    let gamma1 = (s + 1.0) / s;
    let gamma2 = (2.0 * (s + 1.0) - nf) / (2.0 * s - nf);
    let c3_tilde = pre * c3;
    let c2_tilde = pre * c2;
    Ok(BoundConstants {
        n,
        sigma: s,
        c_gn: gn.c_gn,
        theta0,
        beta0,
        eps1,
        c1,
        c2,
        c3,
        c1_tilde: pre * c1,
        c2_tilde,
        c3_tilde,
        b1: params.lambda_plus() * s,
        b2: c3_tilde * s.powf(gamma1),
        b3: c2_tilde * s.powf(gamma2),
        b4: params.mu
            * params.omega_volume().powf((1.0 - params.k) / s)
            * s.powf((s + params.k - 1.0) / s),
        gamma1,
        gamma2,
    })
}

impl BoundConstants {
    /// Right-hand side `B₁Ψ + B₂Ψ^{γ₁} + B₃Ψ^{γ₂}` of the growth inequality.
    pub fn growth(&self, psi: f64) -> f64 {
        self.b1 * psi + self.b2 * psi.powf(self.gamma1) + self.b3 * psi.powf(self.gamma2)
    }

    /// Aggregate `A` with `B₁Ψ + B₂Ψ^{γ₁} + B₃Ψ^{γ₂} ≤ AΨ^{γ₂}` for `Ψ ≥ Ψ₀`.
    pub fn aggregate(&self, psi0: f64) -> f64 {
        let d = 2.0 * self.sigma - self.n as f64;
        self.b1 * psi0.powf(-2.0 / d) + self.b2 * psi0.powf(-(self.n as f64) / (self.sigma * d)) + self.b3
    }
}

fn check_psi0(psi0: f64) -> Result<()> {
    if psi0 > 0.0 && psi0.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("psi0", format!("must be positive and finite, got {psi0}")))
    }
}

/// `∫_{Ψ₀}^∞ dη / (B₁η + B₂η^{γ₁} + B₃η^{γ₂})`.
///
/// The substitution `η = Ψ₀ x^{−1/(γ₂−1)}` maps the tail onto `x ∈ (0, 1]`
/// with a bounded integrand, which is then integrated adaptively to a
/// relative tolerance of 1e-8.
pub fn lower_bound_integral(psi0: f64, c: &BoundConstants) -> Result<f64> {
    check_psi0(psi0)?;
    let g = c.gamma2 - 1.0;
    let a = (c.gamma2 - c.gamma1) / g;
    let k2 = c.b2 * psi0.powf(c.gamma1 - c.gamma2);
    let k1 = c.b1 * psi0.powf(1.0 - c.gamma2);
    let f = |x: f64| 1.0 / (c.b3 + k2 * x.powf(a) + k1 * x);
    let est = quadrature::integrate(f, 0.0, 1.0, 0.0, 1e-10, 4000)?;
    let value = psi0.powf(1.0 - c.gamma2) / g * est.value;
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("non-finite bound for psi0 = {psi0}")));
    }
    Ok(value)
}

/// `1 / (A (γ₂ − 1) Ψ₀^{γ₂−1})`, never larger than [`lower_bound_integral`].
pub fn lower_bound_explicit(psi0: f64, c: &BoundConstants) -> Result<f64> {
    check_psi0(psi0)?;
    Ok(1.0 / (c.aggregate(psi0) * (c.gamma2 - 1.0) * psi0.powf(c.gamma2 - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub psi0: f64,
    pub t_lower_integral: f64,
    pub t_lower_explicit: f64,
}

pub fn bound_report(psi0: f64, c: &BoundConstants) -> Result<BoundReport> {
    Ok(BoundReport {
        psi0,
        t_lower_integral: lower_bound_integral(psi0, c)?,
        t_lower_explicit: lower_bound_explicit(psi0, c)?,
    })
}
