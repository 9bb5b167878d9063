//! Model parameters, ball geometry and initial data.
//!
//! The system integrated by this crate is, for x in the ball B_R(0) of R^n,
//!
//! ```text
//! u_t = Δu − χ∇·(u∇v) + ξ∇·(u∇w) + λu − μu^k
//! 0   = Δv + αu − βv
//! 0   = Δw + γu − δw
//! ```
//!
//! with homogeneous Neumann conditions on all three components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::quadrature;

/// Raw, unchecked parameter record as read from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    /// Linear growth rate; may be negative.
    pub lambda: f64,
    pub mu: f64,
    /// Degradation exponent.
    pub k: f64,
    pub chi: f64,
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Space dimension.
    pub n: i64,
    /// Ball radius.
    pub radius: f64,
}

/// A parameter record that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    rec: ParamRecord,
}

impl std::ops::Deref for ModelParams {
    type Target = ParamRecord;

    fn deref(&self) -> &ParamRecord {
        &self.rec
    }
}

/// Check every positivity and range constraint, reporting all violations at once.
pub fn validate_params(raw: &ParamRecord) -> std::result::Result<ModelParams, ValidationError> {
    let mut err = ValidationError::default();
    err.check(raw.lambda.is_finite(), "lambda", "finite value", raw.lambda);
    err.check(raw.mu > 0.0 && raw.mu.is_finite(), "mu", "mu > 0", raw.mu);
    err.check(raw.k > 1.0 && raw.k.is_finite(), "k", "k > 1", raw.k);
    for (name, value) in [
        ("chi", raw.chi),
        ("xi", raw.xi),
        ("alpha", raw.alpha),
        ("beta", raw.beta),
        ("gamma", raw.gamma),
        ("delta", raw.delta),
    ] {
        let constraint = format!("{name} > 0");
        err.check(value > 0.0 && value.is_finite(), name, &constraint, value);
    }
    err.check(raw.n >= 3, "n", "n >= 3", raw.n);
    err.check(raw.radius > 0.0 && raw.radius.is_finite(), "radius", "radius > 0", raw.radius);
    err.into_result()?;
    Ok(ModelParams { rec: *raw })
}

impl ModelParams {
    pub fn record(&self) -> ParamRecord {
        self.rec
    }

    pub fn dim(&self) -> usize {
        self.rec.n as usize
    }

    /// Attraction dominance χα − ξγ.
    pub fn dominance(&self) -> f64 {
        self.chi * self.alpha - self.xi * self.gamma
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda.max(0.0)
    }

    /// Volume of the ball B_R(0).
    pub fn omega_volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.rec.n as i32)
    }

    /// Whether `k` lies below the dimension-dependent blow-up ceiling.
    pub fn k_in_blowup_range(&self) -> bool {
        self.k < k_blowup_ceiling(self.dim())
    }
}

/// Upper limit on the degradation exponent below which concentrated data
/// are known to blow up: 7/6 for n ∈ {3, 4}, 1 + 1/(2(n−1)) for n ≥ 5.
pub fn k_blowup_ceiling(n: usize) -> f64 {
    if n <= 4 {
        7.0 / 6.0
    } else {
        1.0 + 1.0 / (2.0 * (n as f64 - 1.0))
    }
}

/// Volume of the unit ball in R^n, π^{n/2}/Γ(n/2+1), via V_n = 2π/n · V_{n−2}.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut d = if n % 2 == 0 { 2 } else { 3 };
    while d <= n {
        v *= 2.0 * std::f64::consts::PI / d as f64;
        d += 2;
    }
    v
}

/// Surface area of the unit sphere S^{n−1}.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// The mass level no trajectory can exceed:
/// `max{ initial_mass, (λ₊/μ)^{1/(k−1)} |Ω| }`.
pub fn m_star(params: &ModelParams, initial_mass: f64) -> Result<f64> {
    if !(initial_mass >= 0.0) {
        return Err(Error::arg("initial_mass", format!("must be >= 0, got {initial_mass}")));
    }
    let plateau = (params.lambda_plus() / params.mu).powf(1.0 / (params.k - 1.0)) * params.omega_volume();
    Ok(initial_mass.max(plateau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    SingularCapped,
    GaussianBump,
    Constant,
}

/// Radially symmetric initial density.
///
/// The meaning of `amplitude` and `cap` depends on the kind:
///
/// * `SingularCapped`: `u₀(r) = scale · min{amplitude · r^{−n(n−1)}, cap}`.
/// * `GaussianBump`: `u₀(r) = scale · cap · exp(−(r/amplitude)²)`, i.e. `amplitude` is the width.
/// * `Constant`: `u₀ ≡ scale · cap`; `amplitude` is unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialProfile {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub cap: f64,
    pub scale: f64,
    n: usize,
    radius: f64,
}

pub fn make_profile(
    kind: ProfileKind,
    amplitude: f64,
    cap: f64,
    scale: f64,
    params: &ModelParams,
) -> Result<InitialProfile> {
    for (field, value) in [("amplitude", amplitude), ("cap", cap), ("scale", scale)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::arg(field, format!("must be positive and finite, got {value}")));
        }
    }
    Ok(InitialProfile {
        kind,
        amplitude,
        cap,
        scale,
        n: params.dim(),
        radius: params.radius,
    })
}

impl InitialProfile {
    fn singular_exponent(&self) -> i32 {
        (self.n * (self.n - 1)) as i32
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::SingularCapped => {
                if r <= 0.0 {
                    self.scale * self.cap
                } else {
                    let singular = self.amplitude * r.powi(-self.singular_exponent());
                    self.scale * singular.min(self.cap)
                }
            }
            ProfileKind::GaussianBump => {
                let x = r / self.amplitude;
                self.scale * self.cap * (-x * x).exp()
            }
            ProfileKind::Constant => self.scale * self.cap,
        }
    }

    /// Radius where the power-law branch meets the cap (singular kind only).
    pub fn knee_radius(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::SingularCapped => {
                Some((self.amplitude / self.cap).powf(1.0 / self.singular_exponent() as f64))
            }
            _ => None,
        }
    }

    /// Mass ∫_{B_ρ(0)} u₀ dx, ρ clipped to the domain radius.
    pub fn mass_within(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::arg("rho", format!("must be >= 0, got {rho}")));
        }
        let rho = rho.min(self.radius);
        let sigma = unit_sphere_area(self.n);
        let n1 = (self.n - 1) as i32;
        let integrand = |r: f64| r.powi(n1) * self.evaluate(r);
        let mut breaks = vec![0.0];
        if let Some(knee) = self.knee_radius() {
            if knee > 0.0 && knee < rho {
                breaks.push(knee);
            }
        }
        breaks.push(rho);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += quadrature::integrate(integrand, w[0], w[1], 0.0, 1e-12, 2000)?.value;
        }
        Ok(sigma * total)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.mass_within(self.radius)
    }
}
