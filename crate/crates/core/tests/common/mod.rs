#![allow(dead_code)]

use chemoblow_core::model::{make_profile, validate_params, ModelParams, ParamRecord, ProfileKind};
use chemoblow_core::radial::{build_grid, RadialGrid, Stretching};
use chemoblow_core::solver::StepControl;

pub struct Scenario {
    pub name: &'static str,
    pub params: ModelParams,
    pub grid: RadialGrid,
    pub u0: Vec<f64>,
    pub ctrl: StepControl,
}

pub fn record(lambda: f64, chi: f64, xi: f64) -> ParamRecord {
    ParamRecord {
        lambda,
        mu: 1.0,
        k: 1.1,
        chi,
        xi,
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 1.0,
        n: 3,
        radius: 1.0,
    }
}

pub fn blowup_grid() -> RadialGrid {
    build_grid(3, 1.0, 512, Stretching::Geometric(0.99)).unwrap()
}

fn scenario(
    name: &'static str,
    rec: ParamRecord,
    kind: ProfileKind,
    amplitude: f64,
    cap: f64,
    ctrl: StepControl,
) -> Scenario {
    let params = validate_params(&rec).unwrap();
    let profile = make_profile(kind, amplitude, cap, 1.0, &params).unwrap();
    let grid = blowup_grid();
    let u0 = grid.cell_averages(|r| profile.evaluate(r)).unwrap();
    Scenario {
        name,
        params,
        grid,
        u0,
        ctrl,
    }
}

/// Concentrated singular-capped data with χα − ξγ = 1.
pub fn reference_blowup() -> Scenario {
    scenario(
        "reference_blowup",
        record(1.0, 2.0, 1.0),
        ProfileKind::SingularCapped,
        1e-3,
        1e3,
        StepControl {
            t_end: 1.0,
            sample_interval: 2e-5,
            ..StepControl::default()
        },
    )
}

/// Same data as [`reference_blowup`] with χα − ξγ = −1.
pub fn repulsive_counterpart() -> Scenario {
    let mut s = scenario(
        "repulsive_counterpart",
        record(1.0, 2.0, 3.0),
        ProfileKind::SingularCapped,
        1e-3,
        1e3,
        StepControl {
            t_end: 1.0,
            sample_interval: 2e-5,
            ..StepControl::default()
        },
    );
    s.ctrl.sample_interval = 1e-3;
    s
}

/// A second blow-up run with a lower cap and stronger attraction.
pub fn secondary_blowup() -> Scenario {
    scenario(
        "secondary_blowup",
        record(0.0, 3.0, 1.0),
        ProfileKind::SingularCapped,
        1e-3,
        300.0,
        StepControl {
            t_end: 1.0,
            sample_interval: 5e-5,
            ..StepControl::default()
        },
    )
}

pub fn smooth(name: &'static str, lambda: f64, chi: f64, xi: f64, width: f64, height: f64, t_end: f64) -> Scenario {
    scenario(
        name,
        record(lambda, chi, xi),
        ProfileKind::GaussianBump,
        width,
        height,
        StepControl {
            t_end,
            ..StepControl::default()
        },
    )
}

/// The three smooth scenarios used for the energy identity.
pub fn smooth_suite() -> Vec<Scenario> {
    vec![
        smooth("growth_attractive", 1.0, 2.0, 1.0, 0.2, 10.0, 0.5),
        smooth("decay_repulsive", -1.0, 1.0, 2.0, 0.3, 5.0, 0.5),
        smooth("neutral_attractive", 0.0, 2.0, 1.0, 0.15, 20.0, 0.3),
    ]
}

/// Spatially constant logistic equilibrium, the equality case of the mass bound.
pub fn equilibrium() -> Scenario {
    scenario(
        "equilibrium",
        record(1.0, 2.0, 1.0),
        ProfileKind::Constant,
        1.0,
        1.0,
        StepControl {
            t_end: 0.2,
            ..StepControl::default()
        },
    )
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
