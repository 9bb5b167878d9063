//! Built-in verification suites.
//!
//! `fast` checks operators, identities and bounds on small problems; `full`
//! adds the concentrated blow-up scenario, its repulsive counterpart and a
//! three-level grid refinement of a smooth run.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use chemoblow_core::bounds::{compute_constants, lower_bound_explicit, lower_bound_integral, GNConfig};
use chemoblow_core::functionals::{check_mass_bound, diagnose, phi_growth_report, Diagnostics, DiagnosticsConfig};
use chemoblow_core::mass::compare_formulations;
use chemoblow_core::radial::solve_elliptic;
use chemoblow_core::solver::{reaction, run_with_hook, signals, transport_with_hook, FluxHook, Trajectory};
use chemoblow_core::{
    build_grid, make_profile, validate_params, ModelParams, ParamRecord, ProfileKind, RadialGrid, Status, StepControl,
    Stretching,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Fast,
    Full,
}

/// Deliberate defects for exercising the checks themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Injection {
    #[default]
    None,
    /// Flip the sign of the advective flux on the inner side of every face.
    FlipFlux,
}

impl Injection {
    fn hook(self) -> FluxHook {
        match self {
            Injection::None => FluxHook::Exact,
            Injection::FlipFlux => FluxHook::FlipInnerSide,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Distance to the failure threshold, positive when passing.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64, detail: String) -> Check {
        Check {
            name: name.into(),
            passed: value <= tol,
            value,
            margin: tol - value,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, min: f64, detail: String) -> Check {
        Check {
            name: name.into(),
            passed: value >= min,
            value,
            margin: value - min,
            detail,
        }
    }

    fn between(name: &str, value: f64, lo: f64, hi: f64, detail: String) -> Check {
        Check {
            name: name.into(),
            passed: (lo..=hi).contains(&value),
            value,
            margin: (value - lo).min(hi - value),
            detail,
        }
    }

    fn failed(name: &str, detail: String) -> Check {
        Check {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            margin: f64::NAN,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn params(lambda: f64, chi: f64, xi: f64) -> ModelParams {
    validate_params(&ParamRecord {
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
    })
    .expect("built-in parameters are valid")
}

fn max_abs(x: impl IntoIterator<Item = f64>) -> f64 {
    x.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Run {
    grid: RadialGrid,
    params: ModelParams,
    traj: Trajectory,
    diag: Diagnostics,
    ctrl: StepControl,
}

fn simulate(
    params: ModelParams,
    grid: RadialGrid,
    kind: ProfileKind,
    amplitude: f64,
    cap: f64,
    ctrl: StepControl,
    hook: FluxHook,
) -> Result<Run, String> {
    let profile = make_profile(kind, amplitude, cap, 1.0, &params).map_err(|e| e.to_string())?;
    let u0 = grid.cell_averages(|r| profile.evaluate(r)).map_err(|e| e.to_string())?;
    let traj = run_with_hook(&grid, &params, u0, &ctrl, hook).map_err(|e| e.to_string())?;
    let diag = diagnose(&grid, &params, &traj, &DiagnosticsConfig::default_for(&params)).map_err(|e| e.to_string())?;
    Ok(Run {
        grid,
        params,
        traj,
        diag,
        ctrl,
    })
}

fn elliptic_checks(levels: [usize; 3]) -> Vec<Check> {
    let (n, a, b) = (3usize, 2.0, 1.5);
    let exact = |r: f64| (PI * r).cos();
    let source = |r: f64| {
        let lap = if r > 0.0 {
            -PI * PI * (PI * r).cos() - (n as f64 - 1.0) * PI * (PI * r).sin() / r
        } else {
            -(n as f64) * PI * PI
        };
        (b * exact(r) - lap) / a
    };
    let mut errors = Vec::new();
    for cells in levels {
        let g = build_grid(n, 1.0, cells, Stretching::Uniform).expect("valid grid");
        match solve_elliptic(&g, &g.sample(source), a, b) {
            Ok(phi) => errors.push(max_abs(phi.iter().zip(g.centers()).map(|(p, r)| p - exact(*r)))),
            Err(e) => return vec![Check::failed("elliptic_convergence", e.to_string())],
        }
    }
    let order = (errors[0] / errors[1]).log2().min((errors[1] / errors[2]).log2());
    let g = build_grid(n, 1.0, 256, Stretching::Geometric(0.985)).expect("valid grid");
    let constant = solve_elliptic(&g, &vec![3.0; 256], a, b)
        .map(|phi| max_abs(phi.iter().map(|p| p / (3.0 * a / b) - 1.0)))
        .unwrap_or(f64::INFINITY);
    vec![
        Check::between(
            "elliptic_convergence",
            order,
            1.8,
            2.2,
            format!("max-norm errors {errors:?} on {levels:?} cells"),
        ),
        Check::at_most("elliptic_constant_source", constant, 1e-12, "relative error".into()),
    ]
}

fn conservation_checks(hook: FluxHook) -> Vec<Check> {
    let g = build_grid(3, 1.0, 128, Stretching::Geometric(0.985)).expect("valid grid");
    let p = params(0.0, 2.0, 1.0);
    let u = g.sample(|r| 1.0 + 20.0 * (-(r / 0.15).powi(2)).exp());
    let Ok((v, w)) = signals(&g, &p, &u) else {
        return vec![Check::failed("transport_conservation", "signal solve failed".into())];
    };
    let tr = transport_with_hook(&g, &p, &u, &v, &w, hook);
    let scale: f64 = g.volumes().iter().zip(&tr).map(|(a, b)| (a * b).abs()).sum();
    let net = g.integrate(&tr).abs() / scale;

    // mass budget of a short run: m(t) − m(0) against ∫∫ reaction by trapezoids
    let ctrl = StepControl {
        t_end: 0.01,
        sample_interval: 2.5e-4,
        ..StepControl::default()
    };
    let budget = run_with_hook(&g, &p, u.clone(), &ctrl, hook).map(|traj| {
        let s = &traj.samples;
        let mut expect = 0.0;
        for w in s.windows(2) {
            let r0 = g.integrate(&reaction(&p, &w[0].u));
            let r1 = g.integrate(&reaction(&p, &w[1].u));
            expect += 0.5 * (w[1].t - w[0].t) * (r0 + r1);
        }
        let m0 = g.integrate(&s[0].u);
        let m1 = g.integrate(&s[s.len() - 1].u);
        ((m1 - m0) - expect).abs() / m0
    });
    vec![
        Check::at_most(
            "transport_conservation",
            net,
            1e-12,
            "|∫ transport| relative to ∫|transport|".into(),
        ),
        match budget {
            Ok(err) => Check::at_most("mass_budget", err, 1e-4, "relative to initial mass over t ∈ [0, 0.01]".into()),
            Err(e) => Check::failed("mass_budget", e.to_string()),
        },
    ]
}

/// Interior samples where `Ψ` is locally resolved: the second difference is
/// at most a tenth of the centered first difference.
pub fn smooth_samples(psi: &[f64]) -> Vec<usize> {
    (1..psi.len().saturating_sub(1))
        .filter(|&i| {
            let first = (psi[i + 1] - psi[i - 1]).abs();
            let second = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]).abs();
            first > 0.0 && second <= 0.1 * first
        })
        .collect()
}

fn run_checks(prefix: &str, run: &Run) -> Vec<Check> {
    let rec = &run.diag.records;
    let psi: Vec<f64> = rec.iter().map(|r| r.psi).collect();
    let idx = smooth_samples(&psi);
    let identity = idx
        .iter()
        .map(|&i| {
            let sum = rec[i].energy().sum();
            let rate = rec[i].psi_rate_numeric;
            (sum - rate).abs() / sum.abs().max(rate.abs())
        })
        .fold(0.0, f64::max);
    let signs = rec
        .iter()
        .map(|r| r.i1.max(r.i3).max(r.i5))
        .fold(f64::NEG_INFINITY, f64::max);
    let times: Vec<f64> = rec.iter().map(|r| r.t).collect();
    let masses: Vec<f64> = rec.iter().map(|r| r.mass).collect();
    let mut checks = vec![
        Check::at_most(
            &format!("{prefix}_energy_identity"),
            identity,
            0.02,
            format!("{} of {} samples in smooth windows", idx.len(), rec.len()),
        ),
        Check::at_most(
            &format!("{prefix}_energy_signs"),
            signs,
            0.0,
            "largest of I1, I3, I5 over all samples".into(),
        ),
    ];
    match check_mass_bound(&run.params, &times, &masses) {
        Ok(m) => {
            checks.push(Check::at_most(
                &format!("{prefix}_mass_bound"),
                m.max_excess / m.m_star,
                1e-6,
                format!("m_star = {}", m.m_star),
            ));
            checks.push(Check::at_most(
                &format!("{prefix}_mass_comparison"),
                m.max_comparison_excess,
                1e-6,
                "relative excess over the comparison solution".into(),
            ));
        }
        Err(e) => checks.push(Check::failed(&format!("{prefix}_mass_bound"), e.to_string())),
    }
    checks
}

fn cross_checks(prefix: &str, run: &Run, window: f64) -> Vec<Check> {
    match compare_formulations(&run.grid, &run.params, &run.traj, &run.ctrl, window) {
        Ok(a) => vec![
            Check::at_most(
                &format!("{prefix}_cross_rhs"),
                a.max_rhs_error,
                1e-3,
                format!("{} samples on [0, {:.4e}]", a.samples, a.window_end),
            ),
            Check::at_most(
                &format!("{prefix}_cross_mass"),
                a.max_mass_error,
                1e-2,
                format!("{} samples on [0, {:.4e}]", a.samples, a.window_end),
            ),
        ],
        Err(e) => vec![Check::failed(&format!("{prefix}_cross_rhs"), e.to_string())],
    }
}

fn bound_checks() -> Vec<Check> {
    let mut worst_order = f64::NEG_INFINITY;
    let mut worst_closed: f64 = 0.0;
    for lambda in [-1.0, 0.0, 1.0, 3.0] {
        for chi in [0.5, 2.0, 8.0] {
            let p = params(lambda, chi, 1.0);
            for c_gn in [0.5, 10.0, 100.0] {
                for sigma in [1.6, 2.0, 3.5] {
                    let Ok(c) = compute_constants(&p, &GNConfig { c_gn, sigma }) else {
                        return vec![Check::failed("bound_ordering", "constants rejected".into())];
                    };
                    for psi0 in [1e-3, 0.1, 1.0, 10.0, 1e3] {
                        let (Ok(i), Ok(e)) = (lower_bound_integral(psi0, &c), lower_bound_explicit(psi0, &c)) else {
                            return vec![Check::failed("bound_ordering", format!("quadrature failed at {psi0}"))];
                        };
                        worst_order = worst_order.max(e / i - 1.0);
                        let mut single = c;
                        single.b1 = 0.0;
                        single.b2 = 0.0;
                        let exact = psi0.powf(1.0 - c.gamma2) / (c.b3 * (c.gamma2 - 1.0));
                        let got = lower_bound_integral(psi0, &single).unwrap_or(f64::NAN);
                        worst_closed = worst_closed.max((got / exact - 1.0).abs());
                    }
                }
            }
        }
    }
    vec![
        Check::at_most("bound_ordering", worst_order, 1e-9, "max of explicit/integral − 1 on a lattice".into()),
        Check::at_most("bound_closed_form", worst_closed, 1e-10, "single-term relative error".into()),
    ]
}

fn smooth_run(hook: FluxHook, cells: usize) -> Result<Run, String> {
    let ctrl = StepControl {
        t_end: 0.1,
        ..StepControl::default()
    };
    let grid = build_grid(3, 1.0, cells, Stretching::Geometric(0.985)).expect("valid grid");
    simulate(params(1.0, 2.0, 1.0), grid, ProfileKind::GaussianBump, 0.2, 10.0, ctrl, hook)
}

fn blowup_checks(hook: FluxHook) -> Vec<Check> {
    let ctrl = StepControl {
        sample_interval: 2e-5,
        ..StepControl::default()
    };
    let grid = || build_grid(3, 1.0, 512, Stretching::Geometric(0.99)).expect("valid grid");
    let attract = simulate(params(1.0, 2.0, 1.0), grid(), ProfileKind::SingularCapped, 1e-3, 1e3, ctrl, hook);
    let repel_ctrl = StepControl {
        sample_interval: 1e-3,
        ..ctrl
    };
    let repel = simulate(params(1.0, 2.0, 3.0), grid(), ProfileKind::SingularCapped, 1e-3, 1e3, repel_ctrl, hook);
    let mut checks = Vec::new();
    match &attract {
        Ok(run) => match run.traj.status.blowup_time() {
            Some(t_num) => {
                let last_dt = run.traj.samples.last().map_or(f64::NAN, |s| s.dt);
                checks.push(Check::at_most(
                    "blowup_dt_collapse",
                    last_dt,
                    100.0 * ctrl.dt_min,
                    format!("T_num = {t_num:.6e}"),
                ));
                let psi0 = run.diag.records[0].psi;
                let c = &run.diag.constants;
                let integral = lower_bound_integral(psi0, c).unwrap_or(f64::NAN);
                let explicit = lower_bound_explicit(psi0, c).unwrap_or(f64::NAN);
                checks.push(Check::at_least(
                    "blowup_bound_order",
                    (t_num - integral).min(integral - explicit),
                    0.0,
                    format!("{explicit:.3e} <= {integral:.3e} <= {t_num:.4e}"),
                ));
                let times: Vec<f64> = run.diag.records.iter().map(|r| r.t).collect();
                let phis: Vec<f64> = run.diag.records.iter().map(|r| r.phi).collect();
                let moment = DiagnosticsConfig::default_for(&run.params).moment;
                let growth = phi_growth_report(&times, &phis, &moment, t_num.min(0.5));
                checks.push(Check {
                    name: "blowup_phi_ratio".into(),
                    passed: growth.positive,
                    value: growth.infimum,
                    margin: growth.infimum,
                    detail: "infimum over (0, min{1/2, T_num})".into(),
                });
                checks.extend(run_checks("blowup", run).into_iter().filter(|c| !c.name.ends_with("identity")));
                checks.extend(cross_checks("blowup", run, 0.8 * t_num));
            }
            None => checks.push(Check::failed(
                "blowup_detected",
                format!("ended with {}", run.traj.status.label()),
            )),
        },
        Err(e) => checks.push(Check::failed("blowup_detected", e.clone())),
    }
    checks.push(match &repel {
        Ok(run) => Check {
            name: "repulsive_completes".into(),
            passed: run.traj.status == Status::Completed,
            value: run.traj.final_time(),
            margin: run.traj.final_time() - run.ctrl.t_end,
            detail: format!("ended with {}", run.traj.status.label()),
        },
        Err(e) => Check::failed("repulsive_completes", e.clone()),
    });
    checks
}

/// Observed order of the density at t = 0.05 on uniform 64/128/256-cell grids.
fn refinement_check() -> Check {
    let p = params(1.0, 2.0, 1.0);
    let ctrl = StepControl {
        t_end: 0.05,
        sample_interval: 0.05,
        rel_change: 1e-3,
        ..StepControl::default()
    };
    let mut finals = Vec::new();
    for cells in [64, 128, 256] {
        let grid = build_grid(3, 1.0, cells, Stretching::Uniform).expect("valid grid");
        match simulate(p, grid, ProfileKind::GaussianBump, 0.2, 10.0, ctrl, FluxHook::Exact) {
            Ok(run) => finals.push((run.grid.clone(), run.traj.samples.last().map(|s| s.u.clone()).unwrap_or_default())),
            Err(e) => return Check::failed("grid_refinement", e),
        }
    }
    // volume-weighted restriction of a fine field onto the next coarser grid
    let restrict = |fine: &RadialGrid, u: &[f64]| -> Vec<f64> {
        let vol = fine.volumes();
        (0..u.len() / 2)
            .map(|i| (vol[2 * i] * u[2 * i] + vol[2 * i + 1] * u[2 * i + 1]) / (vol[2 * i] + vol[2 * i + 1]))
            .collect()
    };
    let l1 = |g: &RadialGrid, a: &[f64], b: &[f64]| -> f64 {
        g.volumes().iter().zip(a.iter().zip(b)).map(|(v, (x, y))| v * (x - y).abs()).sum()
    };
    let e1 = l1(&finals[0].0, &finals[0].1, &restrict(&finals[1].0, &finals[1].1));
    let e2 = l1(&finals[1].0, &finals[1].1, &restrict(&finals[2].0, &finals[2].1));
    Check::at_least(
        "grid_refinement",
        (e1 / e2).log2(),
        1.0,
        format!("L1 successive differences {e1:.3e}, {e2:.3e}"),
    )
}

pub fn run_suite(suite: Suite, inject: Injection) -> Report {
    let hook = inject.hook();
    let mut checks = elliptic_checks(match suite {
        Suite::Fast => [32, 64, 128],
        Suite::Full => [64, 128, 256],
    });
    checks.extend(conservation_checks(hook));
    checks.extend(bound_checks());
    match smooth_run(hook, 128) {
        Ok(run) => {
            checks.extend(run_checks("smooth", &run));
            checks.extend(cross_checks("smooth", &run, run.ctrl.t_end));
        }
        Err(e) => checks.push(Check::failed("smooth_run", e)),
    }
    if suite == Suite::Full {
        checks.extend(blowup_checks(hook));
        checks.push(refinement_check());
    }
    Report {
        suite: match suite {
            Suite::Fast => "fast",
            Suite::Full => "full",
        },
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Run a suite, timing it.
pub fn timed(suite: Suite, inject: Injection) -> (Report, f64) {
    let start = Instant::now();
    let report = run_suite(suite, inject);
    (report, start.elapsed().as_secs_f64())
}
