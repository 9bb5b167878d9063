//! Acceptance gate. Runs every primary criterion at its stated tolerance and
//! prints one PASS/FAIL line each; exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use chemoblow_core::bounds::{compute_constants, lower_bound_explicit, lower_bound_integral, GNConfig};
use chemoblow_core::functionals::{check_mass_bound, diagnose, phi_growth_report, Diagnostics, DiagnosticsConfig};
use chemoblow_core::mass::{density_to_mass, mass_rhs, run_mass};
use chemoblow_core::radial::{build_grid, solve_elliptic, Stretching};
use chemoblow_core::solver::{rhs, run, Trajectory};
use chemoblow_core::Status;

use common::{max_abs, Scenario};

struct Outcome {
    scenario: Scenario,
    traj: Trajectory,
    diag: Diagnostics,
    seconds: f64,
}

fn simulate(scenario: Scenario) -> Outcome {
    let start = Instant::now();
    let traj = run(&scenario.grid, &scenario.params, scenario.u0.clone(), &scenario.ctrl).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let cfg = DiagnosticsConfig::default_for(&scenario.params);
    let diag = diagnose(&scenario.grid, &scenario.params, &traj, &cfg).unwrap();
    Outcome {
        scenario,
        traj,
        diag,
        seconds,
    }
}

fn simulate_all(scenarios: Vec<Scenario>) -> Vec<Outcome> {
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.into_iter().map(|sc| s.spawn(move || simulate(sc))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mass_bound(all: &[&Outcome]) -> Check {
    let mut lines = Vec::new();
    let mut ok = all.len() >= 6;
    let (mut neg, mut zero, mut pos, mut att, mut rep) = (false, false, false, false, false);
    for o in all {
        let p = &o.scenario.params;
        neg |= p.lambda < 0.0;
        zero |= p.lambda == 0.0;
        pos |= p.lambda > 0.0;
        att |= p.dominance() > 0.0;
        rep |= p.dominance() < 0.0;
        let times: Vec<f64> = o.diag.records.iter().map(|r| r.t).collect();
        let masses: Vec<f64> = o.diag.records.iter().map(|r| r.mass).collect();
        let bound = check_mass_bound(p, &times, &masses).unwrap();
        let pass = bound.max_excess <= 1e-6 * bound.m_star && bound.max_comparison_excess <= 1e-6;
        ok &= pass;
        lines.push(format!(
            "{}: excess/m* {:.2e}, vs comparison {:.2e}",
            o.scenario.name,
            bound.max_excess / bound.m_star,
            bound.max_comparison_excess
        ));
    }
    ok &= neg && zero && pos && att && rep;
    ensure(ok, format!("{} scenarios; {}", all.len(), lines.join("; ")))
}

fn rewrite_equivalence(reference: &Outcome) -> Check {
    let sc = &reference.scenario;
    let g = &sc.grid;
    let t_num = reference
        .traj
        .status
        .blowup_time()
        .ok_or("reference run did not blow up")?;
    let interval = sc.ctrl.sample_interval;
    let t_end = (0.8 * t_num / interval).floor() * interval;
    let ctrl = chemoblow_core::StepControl { t_end, ..sc.ctrl };
    let mt = run_mass(g, &sc.params, density_to_mass(g, &sc.u0), &ctrl).map_err(|e| e.to_string())?;
    if mt.status != Status::Completed {
        return Err(format!("mass run ended with {}", mt.status.label()));
    }
    let (mut worst_rhs, mut worst_u, mut compared): (f64, f64, usize) = (0.0, 0.0, 0);
    for (s, m) in reference.traj.samples.iter().zip(&mt.samples) {
        if (s.t - m.t).abs() > 1e-12 {
            return Err(format!("sample times differ: {} vs {}", s.t, m.t));
        }
        let primal_mass = density_to_mass(g, &s.u);
        let du = max_abs(
            &primal_mass
                .iter()
                .zip(&m.mass)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        worst_u = worst_u.max(du / max_abs(&primal_mass));
        let transformed = density_to_mass(g, &rhs(g, &sc.params, &s.u).unwrap());
        let direct = mass_rhs(g, &sc.params, &primal_mass).unwrap();
        let diff: Vec<f64> = transformed.iter().zip(&direct).map(|(a, b)| a - b).collect();
        worst_rhs = worst_rhs.max(max_abs(&diff) / max_abs(&direct));
        compared += 1;
    }
    ensure(
        compared == mt.samples.len() && worst_rhs <= 1e-3 && worst_u <= 1e-2,
        format!("{compared} samples on [0, {t_end:.3e}]: rhs {worst_rhs:.2e} (tol 1e-3), U {worst_u:.2e} (tol 1e-2)"),
    )
}

/// Interior samples where `Ψ` is locally resolved: the second difference is
/// at most a tenth of the centered first difference.
fn smooth_samples(psi: &[f64]) -> Vec<usize> {
    (1..psi.len().saturating_sub(1))
        .filter(|&i| {
            let first = (psi[i + 1] - psi[i - 1]).abs();
            let second = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]).abs();
            first > 0.0 && second <= 0.1 * first
        })
        .collect()
}

fn energy_identity(smooth: &[Outcome], all: &[&Outcome]) -> Check {
    let mut ok = true;
    let mut lines = Vec::new();
    for o in smooth {
        let rec = &o.diag.records;
        let psi: Vec<f64> = rec.iter().map(|r| r.psi).collect();
        let idx = smooth_samples(&psi);
        let worst = idx
            .iter()
            .map(|&i| {
                let sum = rec[i].energy().sum();
                let rate = rec[i].psi_rate_numeric;
                (sum - rate).abs() / sum.abs().max(rate.abs())
            })
            .fold(0.0, f64::max);
        let covered = idx.len() * 2 >= rec.len();
        ok &= worst <= 0.02 && covered;
        lines.push(format!("{}: {:.2e} over {}/{} samples", o.scenario.name, worst, idx.len(), rec.len()));
    }
    let mut signs = 0usize;
    for o in all {
        for r in &o.diag.records {
            signs += 1;
            if !(r.i1 <= 0.0 && r.i5 <= 0.0 && r.i3 <= 0.0) {
                ok = false;
                lines.push(format!(
                    "{} t = {}: I1 {:e}, I3 {:e}, I5 {:e}",
                    o.scenario.name, r.t, r.i1, r.i3, r.i5
                ));
            }
        }
    }
    lines.push(format!("signs checked on {signs} samples"));
    ensure(ok, lines.join("; "))
}

fn blowup_realization(reference: &Outcome, repulsive: &Outcome) -> Check {
    let dt_min = reference.scenario.ctrl.dt_min;
    let last_dt = reference.traj.samples.last().map_or(f64::NAN, |s| s.dt);
    let t_num = reference.traj.status.blowup_time();
    let blew = matches!(t_num, Some(t) if t.is_finite() && t > 0.0);
    let collapsed = last_dt < 100.0 * dt_min;
    let completed = repulsive.traj.status == Status::Completed
        && repulsive.traj.final_time() == repulsive.scenario.ctrl.t_end;
    let fast = reference.seconds < 120.0 && repulsive.seconds < 120.0;
    ensure(
        blew && collapsed && completed && fast && reference.scenario.params.k_in_blowup_range(),
        format!(
            "attractive: {} at T_num {:?} with last dt {:.2e} in {:.1}s; repulsive: {} at t {} in {:.1}s",
            reference.traj.status.label(),
            t_num,
            last_dt,
            reference.seconds,
            repulsive.traj.status.label(),
            repulsive.traj.final_time(),
            repulsive.seconds
        ),
    )
}

/// Independent oracle: composite trapezoid rule for the tail integral after
/// `η = Ψ₀/τ`, which maps it onto `τ ∈ (0, 1]` with integrand
/// `Ψ₀ / (τ² g(Ψ₀/τ))`, vanishing at τ = 0 when `γ₂ > 2`.
fn trapezoid_bound(psi0: f64, b1: f64, b2: f64, b3: f64, g1: f64, g2: f64) -> f64 {
    let panels = 10_000_000usize;
    let h = 1.0 / panels as f64;
    let f = |tau: f64| {
        if tau == 0.0 {
            return 0.0;
        }
        let eta = psi0 / tau;
        psi0 / (tau * tau * (b1 * eta + b2 * eta.powf(g1) + b3 * eta.powf(g2)))
    };
    let mut sum = 0.5 * (f(0.0) + f(1.0));
    for i in 1..panels {
        sum += f(i as f64 * h);
    }
    sum * h
}

fn bound_consistency(blowups: &[&Outcome]) -> Check {
    let mut ok = true;
    let mut lines = Vec::new();
    for o in blowups {
        let t_num = o.traj.status.blowup_time().ok_or("run did not blow up")?;
        let psi0 = o.diag.records[0].psi;
        let c = &o.diag.constants;
        let integral = lower_bound_integral(psi0, c).unwrap();
        let explicit = lower_bound_explicit(psi0, c).unwrap();
        ok &= explicit <= integral && integral <= t_num;
        lines.push(format!(
            "{}: {:.3e} <= {:.3e} <= {:.4e}",
            o.scenario.name, explicit, integral, t_num
        ));
    }
    let params = blowups[0].scenario.params;
    let c = compute_constants(&params, &GNConfig::default()).unwrap();
    let mut worst_oracle: f64 = 0.0;
    for psi0 in [0.05, 1.0, 37.0, blowups[0].diag.records[0].psi] {
        let ours = lower_bound_integral(psi0, &c).unwrap();
        let oracle = trapezoid_bound(psi0, c.b1, c.b2, c.b3, c.gamma1, c.gamma2);
        worst_oracle = worst_oracle.max((ours / oracle - 1.0).abs());
    }
    let mut single = c;
    single.b1 = 0.0;
    single.b2 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for psi0 in [0.01_f64, 2.5, 1e4] {
        let exact = 1.0 / (single.b3 * (single.gamma2 - 1.0) * psi0.powf(single.gamma2 - 1.0));
        let ours = lower_bound_integral(psi0, &single).unwrap();
        worst_closed = worst_closed.max((ours / exact - 1.0).abs());
    }
    ok &= worst_oracle <= 1e-6 && worst_closed <= 1e-10;
    lines.push(format!("oracle {worst_oracle:.2e} (tol 1e-6), closed form {worst_closed:.2e} (tol 1e-10)"));
    ensure(ok, lines.join("; "))
}

fn elliptic_convergence() -> Check {
    use std::f64::consts::PI;
    let (n, radius, a, b) = (3usize, 1.0, 2.0, 1.5);
    let exact = |r: f64| (PI * r / radius).cos();
    // −Δφ + bφ for φ = cos(πr/R), divided by a
    let source = |r: f64| {
        let k = PI / radius;
        let lap = if r > 0.0 {
            -k * k * (k * r).cos() - (n as f64 - 1.0) * k * (k * r).sin() / r
        } else {
            -(n as f64) * k * k
        };
        (-lap + b * exact(r)) / a
    };
    let mut errors = Vec::new();
    for cells in [64, 128, 256] {
        let g = build_grid(n, radius, cells, Stretching::Uniform).unwrap();
        let phi = solve_elliptic(&g, &g.sample(source), a, b).unwrap();
        let err = phi
            .iter()
            .zip(g.centers())
            .map(|(p, r)| (p - exact(*r)).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let g = build_grid(n, radius, 256, Stretching::Geometric(0.985)).unwrap();
    let phi = solve_elliptic(&g, &vec![3.0; 256], a, b).unwrap();
    let worst_const = phi.iter().map(|p| (p / (a * 3.0 / b) - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        orders.iter().all(|p| (1.8..=2.2).contains(p)) && worst_const <= 1e-12,
        format!(
            "errors {}, orders {orders:.3?}, constant source {worst_const:.1e}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn phi_diagnostics(reference: &Outcome) -> Check {
    let t_num = reference.traj.status.blowup_time().ok_or("reference run did not blow up")?;
    let cfg = DiagnosticsConfig::default_for(&reference.scenario.params).moment;
    let times: Vec<f64> = reference.diag.records.iter().map(|r| r.t).collect();
    let phis: Vec<f64> = reference.diag.records.iter().map(|r| r.phi).collect();
    let report = phi_growth_report(&times, &phis, &cfg, t_num.min(0.5));
    ensure(
        report.positive,
        format!(
            "infimum {:.3e} over (0, {:.4e}), p = {:.4}, s0 = {}",
            report.infimum,
            t_num.min(0.5),
            cfg.p,
            cfg.s0
        ),
    )
}

fn report(name: &str, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("PASS {name}: {detail} [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("FAIL {name}: {detail} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut scenarios = vec![
        common::reference_blowup(),
        common::repulsive_counterpart(),
        common::secondary_blowup(),
        common::equilibrium(),
    ];
    scenarios.extend(common::smooth_suite());
    let mut outcomes = simulate_all(scenarios).into_iter();
    let reference = outcomes.next().unwrap();
    let repulsive = outcomes.next().unwrap();
    let secondary = outcomes.next().unwrap();
    let rest: Vec<Outcome> = outcomes.collect();
    println!("simulations finished in {:.1}s", start.elapsed().as_secs_f64());
    let (equilibrium, smooth) = rest.split_at(1);
    let all: Vec<&Outcome> = [&reference, &repulsive, &secondary, &equilibrium[0]]
        .into_iter()
        .chain(smooth)
        .collect();

    let mut ok = true;
    ok &= report("mass bound", || mass_bound(&all));
    ok &= report("radial rewrite equivalence", || rewrite_equivalence(&reference));
    ok &= report("energy decomposition identity", || energy_identity(smooth, &all));
    ok &= report("blow-up realization", || blowup_realization(&reference, &repulsive));
    ok &= report("bound consistency", || bound_consistency(&[&reference, &secondary]));
    ok &= report("elliptic convergence", elliptic_convergence);
    ok &= report("phi diagnostics", || phi_diagnostics(&reference));
    println!("acceptance suite finished in {:.1}s", start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
