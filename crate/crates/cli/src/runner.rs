use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use chemoblow_core::bounds::{bound_report, compute_constants, BoundConstants};
use chemoblow_core::functionals::{
    check_mass_bound, diagnose, phi_growth_report, psi, DiagnosticsRecord,
};
use chemoblow_core::mass::{compare_formulations, FormulationAgreement};
use chemoblow_core::model::m_star;
use chemoblow_core::solver::{run, Snapshot};
use chemoblow_core::{ParamRecord, Status};

use crate::config::Scenario;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: &str = "chemoblow-summary-v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: &'static str,
    pub scenario: String,
    /// `completed`, `blow_up`, `dt_underflow`, `fault` or `dry_run`.
    pub outcome: String,
    pub fault_reason: Option<String>,
    pub t_num: Option<f64>,
    pub final_time: Option<f64>,
    pub steps: Option<u64>,
    pub rejections: Option<u64>,
    pub cells: usize,
    pub initial_mass: f64,
    pub psi0: f64,
    pub t_lb_integral: f64,
    pub t_lb_explicit: f64,
    /// `t_lb_integral ≤ t_num`, only for blow-up runs.
    pub bound_consistent: Option<bool>,
    /// Blow-up before `t = 1/2`, only for blow-up runs.
    pub blow_up_before_half: Option<bool>,
    pub m_star: f64,
    /// `max_t (mass − m_star)`.
    pub max_mass_margin: Option<f64>,
    pub max_comparison_excess: Option<f64>,
    /// Infimum of `Φ'/(s0^{p−3}Φ²)` over `(0, min{1/2, T})`.
    pub phi_ratio_infimum: Option<f64>,
    pub c_gn_required: Option<f64>,
    pub constants: BoundConstants,
    pub params: ParamRecord,
    pub cross_check: Option<FormulationAgreement>,
}

impl RunSummary {
    /// Exit code of a single run: 0 for completed, blow-up and dry runs, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self.outcome.as_str() {
            "completed" | "blow_up" | "dry_run" => 0,
            _ => 2,
        }
    }
}

/// One `u(r, t)` snapshot row of the profiles table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub t: f64,
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    pub profiles: Vec<ProfileRow>,
    pub wall_seconds: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Run a scenario end to end; with `dry_run` only the bounds at t = 0 are evaluated.
pub fn execute(sc: &Scenario, dry_run: bool) -> Result<RunOutput> {
    let start = Instant::now();
    let grid = &sc.grid;
    let u0 = grid.cell_averages(|r| sc.profile.evaluate(r))?;
    let sigma = sc.diagnostics.gn.sigma;
    let constants = compute_constants(&sc.params, &sc.diagnostics.gn)?;
    let psi0 = psi(grid, &u0, sigma)?;
    let bounds = bound_report(psi0, &constants)?;
    let initial_mass = grid.integrate(&u0);
    let mut summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        outcome: "dry_run".into(),
        fault_reason: None,
        t_num: None,
        final_time: None,
        steps: None,
        rejections: None,
        cells: grid.cells(),
        initial_mass,
        psi0,
        t_lb_integral: bounds.t_lower_integral,
        t_lb_explicit: bounds.t_lower_explicit,
        bound_consistent: None,
        blow_up_before_half: None,
        m_star: m_star(&sc.params, initial_mass)?,
        max_mass_margin: None,
        max_comparison_excess: None,
        phi_ratio_infimum: None,
        c_gn_required: None,
        constants,
        params: sc.params.record(),
        cross_check: None,
    };
    if dry_run {
        return Ok(RunOutput {
            summary,
            records: Vec::new(),
            profiles: Vec::new(),
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let traj = run(grid, &sc.params, u0, &sc.ctrl)?;
    let diag = diagnose(grid, &sc.params, &traj, &sc.diagnostics)?;
    let times: Vec<f64> = diag.records.iter().map(|r| r.t).collect();
    let masses: Vec<f64> = diag.records.iter().map(|r| r.mass).collect();
    let phis: Vec<f64> = diag.records.iter().map(|r| r.phi).collect();
    let mass_report = check_mass_bound(&sc.params, &times, &masses)?;
    let t_num = traj.status.blowup_time();
    let horizon = t_num.unwrap_or(traj.final_time());
    let growth = phi_growth_report(&times, &phis, &sc.diagnostics.moment, horizon.min(0.5));

    summary.outcome = traj.status.label().into();
    if let Status::Fault { reason } = &traj.status {
        summary.fault_reason = Some(reason.clone());
    }
    summary.t_num = t_num;
    summary.final_time = Some(traj.final_time());
    summary.steps = Some(traj.steps);
    summary.rejections = Some(traj.rejections);
    summary.bound_consistent = t_num.map(|t| bounds.t_lower_integral <= t);
    summary.blow_up_before_half = t_num.map(|t| t < 0.5);
    summary.max_mass_margin = Some(mass_report.max_excess);
    summary.max_comparison_excess = finite(mass_report.max_comparison_excess);
    summary.phi_ratio_infimum = finite(growth.infimum);
    summary.c_gn_required = Some(diag.c_gn_required);
    if sc.cross_check {
        let window = t_num.map_or(traj.final_time(), |t| 0.8 * t);
        summary.cross_check = Some(compare_formulations(grid, &sc.params, &traj, &sc.ctrl, window)?);
    }
    Ok(RunOutput {
        summary,
        records: diag.records,
        profiles: select_profiles(grid.centers(), &traj.samples, sc.profile_snapshots),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Up to `count` samples, evenly spread, always including the first and last.
fn select_profiles(centers: &[f64], samples: &[Snapshot], count: usize) -> Vec<ProfileRow> {
    let n = samples.len();
    let mut picks: Vec<usize> = match (count, n) {
        (0, _) | (_, 0) => Vec::new(),
        (1, _) => vec![n - 1],
        _ if count >= n => (0..n).collect(),
        _ => (0..count).map(|k| k * (n - 1) / (count - 1)).collect(),
    };
    picks.dedup();
    picks
        .into_iter()
        .flat_map(|i| {
            let s = &samples[i];
            centers.iter().enumerate().map(move |(j, r)| ProfileRow {
                t: s.t,
                r: *r,
                u: s.u[j],
                v: s.v[j],
                w: s.w[j],
            })
        })
        .collect()
}

/// 17 significant digits; `NaN` and `inf` spelled out.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|x| fmt_float(*x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn profiles_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("t,r,u,v,w\n");
    for p in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(p.t),
            fmt_float(p.r),
            fmt_float(p.u),
            fmt_float(p.v),
            fmt_float(p.w)
        );
    }
    out
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn summary_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Write `<name>.csv`, `<name>.profiles.csv`, `<name>.summary.json` and
/// `<name>.log`; the log is the only file with wall-clock content.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let name = &out.summary.scenario;
    let mut written = Vec::new();
    if out.summary.outcome != "dry_run" {
        let csv = dir.join(format!("{name}.csv"));
        write_file(&csv, &diagnostics_csv(&out.records))?;
        let prof = dir.join(format!("{name}.profiles.csv"));
        write_file(&prof, &profiles_csv(&out.profiles))?;
        written.extend([csv, prof]);
    }
    let json = dir.join(format!("{name}.summary.json"));
    write_file(&json, &summary_json(&out.summary))?;
    let log = dir.join(format!("{name}.log"));
    write_file(
        &log,
        &format!(
            "scenario {name}\noutcome {}\nwall_seconds {:.3}\n",
            out.summary.outcome, out.wall_seconds
        ),
    )?;
    written.extend([json, log]);
    Ok(written)
}
