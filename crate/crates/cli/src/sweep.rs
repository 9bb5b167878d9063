use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::runner::{execute, fmt_float, write_file, write_outputs, RunSummary};

/// One point of the Cartesian product of all axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<(String, f64)>,
}

/// Cartesian product of the axes, the first axis varying slowest.
pub fn sweep_points(config: &Config) -> Vec<SweepPoint> {
    let mut points = vec![Vec::new()];
    for axis in &config.sweep.axes {
        points = points
            .into_iter()
            .flat_map(|prefix: Vec<(String, f64)>| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.field.clone(), *v));
                    p
                })
            })
            .collect();
    }
    points
        .into_iter()
        .enumerate()
        .map(|(index, values)| SweepPoint { index, values })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub dominance: f64,
    pub result: std::result::Result<RunSummary, String>,
    pub wall_seconds: f64,
}

fn run_point(base: &Config, point: &SweepPoint, dir: &Path) -> SweepRow {
    let start = Instant::now();
    let mut dominance = f64::NAN;
    let result = (|| -> Result<RunSummary> {
        let mut cfg = base.clone();
        for (field, value) in &point.values {
            cfg = cfg.with_field(field, *value)?;
        }
        cfg.scenario.name = format!("run_{:04}", point.index);
        let sc = cfg.build()?;
        dominance = sc.params.dominance();
        let out = execute(&sc, false)?;
        write_outputs(&dir.join(&cfg.scenario.name), &out)?;
        Ok(out.summary)
    })();
    SweepRow {
        point: point.clone(),
        dominance,
        result: result.map_err(|e| e.to_string()),
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Run every sweep point concurrently; rows come back in point order.
pub fn run_sweep(base: &Config, dir: &Path, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    base.build()?;
    let points = sweep_points(base);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(|p| run_point(base, p, dir)).collect()))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), fmt_float)
}

/// Aggregate table, one row per sweep point.
pub fn sweep_csv(base: &Config, rows: &[SweepRow]) -> String {
    let mut header: Vec<String> = vec!["run".into()];
    header.extend(base.sweep.axes.iter().map(|a| a.field.clone()));
    // a dominance axis already carries the column
    let dominance_col = !base.sweep.axes.iter().any(|a| a.field == "dominance");
    if dominance_col {
        header.push("dominance".into());
    }
    header.extend(
        [
            "outcome",
            "t_num",
            "t_lb_integral",
            "t_lb_explicit",
            "m_star",
            "max_mass_margin",
            "phi_ratio_infimum",
            "c_gn_required",
            "error",
        ]
        .map(String::from),
    );
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut cells = vec![format!("run_{:04}", row.point.index)];
        cells.extend(row.point.values.iter().map(|(_, v)| fmt_float(*v)));
        if dominance_col {
            cells.push(fmt_float(row.dominance));
        }
        match &row.result {
            Ok(s) => cells.extend([
                s.outcome.clone(),
                opt(s.t_num),
                fmt_float(s.t_lb_integral),
                fmt_float(s.t_lb_explicit),
                fmt_float(s.m_star),
                opt(s.max_mass_margin),
                opt(s.phi_ratio_infimum),
                opt(s.c_gn_required),
                String::new(),
            ]),
            Err(e) => {
                cells.push("error".into());
                cells.extend(std::iter::repeat_n("NaN".to_string(), 7));
                cells.push(format!("\"{}\"", e.replace('"', "'")));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write `sweep.csv` and `sweep.log` next to the per-run directories.
pub fn write_sweep(dir: &Path, base: &Config, rows: &[SweepRow]) -> Result<()> {
    crate::runner::ensure_dir(dir)?;
    write_file(&dir.join("sweep.csv"), &sweep_csv(base, rows))?;
    let mut log = String::new();
    for r in rows {
        log.push_str(&format!("run_{:04} wall_seconds {:.3}\n", r.point.index, r.wall_seconds));
    }
    write_file(&dir.join("sweep.log"), &log)
}
