use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chemoblow"));
    cmd.env_remove("CHEMOBLOW_THREADS");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

// Write a variant of the smooth scenario with `edits` applied line by line.
fn smooth_variant(dir: &Path, file: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(scenario("smooth_growth.toml")).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from}");
        text = text.replacen(from, to, 1);
    }
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path
}

fn short_smooth(dir: &Path) -> PathBuf {
    smooth_variant(
        dir,
        "short.toml",
        &[("cells = 256", "cells = 64"), ("t_end = 0.5", "t_end = 0.02"), ("sample_interval = 1e-3", "sample_interval = 2e-3")],
    )
}

fn summary(dir: &Path, name: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn reference_run_blows_up_after_the_lower_bound() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run", scenario("reference_blowup.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(tmp.path(), "reference_blowup");
    assert_eq!(s["schema_version"], "chemoblow-summary-v1");
    assert_eq!(s["outcome"], "blow_up");
    let t_num = s["t_num"].as_f64().unwrap();
    // regression value for this grid and sampling
    assert!((t_num / 1.8835324897631554e-3 - 1.0).abs() < 1e-6, "T_num = {t_num}");
    let lb = s["t_lb_integral"].as_f64().unwrap();
    let lb_explicit = s["t_lb_explicit"].as_f64().unwrap();
    assert!(0.0 < lb_explicit && lb_explicit <= lb && lb <= t_num);
    assert_eq!(s["bound_consistent"], true);
    assert_eq!(s["blow_up_before_half"], true);
    assert!(s["cross_check"]["max_boundary_error"].as_f64().unwrap() < 1e-6);
    assert!(s["phi_ratio_infimum"].as_f64().unwrap() > 0.0);
    assert!(s["cross_check"]["max_rhs_error"].as_f64().unwrap() < 1e-3);

    let rows = csv_rows(&tmp.path().join("reference_blowup.csv"));
    assert_eq!(rows[0].len(), 15);
    assert_eq!(rows[0][0], "t");
    assert!(rows[1..].iter().all(|r| r.len() == 15));
    let last_t: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert_eq!(last_t, t_num);

    let profiles = csv_rows(&tmp.path().join("reference_blowup.profiles.csv"));
    assert_eq!(profiles[0], ["t", "r", "u", "v", "w"]);
    assert_eq!((profiles.len() - 1) % 512, 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_smooth(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["run", cfg.to_str().unwrap()], dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for file in ["smooth_growth.csv", "smooth_growth.profiles.csv", "smooth_growth.summary.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_eq!(summary(&a, "smooth_growth")["outcome"], "completed");
}

#[test]
fn cells_override_changes_the_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_smooth(tmp.path());
    let o = bin()
        .args(["run", cfg.to_str().unwrap(), "--dry-run", "--cells", "40"])
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(summary(tmp.path(), "smooth_growth")["cells"], 40);
}

#[test]
fn invalid_exponent_names_the_constraint() {
    let tmp = TempDir::new().unwrap();
    let cfg = smooth_variant(tmp.path(), "bad.toml", &[("k = 1.1", "k = 0.9")]);
    let o = run(&["run", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("k > 1"), "{err}");
    assert!(err.contains("0.9"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn several_problems_are_reported_together() {
    let tmp = TempDir::new().unwrap();
    let cfg = smooth_variant(tmp.path(), "bad.toml", &[("k = 1.1", "k = 0.9"), ("delta = 1.0", "delta = -2.0")]);
    let o = run(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("k > 1") && err.contains("delta"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = smooth_variant(tmp.path(), "typo.toml", &[("lambda = 1.0", "lambda = 1.0\nlamda = 2.0")]);
    let o = run(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run", tmp.path().join("absent.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn dry_run_writes_summary_only() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run", scenario("reference_blowup.toml").to_str().unwrap(), "--dry-run"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["outcome"], "dry_run");
    assert!(printed["t_num"].is_null());
    assert!(printed["t_lb_integral"].as_f64().unwrap() > 0.0);
    assert_eq!(printed, summary(tmp.path(), "reference_blowup"));
    assert!(!tmp.path().join("reference_blowup.csv").exists());
    assert!(!tmp.path().join("reference_blowup.profiles.csv").exists());
}

#[test]
fn bound_command_reports_constants() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["bound", scenario("reference_blowup.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = &s["constants"];
    assert_eq!(c["gamma1"], 1.5);
    assert_eq!(c["gamma2"], 3.0);
    let (b1, b2, b3) = (c["b1"].as_f64().unwrap(), c["b2"].as_f64().unwrap(), c["b3"].as_f64().unwrap());
    let psi0 = s["psi0"].as_f64().unwrap();
    // the integrand is at least 1/(B1 + B2 + B3)η^{-3} once η ≥ 1
    let crude = 1.0 / (2.0 * (b1 + b2 + b3) * psi0 * psi0);
    let lb = s["t_lb_integral"].as_f64().unwrap();
    assert!(lb >= crude && lb <= 1.0 / (2.0 * b3 * psi0 * psi0));
}

#[test]
fn zero_horizon_records_the_initial_state() {
    let tmp = TempDir::new().unwrap();
    let cfg = smooth_variant(tmp.path(), "zero.toml", &[("t_end = 0.5", "t_end = 0.0")]);
    let o = run(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("smooth_growth.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(summary(tmp.path(), "smooth_growth")["outcome"], "completed");
}

#[test]
fn exhausted_step_budget_exits_with_run_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = smooth_variant(tmp.path(), "budget.toml", &[("t_end = 0.5", "t_end = 0.5\nmax_steps = 3")]);
    let o = run(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    let s = summary(tmp.path(), "smooth_growth");
    assert_eq!(s["outcome"], "fault");
    assert!(s["fault_reason"].as_str().unwrap().contains("budget"));
}

#[test]
fn sweep_without_axes_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_smooth(tmp.path());
    let o = run(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "run_0000");
    assert!(tmp.path().join("run_0000/run_0000.summary.json").exists());
}

#[test]
fn two_axis_sweep_is_lexicographic_and_thread_independent() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario("growth_sensitivity_sweep.toml");
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let dir = tmp.path().join(threads);
        let o = bin()
            .args(["sweep", cfg.to_str().unwrap(), "--out"])
            .arg(&dir)
            .env("CHEMOBLOW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        tables.push(fs::read_to_string(dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let rows = csv_rows(&tmp.path().join("1/sweep.csv"));
    assert_eq!(&rows[0][..4], ["run", "chi", "lambda", "dominance"]);
    assert_eq!(rows.len(), 10);
    let chi = [1.0, 2.0, 4.0];
    let lambda = [-1.0, 0.0, 1.0];
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(row[0], format!("run_{i:04}"));
        assert_eq!(row[1].parse::<f64>().unwrap(), chi[i / 3]);
        assert_eq!(row[2].parse::<f64>().unwrap(), lambda[i % 3]);
        // dominance χα − ξγ with α = γ = ξ = 1
        assert_eq!(row[3].parse::<f64>().unwrap(), chi[i / 3] - 1.0);
        assert_eq!(row[4], "completed");
    }
}

#[test]
fn dominance_sweep_crosses_into_blow_up() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["sweep", scenario("dominance_sweep.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("sweep.csv"));
    assert_eq!(rows[0][1], "dominance");
    assert_eq!(rows[0][2], "outcome");
    let outcomes: Vec<&str> = rows[1..].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(outcomes.len(), 4);
    assert_eq!(outcomes[0], "completed");
    assert_eq!(*outcomes.last().unwrap(), "blow_up");
    let first_blow = outcomes.iter().position(|o| *o == "blow_up").unwrap();
    assert!(outcomes[first_blow..].iter().all(|o| *o == "blow_up"));
    assert!(outcomes[..first_blow].iter().all(|o| *o == "completed"));
}

#[test]
fn invalid_thread_cap_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = short_smooth(tmp.path());
    for bad in ["zero", "0", "-2"] {
        let o = bin()
            .args(["sweep", cfg.to_str().unwrap(), "--out"])
            .arg(tmp.path())
            .env("CHEMOBLOW_THREADS", bad)
            .output()
            .unwrap();
        assert_eq!(code(&o), 1, "{bad}");
        assert!(stderr(&o).contains("CHEMOBLOW_THREADS"));
    }
}

#[test]
fn fast_verification_passes_and_writes_report() {
    let tmp = TempDir::new().unwrap();
    let start = std::time::Instant::now();
    let o = run(&["verify", "fast"], tmp.path());
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 10);
    assert!(!text.contains("FAIL"));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("verify_fast.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn flipped_flux_is_caught() {
    let o = bin().args(["verify", "fast", "--inject", "flip-flux"]).output().unwrap();
    assert_eq!(code(&o), 3);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL transport_conservation")), "{text}");
}
