//! Tracking metrics, run summaries, and horizon sweeps.

use rayon::prelude::*;

use crate::cueing::{McaConfig, McaMode};
use crate::error::McaError;
use crate::plant::{run_closed_loop, PlantKind, TrajectoryLog};
use crate::scenario::Scenario;

/// Tolerance used when counting workspace violations on the ideal plant.
pub const VIOLATION_TOL: f64 = 1e-6;

/// Aggregate result of one closed-loop run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub scenario: String,
    pub mode: McaMode,
    pub horizon: usize,
    pub k_scale: f64,
    pub rmse_long: f64,
    pub rmse_lat: f64,
    /// Root-sum-of-squares of the per-axis values.
    pub rmse_total: f64,
    /// Total wall-clock solve time across the run (s).
    pub total_compute_s: f64,
    pub mean_solve_ms: f64,
    pub max_solve_ms: f64,
    pub total_slack: f64,
    pub violation_count: usize,
    /// Error message when the run aborted early.
    pub error: Option<String>,
}

impl RunSummary {
    pub const CSV_HEADER: &'static str = "scenario,mode,horizon,k_scale,rmse_long,rmse_lat,\
rmse_total,total_compute_s,mean_solve_ms,max_solve_ms,total_slack,violations,error";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.3},{:.4},{:.4},{:.6},{},{}",
            self.scenario,
            self.mode,
            self.horizon,
            self.k_scale,
            self.rmse_long,
            self.rmse_lat,
            self.rmse_total,
            self.total_compute_s,
            self.mean_solve_ms,
            self.max_solve_ms,
            self.total_slack,
            self.violation_count,
            self.error.as_deref().unwrap_or("")
        )
    }
}

/// Per-axis RMS of (achieved specific force - scaled reference), and the
/// root-sum-of-squares total.
pub fn rmse(log: &TrajectoryLog) -> Result<(f64, f64, f64), McaError> {
    if log.rows.is_empty() {
        return Err(McaError::Eval("empty trajectory log".into()));
    }
    let n = log.rows.len() as f64;
    let (mut sq_long, mut sq_lat) = (0.0, 0.0);
    for row in &log.rows {
        let el = row.long.f - row.long.f_ref;
        let et = row.lat.f - row.lat.f_ref;
        sq_long += el * el;
        sq_lat += et * et;
    }
    let rmse_long = (sq_long / n).sqrt();
    let rmse_lat = (sq_lat / n).sqrt();
    Ok((rmse_long, rmse_lat, rmse_long.hypot(rmse_lat)))
}

/// Summarize one finished run.
pub fn summarize(
    scenario: &str,
    mode: McaMode,
    horizon: usize,
    k_scale: f64,
    limits: &crate::mpc::Limits,
    log: &TrajectoryLog,
) -> Result<RunSummary, McaError> {
    let (rmse_long, rmse_lat, rmse_total) = rmse(log)?;
    let total_ms: f64 = log.rows.iter().map(|r| r.solve_ms).sum();
    let max_ms = log.rows.iter().map(|r| r.solve_ms).fold(0.0, f64::max);
    Ok(RunSummary {
        scenario: scenario.to_string(),
        mode,
        horizon,
        k_scale,
        rmse_long,
        rmse_lat,
        rmse_total,
        total_compute_s: total_ms / 1e3,
        mean_solve_ms: total_ms / log.rows.len() as f64,
        max_solve_ms: max_ms,
        total_slack: log.total_slack(),
        violation_count: log.workspace_violations(limits, VIOLATION_TOL),
        error: log.aborted.clone(),
    })
}

/// Run one scenario closed loop and summarize it.
pub fn run_and_summarize(
    cfg: &McaConfig,
    kind: PlantKind,
    scenario: &Scenario,
    k_scale: f64,
) -> Result<RunSummary, McaError> {
    let log = run_closed_loop(cfg, kind, scenario, k_scale)?;
    summarize(&scenario.name, cfg.mode, cfg.horizon, k_scale, &cfg.limits, &log)
}

/// Run both algorithms at each horizon on the ideal plant.
///
/// Rows are independent closed loops and execute in parallel; the returned
/// order is deterministic (horizon-major, benchmark before
/// frequency-splitting). Failures are recorded in the row and the sweep
/// continues.
pub fn sweep_horizons(
    base: &McaConfig,
    scenario: &Scenario,
    k_scale: f64,
    horizons: &[usize],
) -> Result<Vec<RunSummary>, McaError> {
    if horizons.is_empty() {
        return Err(McaError::Eval("no horizons requested".into()));
    }
    let jobs: Vec<(usize, McaMode)> = horizons
        .iter()
        .flat_map(|&n| {
            [
                (n, McaMode::Benchmark),
                (n, McaMode::FrequencySplitting),
            ]
        })
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(horizon, mode)| {
            let cfg = McaConfig {
                mode,
                horizon,
                ..*base
            };
            run_and_summarize(&cfg, PlantKind::Ideal, scenario, k_scale).unwrap_or_else(|e| {
                RunSummary {
                    scenario: scenario.name.clone(),
                    mode,
                    horizon,
                    k_scale,
                    rmse_long: f64::NAN,
                    rmse_lat: f64::NAN,
                    rmse_total: f64::NAN,
                    total_compute_s: 0.0,
                    mean_solve_ms: 0.0,
                    max_solve_ms: 0.0,
                    total_slack: 0.0,
                    violation_count: 0,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect())
}

/// Render summaries as an aligned text table.
pub fn format_table(rows: &[RunSummary]) -> String {
    let mut out = String::from(
        "scenario     mode       N    k      rmse_long  rmse_lat   rmse_total  mean_ms  max_ms   slack      viol\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<9} {:<4} {:<6.3} {:<10.4} {:<10.4} {:<11.4} {:<8.3} {:<8.3} {:<10.4} {}{}\n",
            r.scenario,
            r.mode.to_string(),
            r.horizon,
            r.k_scale,
            r.rmse_long,
            r.rmse_lat,
            r.rmse_total,
            r.mean_solve_ms,
            r.max_solve_ms,
            r.total_slack,
            r.violation_count,
            r.error
                .as_deref()
                .map(|e| format!("  [aborted: {e}]"))
                .unwrap_or_default()
        ));
    }
    out
}
