//! Tolerance-ladder experiment: solve one covering instance at a
//! descending list of tolerances, treat the tightest solve as the
//! reference optimizer, and check every coarser solve against the
//! closed-form normalized-error bound.
//!
//! Rungs are independent solves of the same instance, so they can run
//! concurrently; assembly is by rung order regardless of completion
//! order, and a fixed seed makes the whole pipeline reproducible
//! byte-for-byte.

use std::sync::Mutex;

use serde::Serialize;

use crate::certificate::{g_closed, g_exact};
use crate::error::{Error, Result};
use crate::mvee::{self, PointSet, SolveReport};

/// Worker cap for concurrent rungs; read from `MAXDET_CERTIFY_THREADS`,
/// defaulting to 1.
pub fn threads_from_env() -> usize {
    std::env::var("MAXDET_CERTIFY_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

/// Ladder run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    /// Strictly descending; the last entry is the reference rung.
    pub tolerances: Vec<f64>,
    /// Worker cap for concurrent rungs.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidShape(format!(
                "dimension must be >= 2, got {}",
                self.dim
            )));
        }
        if self.count < self.dim + 1 {
            return Err(Error::InvalidShape(format!(
                "need at least {} points, got {}",
                self.dim + 1,
                self.count
            )));
        }
        if self.tolerances.len() < 2 {
            return Err(Error::InvalidShape(
                "ladder needs at least two tolerances".into(),
            ));
        }
        for pair in self.tolerances.windows(2) {
            if pair[1].is_nan() || pair[0].is_nan() || pair[1] >= pair[0] {
                return Err(Error::InvalidShape(format!(
                    "tolerances must be strictly descending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if self
            .tolerances
            .iter()
            .any(|&d| d.is_nan() || d <= 0.0 || d > 1.0)
        {
            return Err(Error::InvalidShape("tolerances must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// The default decade ladder, `1, 1e-1, ..., 1e-8`.
pub fn default_ladder() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powi(-k)).collect()
}

/// One non-reference rung of the ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub delta: f64,
    pub epsilon: f64,
    pub normalized_error: f64,
    /// `sqrt(g_exact)`, the Lambert-form bound on the normalized error.
    pub bound_exact: f64,
    /// `sqrt(g_closed)`, the closed-form bound the experiment validates.
    pub bound_closed: f64,
    pub holds: bool,
}

/// Gaussian instance generator used by the experiment; `n >= 2` points
/// in general position are required downstream.
pub fn generate_points(dim: usize, count: usize, seed: u64) -> Result<PointSet> {
    if dim < 2 {
        return Err(Error::InvalidShape(format!(
            "dimension must be >= 2, got {dim}"
        )));
    }
    if count < dim + 1 {
        return Err(Error::InvalidShape(format!(
            "need at least {} points in dimension {dim}, got {count}",
            dim + 1
        )));
    }
    PointSet::gaussian(dim, count, seed)
}

/// Solves every rung of the ladder on the same instance, in rung order,
/// with at most `threads` concurrent solves.
pub fn run_ladder(
    pts: &PointSet,
    tolerances: &[f64],
    max_iters: usize,
    threads: usize,
) -> Result<Vec<SolveReport>> {
    let workers = threads.max(1).min(tolerances.len());
    if workers <= 1 {
        return tolerances
            .iter()
            .map(|&delta| mvee::solve_mvee(pts, delta, max_iters))
            .collect();
    }
    let slots: Vec<Mutex<Option<Result<SolveReport>>>> =
        tolerances.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for t in 0..workers {
            let slots = &slots;
            scope.spawn(move || {
                for k in (t..tolerances.len()).step_by(workers) {
                    let report = mvee::solve_mvee(pts, tolerances[k], max_iters);
                    *slots[k].lock().unwrap() = Some(report);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled its slots"))
        .collect()
}

/// Turns ladder reports into experiment rows: one row per non-reference
/// rung, compared against the final (tightest) rung.
pub fn rows_from_ladder(reports: &[SolveReport]) -> Result<Vec<ExperimentRow>> {
    let reference = reports
        .last()
        .ok_or_else(|| Error::InvalidShape("ladder produced no reports".into()))?;
    reports[..reports.len() - 1]
        .iter()
        .map(|report| {
            let gap = mvee::optimality_gap(report, reference)?;
            let ne = mvee::normalized_error(&report.ellipsoid.x, &reference.ellipsoid.x)?;
            let bound_exact = g_exact(gap.epsilon)?.sqrt();
            let bound_closed = g_closed(gap.epsilon)?.sqrt();
            Ok(ExperimentRow {
                delta: report.tolerance,
                epsilon: gap.epsilon,
                normalized_error: ne,
                bound_exact,
                bound_closed,
                holds: ne <= bound_closed + 1e-9,
            })
        })
        .collect()
}

/// End-to-end experiment: generate, solve the ladder, emit rows in
/// descending-tolerance order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let pts = generate_points(cfg.dim, cfg.count, cfg.seed)?;
    let max_iters = mvee::default_max_iters(&pts);
    let reports = run_ladder(&pts, &cfg.tolerances, max_iters, cfg.threads)?;
    rows_from_ladder(&reports)
}

/// 17-significant-digit float formatting shared by all CSV output.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const EXPERIMENT_CSV_HEADER: &str =
    "delta,epsilon,normalized_error,bound_exact,bound_closed,holds";

/// Renders rows as CSV with the fixed schema and float format.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(EXPERIMENT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(r.delta),
            format_float(r.epsilon),
            format_float(r.normalized_error),
            format_float(r.bound_exact),
            format_float(r.bound_closed),
            r.holds
        ));
    }
    out
}

/// Renders rows as a JSON array (infinite bounds serialize as null).
pub fn rows_to_json(rows: &[ExperimentRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}
