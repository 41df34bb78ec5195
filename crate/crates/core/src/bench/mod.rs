//! Benchmark runs: per-trajectory metrics, repeats aggregated into
//! [`RunReport`]s, density sweeps, and the file formats around them.

mod config;
mod export;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinematics::{pose_error, KinematicChain, ToleranceSpec};
use crate::planners::{plan, validate_trajectory, CoverageProblem, Method, PlannerParams, Trajectory};
use crate::surface::EndEffectorTarget;

pub use config::{preset_surface, BenchConfig, SurfaceSource};
pub use export::{
    export_report, export_trajectory, import_trajectory, read_trajectory, write_report, write_trajectory,
    ReportFormat, TrajectoryFormat,
};

/// Quality of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub reconfigs: usize,
    /// Joint-space L2 length, reconfiguration steps excluded.
    pub movement: f64,
    pub max_position_error: f64,
    /// `None` when no rotational DoF is constrained.
    pub max_rotation_error: Option<f64>,
}

pub fn compute_metrics(
    traj: &Trajectory,
    targets: &[EndEffectorTarget],
    chain: &KinematicChain,
    tol: &ToleranceSpec,
) -> Result<TrajectoryMetrics> {
    let mut max_position_error: f64 = 0.0;
    let mut max_rotation_error: Option<f64> = None;
    for (&t, q) in traj.order.iter().zip(&traj.configs) {
        let e = pose_error(&chain.fk(q)?, &targets[t], tol);
        max_position_error = max_position_error.max(e.position);
        if let Some(r) = e.rotation {
            max_rotation_error = Some(max_rotation_error.map_or(r, |m| m.max(r)));
        }
    }
    Ok(TrajectoryMetrics {
        reconfigs: traj.reconfig_count(),
        movement: traj.movement(),
        max_position_error,
        max_rotation_error,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn summary(&self) -> Summary {
        if self.count == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        Summary {
            mean: self.mean,
            std: (self.m2 / self.count as f64).max(0.0).sqrt(),
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// One repeat of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Wall-clock seconds from sampling to solver convergence.
    pub time_secs: f64,
    /// Absent when planning or validation failed.
    pub metrics: Option<TrajectoryMetrics>,
    pub error: Option<String>,
}

/// Aggregate over the repeats of one method on one surface. Statistics
/// cover the successful repeats only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    /// Target count of the surface.
    pub n: usize,
    pub repeats: usize,
    pub failures: usize,
    pub reconfigs: Summary,
    pub movement: Summary,
    pub time_secs: Summary,
    pub max_position_error: f64,
    pub max_rotation_error: Option<f64>,
    pub runs: Vec<RunRecord>,
}

impl RunReport {
    pub fn from_runs(method: Method, n: usize, runs: Vec<RunRecord>) -> Self {
        let ok: Vec<&TrajectoryMetrics> = runs.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let timed: Accumulator = runs.iter().filter(|r| r.metrics.is_some()).map(|r| r.time_secs).collect();
        let max_rotation_error = ok
            .iter()
            .filter_map(|m| m.max_rotation_error)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
        Self {
            method,
            n,
            repeats: runs.len(),
            failures: runs.len() - ok.len(),
            reconfigs: ok.iter().map(|m| m.reconfigs as f64).collect::<Accumulator>().summary(),
            movement: ok.iter().map(|m| m.movement).collect::<Accumulator>().summary(),
            time_secs: timed.summary(),
            max_position_error: ok.iter().map(|m| m.max_position_error).fold(0.0, f64::max),
            max_rotation_error,
            runs,
        }
    }

    /// Table row cells in the column order of [`report_table`].
    fn cells(&self) -> Vec<String> {
        let pm = |s: &Summary| format!("{:.2} ± {:.2}", s.mean, s.std);
        let mut method = self.method.to_string();
        if self.failures > 0 {
            method.push_str(&format!(" ({} failed)", self.failures));
        }
        vec![
            method,
            pm(&self.reconfigs),
            pm(&self.movement),
            pm(&self.time_secs),
            format!("{:.1e}", self.max_position_error),
            self.max_rotation_error.map_or("-".into(), |r| format!("{r:.1e}")),
            self.n.to_string(),
        ]
    }
}

/// Plain-text table, one row per report in the given order.
pub fn report_table(reports: &[RunReport]) -> String {
    let header = [
        "Method",
        "Reconfigs",
        "Joint movement (rad)",
        "Time (s)",
        "Max position error (m)",
        "Max rotation error (rad)",
        "n",
    ];
    let rows: Vec<Vec<String>> = reports.iter().map(RunReport::cells).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// Plans once and scores the result. Planning errors and trajectories that
/// fail validation come back as an error record.
pub fn run_once(
    method: Method,
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> RunRecord {
    let attempt = || -> Result<(f64, TrajectoryMetrics)> {
        let p = plan(method, problem, chain, tol, params)?;
        validate_trajectory(&p.trajectory, &problem.targets, chain, tol, &p.reconfig, params.alpha, &params.ik)?;
        let m = compute_metrics(&p.trajectory, &problem.targets, chain, tol)?;
        Ok((p.stats.total_secs, m))
    };
    match attempt() {
        Ok((time_secs, m)) => RunRecord {
            seed: params.seed,
            time_secs,
            metrics: Some(m),
            error: None,
        },
        Err(e) => RunRecord {
            seed: params.seed,
            time_secs: f64::NAN,
            metrics: None,
            error: Some(e.to_string()),
        },
    }
}

/// Every configured method, `repeats` times each with seeds `seed + i`.
/// Reports come back in the configured method order.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<RunReport>> {
    config.validate()?;
    let chain = config.chain()?;
    let problem = config.problem()?;
    Ok(run_on(config, &problem, &chain))
}

fn run_on(config: &BenchConfig, problem: &CoverageProblem, chain: &KinematicChain) -> Vec<RunReport> {
    config
        .methods
        .iter()
        .map(|&method| {
            let runs = (0..config.repeats as u64)
                .map(|i| {
                    let params = PlannerParams {
                        seed: config.seed.wrapping_add(i),
                        ..config.planner
                    };
                    let r = run_once(method, problem, chain, &config.tolerance, &params);
                    match &r.error {
                        Some(e) => log::warn!("{method} seed {}: {e}", r.seed),
                        None => log::info!("{method} seed {}: {:.2} s", r.seed, r.time_secs),
                    }
                    r
                })
                .collect();
            RunReport::from_runs(method, problem.len(), runs)
        })
        .collect()
}

/// One benchmark per density, ascending by the surface's actual target
/// count.
pub fn scaling_sweep(config: &BenchConfig, n_values: &[usize]) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let chain = config.chain()?;
    let mut densities = n_values.to_vec();
    densities.sort_unstable();
    densities.dedup();
    let mut out = Vec::with_capacity(densities.len());
    for requested in densities {
        let cfg = config.with_target_count(requested)?;
        let problem = cfg.problem()?;
        log::info!("density {requested}: {} targets", problem.len());
        out.push(SweepPoint {
            requested,
            n: problem.len(),
            reports: run_on(&cfg, &problem, &chain),
        });
    }
    out.sort_by_key(|p| (p.n, p.requested));
    Ok(out)
}

/// Reports at one density of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub requested: usize,
    pub n: usize,
    pub reports: Vec<RunReport>,
}

#[cfg(test)]
mod tests;
