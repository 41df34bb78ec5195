use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{report_table, RunReport};
use crate::error::{Error, Result};
use crate::kinematics::JointConfig;
use crate::planners::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    Json,
}

impl TrajectoryFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(TrajectoryFormat::Csv),
            "json" => Some(TrajectoryFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" | "text" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown report format `{s}`"))),
        }
    }
}

/// CSV has one row per step: `step, target_index, theta_1..theta_k,
/// breakpoint_after`. JSON mirrors [`Trajectory`].
pub fn export_trajectory(traj: &Trajectory, format: TrajectoryFormat) -> Result<String> {
    match format {
        TrajectoryFormat::Json => Ok(serde_json::to_string_pretty(traj)?),
        TrajectoryFormat::Csv => {
            let dof = traj.configs.first().map_or(0, |q| q.len());
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["step".to_string(), "target_index".to_string()];
            header.extend((1..=dof).map(|j| format!("theta_{j}")));
            header.push("breakpoint_after".into());
            w.write_record(&header)?;
            for (step, (&t, q)) in traj.order.iter().zip(&traj.configs).enumerate() {
                let mut row = vec![step.to_string(), t.to_string()];
                // shortest text that parses back to the same f64
                row.extend(q.0.iter().map(|v| format!("{v:?}")));
                let bp = traj.breakpoints.binary_search(&step).is_ok();
                row.push(u8::from(bp).to_string());
                w.write_record(&row)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

pub fn import_trajectory(src: &str, format: TrajectoryFormat) -> Result<Trajectory> {
    match format {
        TrajectoryFormat::Json => Ok(serde_json::from_str(src)?),
        TrajectoryFormat::Csv => {
            let mut r = csv::Reader::from_reader(src.as_bytes());
            let header = r.headers()?.clone();
            let width = header.len();
            if width < 3 || &header[0] != "step" || &header[1] != "target_index" || &header[width - 1] != "breakpoint_after" {
                return Err(Error::parse(1, "expected columns step, target_index, theta_*, breakpoint_after"));
            }
            let mut traj = Trajectory {
                order: Vec::new(),
                configs: Vec::new(),
                breakpoints: Vec::new(),
            };
            for (i, rec) in r.records().enumerate() {
                let rec = rec?;
                let line = i + 2;
                let field = |k: usize| &rec[k];
                let bad = |what: &str| Error::parse(line, format!("bad {what}"));
                let step: usize = field(0).parse().map_err(|_| bad("step"))?;
                if step != i {
                    return Err(Error::parse(line, format!("step {step} out of sequence")));
                }
                traj.order.push(field(1).parse().map_err(|_| bad("target_index"))?);
                let q: Vec<f64> = (2..width - 1)
                    .map(|k| field(k).parse().map_err(|_| bad("joint value")))
                    .collect::<Result<_>>()?;
                traj.configs.push(JointConfig::new(q));
                match field(width - 1) {
                    "0" => {}
                    "1" => traj.breakpoints.push(step),
                    _ => return Err(bad("breakpoint_after")),
                }
            }
            Ok(traj)
        }
    }
}

/// Format chosen by the file extension.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let format = trajectory_format(path)?;
    std::fs::write(path, export_trajectory(traj, format)?).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let format = trajectory_format(path)?;
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    import_trajectory(&src, format)
}

fn trajectory_format(path: &Path) -> Result<TrajectoryFormat> {
    TrajectoryFormat::from_path(path).ok_or_else(|| {
        Error::InvalidParameter(format!("{}: expected a .csv or .json trajectory", path.display()))
    })
}

pub fn export_report(reports: &[RunReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(report_table(reports)),
        ReportFormat::Json => Ok(serde_json::to_string_pretty(reports)?),
    }
}

pub fn write_report<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
