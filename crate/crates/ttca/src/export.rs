//! CSV trajectories and metrics, plus the waypoint CSV read by `ttca fit`.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so reading
//! a file back yields bit-identical values.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use ttca_core::field::WaypointSet;
use ttca_core::plan::ComparisonReport;
use ttca_core::sim::{LcMetrics, LogSample, TrajectoryLog};

use crate::plot;

pub const TRAJECTORY_HEADER: [&str; 8] =
    ["t_s", "x_m", "y_m", "yaw_rad", "yaw_rate_rad_s", "steer_rad", "sideslip_rad", "curvature_1_m"];

pub const CPF_TRAJ: &str = "cpf_traj.csv";
pub const TTCA_TRAJ: &str = "ttca_traj.csv";
pub const METRICS: &str = "metrics.csv";
pub const PLOT: &str = "paths.svg";

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExportError + '_ {
    move |source| ExportError::Csv { path: path.to_path_buf(), source }
}

fn writer(path: &Path) -> Result<csv::Writer<File>, ExportError> {
    let f = File::create(path).map_err(io(path))?;
    Ok(csv::Writer::from_writer(f))
}

pub fn write_trajectory(log: &TrajectoryLog, path: &Path) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err(path))?;
    for s in &log.samples {
        let row = [s.t, s.x, s.y, s.yaw, s.yaw_rate, s.steer, s.sideslip, s.curvature];
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryLog, ExportError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(ExportError::Format { path: path.to_path_buf(), message: format!("unexpected header {header:?}") });
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ExportError::Format { path: path.to_path_buf(), message: e.to_string() })?;
        samples.push(LogSample {
            t: v[0],
            x: v[1],
            y: v[2],
            yaw: v[3],
            yaw_rate: v[4],
            steer: v[5],
            sideslip: v[6],
            curvature: v[7],
        });
    }
    let dt = if samples.len() > 1 { samples[1].t - samples[0].t } else { 0.0 };
    Ok(TrajectoryLog { dt, samples })
}

/// metric,value rows for a single planner.
pub fn write_metrics(m: &LcMetrics, path: &Path) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(["metric", "value"]).map_err(csv_err(path))?;
    for (name, v) in LcMetrics::FIELDS.iter().zip(m.values()) {
        w.write_record([name.to_string(), v.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

/// metric,cpf,ttca,reduction rows; reduction is (cpf − ttca)/cpf.
pub fn write_comparison_metrics(r: &ComparisonReport, path: &Path) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(["metric", "cpf", "ttca", "reduction"]).map_err(csv_err(path))?;
    let (a, b) = (r.cpf.metrics.values(), r.ttca.run.metrics.values());
    for (i, name) in LcMetrics::FIELDS.iter().enumerate() {
        let row = [name.to_string(), a[i].to_string(), b[i].to_string(), r.deltas[i].to_string()];
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn export_comparison(r: &ComparisonReport, dir: &Path, with_plot: bool) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = vec![dir.join(CPF_TRAJ), dir.join(TTCA_TRAJ), dir.join(METRICS)];
    write_trajectory(&r.cpf.log, &out[0])?;
    write_trajectory(&r.ttca.run.log, &out[1])?;
    write_comparison_metrics(r, &out[2])?;
    if with_plot {
        let p = dir.join(PLOT);
        let svg = plot::paths_svg(&[("CPF-LC", &r.cpf.log), ("TTCA-LC", &r.ttca.run.log)]);
        fs::write(&p, svg).map_err(io(&p))?;
        out.push(p);
    }
    Ok(out)
}

/// x,y[,weight] rows with a header line.
pub fn read_waypoints(path: &Path) -> Result<WaypointSet, ExportError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |m: String| ExportError::Format { path: path.to_path_buf(), message: format!("row {}: {m}", i + 2) };
        if rec.len() < 2 || rec.len() > 3 {
            return Err(bad(format!("expected 2 or 3 columns, got {}", rec.len())));
        }
        let num = |k: usize| rec[k].trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        points.push((num(0)?, num(1)?));
        weights.push(if rec.len() == 3 { num(2)? } else { 1.0 });
    }
    Ok(WaypointSet { points, weights })
}
