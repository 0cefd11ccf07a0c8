//! JSON metadata and CSV time series for plotting.

use std::io;
use std::path::Path;

use serde::Serialize;

use super::trajectory::PhaseTrajectory;
use crate::metric_symbols::{eval_symbol, InverseMetricField};

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> io::Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    std::fs::write(path, s)
}

/// Columns `t, z0, z1, zeta0, zeta1, p`.
pub fn write_trajectory_csv(field: &InverseMetricField, traj: &PhaseTrajectory, path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "z0", "z1", "zeta0", "zeta1", "p"])?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let p = eval_symbol(field, s);
        w.serialize((t, s.x[0], s.x[1], s.xi[0], s.xi[1], p))?;
    }
    w.flush()
}
