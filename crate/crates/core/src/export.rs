//! CSV and JSON encodings of paths, estimates and experiment reports.
//!
//! Writers take any `io::Write`; the caller decides about buffering and
//! atomic replacement of the destination. Floats are printed in Rust's
//! shortest round-trip form, so equal values always give equal bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::montecarlo::{ExperimentReport, ReplicationRow};
use crate::tfbm::{PathSet, SampleGrid, TfbmParams};

pub const PATHS_SCHEMA_VERSION: u32 = 1;

pub const ESTIMATES_HEADER: &str = "replication,seed,T,a_hat,b_hat,z_T,u_T,v_T,denominator";
pub const REPLICATIONS_HEADER: &str = "replication,seed,T,a_hat,b_hat,a_scaled,b_scaled,z_T,u_T,v_T,denominator";

/// Run metadata stored next to a path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSidecar {
    pub schema_version: u32,
    pub params: TfbmParams,
    pub grid: SampleGrid,
    pub seed: u64,
    pub n_paths: usize,
}

impl PathSidecar {
    pub fn new(params: TfbmParams, paths: &PathSet) -> Self {
        Self {
            schema_version: PATHS_SCHEMA_VERSION,
            params,
            grid: paths.grid,
            seed: paths.seed,
            n_paths: paths.n_paths,
        }
    }
}

/// One row per grid node: `t,path_0,...,path_{n-1}`.
pub fn write_paths_csv<W: Write>(mut w: W, paths: &PathSet) -> io::Result<()> {
    write!(w, "t")?;
    for i in 0..paths.n_paths {
        write!(w, ",path_{i}")?;
    }
    writeln!(w)?;
    let rows: Vec<&[f64]> = paths.paths().collect();
    for k in 0..paths.grid.len() {
        write!(w, "{}", paths.grid.node(k))?;
        for p in &rows {
            write!(w, ",{}", p[k])?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_estimates_csv<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = &'a ReplicationRow>,
) -> io::Result<()> {
    writeln!(w, "{ESTIMATES_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.replication, r.seed, r.horizon, r.a_hat, r.b_hat, r.z_t, r.u_t, r.v_t, r.denominator
        )?;
    }
    w.flush()
}

pub fn write_replications_csv<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = &'a ReplicationRow>,
) -> io::Result<()> {
    writeln!(w, "{REPLICATIONS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.replication,
            r.seed,
            r.horizon,
            r.a_hat,
            r.b_hat,
            r.a_scaled,
            r.b_scaled,
            r.z_t,
            r.u_t,
            r.v_t,
            r.denominator
        )?;
    }
    w.flush()
}

/// `report.json`: summary, verdicts and provenance (rows go to the CSV).
pub fn write_report_json<W: Write>(mut w: W, report: &ExperimentReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}
