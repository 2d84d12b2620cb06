//! CSV formats: trajectory output, count/schedule ingestion and comparison tables.
//!
//! Trajectories are written as
//! `t,x1,x2,x2_hat,u_ugml,u_uM,r,envelope,pi` with every value in
//! scientific notation with 9 significant digits and `\n` line endings;
//! `envelope` is left empty for strategies without a decay target.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{Comparison, MICROMOLAR_PER_UGML};
use crate::control::{DoseSchedule, DoseSegment};
use crate::error::{Error, Result};
use crate::sim::TrajectoryRecord;

pub const TRAJECTORY_HEADER: &str = "t,x1,x2,x2_hat,u_ugml,u_uM,r,envelope,pi";
pub const COUNTS_HEADER: &str = "t_hours,value";
pub const SCHEDULE_HEADER: &str = "t_hours,dose_uM";

fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_trajectory<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in records {
        let u_um = r.u * MICROMOLAR_PER_UGML;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            sci(r.t),
            sci(r.x1),
            sci(r.x2),
            sci(r.x2_hat),
            sci(r.u),
            sci(u_um),
            sci(r.r),
            r.envelope.map(sci).unwrap_or_default(),
            sci(r.pi)
        )?;
    }
    w.flush()
}

pub fn write_trajectory_csv(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(BufWriter::new(file), records).map_err(|e| Error::io(path, e))
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn headers(path: &Path, rdr: &mut csv::Reader<File>) -> Result<String> {
    let h = rdr.headers().map_err(|e| csv_error(path, e))?;
    Ok(h.iter().collect::<Vec<_>>().join(","))
}

fn field(path: &Path, line: u64, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = rec.get(idx).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {name}"),
    })?;
    raw.parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column {name}: '{raw}' is not a number"),
    })
}

/// Reads a trajectory written by [`write_trajectory_csv`].
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let mut rdr = open_reader(path)?;
    let h = headers(path, &mut rdr)?;
    if h != TRAJECTORY_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header '{TRAJECTORY_HEADER}', found '{h}'"),
        });
    }
    let mut out: Vec<TrajectoryRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize, name: &str| field(path, line, &rec, i, name);
        let envelope = match rec.get(7) {
            Some("") | None => None,
            Some(_) => Some(f(7, "envelope")?),
        };
        let r = TrajectoryRecord {
            t: f(0, "t")?,
            x1: f(1, "x1")?,
            x2: f(2, "x2")?,
            x2_hat: f(3, "x2_hat")?,
            u: f(4, "u_ugml")?,
            r: f(6, "r")?,
            envelope,
            pi: f(8, "pi")?,
        };
        if out.last().is_some_and(|prev| !(r.t > prev.t)) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("time {} does not increase", r.t),
            });
        }
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentData {
    /// Observed populations `(t hours, cells/ml)`.
    Counts(Vec<(f64, f64)>),
    Schedule(DoseSchedule),
}

/// Reads `t_hours,value` (counts) or `t_hours,dose_uM` (dose schedule).
/// Times must be strictly increasing.
pub fn read_experiment_csv(path: &Path) -> Result<ExperimentData> {
    let mut rdr = open_reader(path)?;
    let h = headers(path, &mut rdr)?;
    let is_schedule = match h.as_str() {
        SCHEDULE_HEADER => true,
        COUNTS_HEADER => false,
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header '{COUNTS_HEADER}' or '{SCHEDULE_HEADER}', found '{h}'"),
            })
        }
    };
    let value_name = if is_schedule { "dose_uM" } else { "value" };
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let t = field(path, line, &rec, 0, "t_hours")?;
        let v = field(path, line, &rec, 1, value_name)?;
        if let Some(&(prev, _)) = rows.last() {
            if !(t > prev) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("t_hours = {t} is not after the previous row ({prev})"),
                });
            }
        }
        if !(v.is_finite() && v >= 0.0) || !t.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("row ({t}, {v}) must be finite with a non-negative value"),
            });
        }
        rows.push((t, v));
    }
    if is_schedule {
        let segments = rows
            .into_iter()
            .map(|(start, dose_um)| DoseSegment { start, dose_um })
            .collect();
        Ok(ExperimentData::Schedule(DoseSchedule::new(segments)?))
    } else {
        Ok(ExperimentData::Counts(rows))
    }
}

pub fn write_comparison<W: Write>(mut w: W, rows: &[Comparison]) -> std::io::Result<()> {
    writeln!(w, "t_hours,simulated,observed,log10_ratio")?;
    for c in rows {
        writeln!(
            w,
            "{},{},{},{}",
            sci(c.t),
            sci(c.simulated),
            sci(c.observed),
            sci(c.log10_ratio)
        )?;
    }
    w.flush()
}
