use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::FIELD_NAMES;

use super::config::OutputFormat;
use super::scenario::ScenarioOutput;
use super::sweep::SweepResult;

/// Shortest round-trip text of `x`.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Columns `t`, the fifteen observables, then `concurrence`.
pub fn trajectory_header() -> Vec<&'static str> {
    let mut h = vec!["t"];
    h.extend(FIELD_NAMES);
    h.push("concurrence");
    h
}

pub fn write_trajectory_csv(path: &Path, out: &ScenarioOutput) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(trajectory_header())?;
    for ((t, s), c) in out.trajectory.times.iter().zip(&out.trajectory.states).zip(&out.concurrence) {
        let mut row = vec![num(*t)];
        row.extend(s.to_array().iter().map(|v| num(*v)));
        row.push(num(c.value));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `<name>.csv` and `<name>.json` (or only the JSON document) and
/// returns the paths written.
pub fn write_scenario(dir: &Path, out: &ScenarioOutput, format: OutputFormat) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let name = &out.metadata.name;
    match format {
        OutputFormat::Csv => {
            let csv = dir.join(format!("{name}.csv"));
            write_trajectory_csv(&csv, out)?;
            #[derive(Serialize)]
            struct Meta<'a> {
                #[serde(flatten)]
                metadata: &'a super::scenario::RunMetadata,
                method: crate::dynamics::Method,
                stats: &'a crate::dynamics::SolverStats,
                steady_state: &'a crate::dynamics::SteadyState,
                columns: Vec<&'static str>,
            }
            let meta = dir.join(format!("{name}.json"));
            write_json(
                &meta,
                &Meta {
                    metadata: &out.metadata,
                    method: out.trajectory.method,
                    stats: &out.trajectory.stats,
                    steady_state: &out.steady_state,
                    columns: trajectory_header(),
                },
            )?;
            Ok(vec![csv, meta])
        }
        OutputFormat::Json => {
            let path = dir.join(format!("{name}.json"));
            write_json(&path, out)?;
            Ok(vec![path])
        }
    }
}

const SWEEP_COLUMNS: [&str; 13] = [
    "ix",
    "iy",
    "x",
    "y",
    "max_concurrence",
    "time_of_max",
    "max_at_end",
    "decay_time",
    "steady_Mz",
    "steady_Mzz",
    "steady_Mc",
    "steady_mode",
    "error",
];

pub fn write_sweep_csv(path: &Path, res: &SweepResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for c in &res.cells {
        let mut row = vec![c.ix.to_string(), c.iy.to_string(), num(c.x), num(c.y)];
        match &c.record {
            Some(r) => {
                let s = &r.steady_state;
                let mode = serde_json::to_value(s.mode)?.as_str().unwrap_or_default().to_string();
                row.extend([
                    num(r.max_concurrence),
                    num(r.time_of_max),
                    r.max_at_end.to_string(),
                    opt(r.decay_time_estimate),
                    num(s.values.mz),
                    num(s.values.mzz),
                    num(s.values.mc),
                    mode,
                    String::new(),
                ]);
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(c.error.clone().unwrap_or_default());
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the sweep table (`<name>_sweep.csv`, CSV format only) and the
/// full result (`<name>_sweep.json`).
pub fn write_sweep(dir: &Path, res: &SweepResult, format: OutputFormat) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut paths = Vec::new();
    if format == OutputFormat::Csv {
        let csv = dir.join(format!("{}_sweep.csv", res.name));
        write_sweep_csv(&csv, res)?;
        paths.push(csv);
    }
    let json = dir.join(format!("{}_sweep.json", res.name));
    write_json(&json, res)?;
    paths.push(json);
    Ok(paths)
}
