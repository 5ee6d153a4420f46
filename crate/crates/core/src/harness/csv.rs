//! CSV persistence with fixed headers and round-trip float formatting.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{CompareRow, ConvergenceRow, Row, RunRecord, Snapshot};
use crate::error::Result;
use crate::models::Model;

pub const EVOLUTION_HEADER: &str = "n,t,H,RM,lambda,tau,halvings";
pub const CONVERGENCE_HEADER: &str = "tau,l2,linf,order";
pub const COMPARE_HEADER: &str = "scheme,tau,l2,linf,order,rm_final,wall_seconds,steps,status";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn evolution_csv(rows: &[Row]) -> String {
    let mut s = String::from(EVOLUTION_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt_f64(r.t),
            fmt_f64(r.h),
            fmt_f64(r.rm),
            fmt_f64(r.lambda),
            fmt_f64(r.tau),
            r.halvings
        );
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.tau),
            fmt_f64(r.l2),
            fmt_f64(r.linf),
            fmt_f64(r.order)
        );
    }
    s
}

/// `wall_seconds` is the only column that differs between reruns.
pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from(COMPARE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            fmt_f64(r.tau),
            fmt_f64(r.l2),
            fmt_f64(r.linf),
            fmt_f64(r.order),
            fmt_f64(r.rm_final),
            fmt_f64(r.wall_seconds),
            r.steps,
            r.status
        );
    }
    s
}

/// Long-format field dump: one line per node and component, state
/// components first, then derived quantities.
pub fn snapshot_csv(model: &dyn Model, state: &[f64]) -> String {
    let grid = model.grid();
    let n = grid.len();
    let two_d = grid.dim() == 2;
    let mut s = String::from(if two_d { "x,y,component,value\n" } else { "x,component,value\n" });
    let coords: Vec<String> = (0..n)
        .map(|j| {
            let [x, y] = grid.coords(j);
            if two_d {
                format!("{},{}", fmt_f64(x), fmt_f64(y))
            } else {
                fmt_f64(x)
            }
        })
        .collect();
    let mut emit = |name: &str, values: &[f64]| {
        for (c, v) in coords.iter().zip(values) {
            let _ = writeln!(s, "{c},{name},{}", fmt_f64(*v));
        }
    };
    for (k, name) in model.components().iter().enumerate() {
        emit(name, &state[k * n..(k + 1) * n]);
    }
    for (name, values) in model.derived(state) {
        emit(name, &values);
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Snapshot file name for time `t`, e.g. `ring_t2.5.csv`.
pub fn snapshot_path(dir: &Path, name: &str, t: f64) -> PathBuf {
    dir.join(format!("{name}_t{t}.csv"))
}

/// Writes the evolution CSV (plus the original-energy CSV where present) and
/// every snapshot. Returns the written paths.
pub fn write_run(dir: &Path, name: &str, model: &dyn Model, record: &RunRecord) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join(format!("{name}_evolution.csv"));
    write_file(&path, &evolution_csv(&record.rows))?;
    written.push(path);
    if let Some(orig) = &record.original {
        let path = dir.join(format!("{name}_original_energy.csv"));
        write_file(&path, &evolution_csv(orig))?;
        written.push(path);
    }
    written.extend(write_snapshots(dir, name, model, &record.snapshots)?);
    Ok(written)
}

pub fn write_snapshots(
    dir: &Path,
    name: &str,
    model: &dyn Model,
    snapshots: &[Snapshot],
) -> Result<Vec<PathBuf>> {
    snapshots
        .iter()
        .map(|snap| {
            let path = snapshot_path(dir, name, snap.t);
            write_file(&path, &snapshot_csv(model, &snap.state))?;
            Ok(path)
        })
        .collect()
}
