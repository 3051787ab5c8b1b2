//! CSV tables and grid dumps. Every float is written with 17 significant
//! digits so that equal bits give equal bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nullsim::diagnostics::{approach_rays, DiagnosticsRecord, RaySelector};
use nullsim::evolution::write_checkpoint;
use nullsim::{FieldState, PointStatus};

use crate::error::{CliError, CliResult};

pub const RAY_HEADER: [&str; 8] = ["r", "m", "mu", "K", "r_nu", "r_lambda", "r2_z", "r2_w"];

const GRID_HEADER: [&str; 12] = ["i", "j", "u", "v", "status", "r", "log_omega", "phi", "nu", "lambda", "z", "w"];

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional float for a CSV field: empty when absent.
pub fn field(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn ray_file_name(ray: RaySelector) -> String {
    match ray {
        RaySelector::ConstV(j) => format!("ray_v{j:05}.csv"),
        RaySelector::ConstU(i) => format!("ray_u{i:05}.csv"),
    }
}

/// Central `v = const` approach ray, or the middle `v = const` ray when the
/// run excised nothing.
pub fn default_rays(state: &FieldState) -> Vec<RaySelector> {
    let rays = approach_rays(state);
    let j = rays.get(rays.len() / 2).copied().unwrap_or(state.grid().n_v / 2);
    vec![RaySelector::ConstV(j)]
}

/// Diagnostics along the active run of `ray`, one row per point.
pub fn write_ray_csv(state: &FieldState, ray: RaySelector, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RAY_HEADER)?;
    for (i, j) in ray.active_points(state) {
        let Some(d) = DiagnosticsRecord::at(state, i, j) else { continue };
        w.write_record([
            fmt17(d.r),
            fmt17(d.m),
            fmt17(d.mu),
            field(d.kretschmann),
            fmt17(d.r_nu),
            fmt17(d.r_lambda),
            fmt17(d.r2_z),
            fmt17(d.r2_w),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Every grid point with its status and all seven fields.
pub fn write_grid_dump(state: &FieldState, out: impl Write) -> csv::Result<()> {
    let g = state.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER)?;
    for i in 0..g.n_u {
        for j in 0..g.n_v {
            let (u, v) = g.coords(i, j);
            let p = state.get(i, j);
            let status = match state.status(i, j) {
                PointStatus::Unset => "unset",
                PointStatus::Active => "active",
                PointStatus::Excised => "excised",
            };
            let mut row = vec![i.to_string(), j.to_string(), fmt17(u), fmt17(v), status.to_string()];
            row.extend([p.r, p.log_omega, p.phi, p.nu, p.lambda, p.z, p.w].map(fmt17));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

pub fn save_ray(state: &FieldState, ray: RaySelector, dir: &Path) -> CliResult<PathBuf> {
    let path = dir.join(ray_file_name(ray));
    write_ray_csv(state, ray, create(&path)?).map_err(|e| csv_error(&path, e))?;
    Ok(path)
}

pub fn save_grid_dump(state: &FieldState, dir: &Path) -> CliResult<PathBuf> {
    let path = dir.join("grid.csv");
    write_grid_dump(state, create(&path)?).map_err(|e| csv_error(&path, e))?;
    Ok(path)
}

pub fn save_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub const CHECKPOINT_FILE: &str = "checkpoint.dnck";

/// Write a checkpoint next to its final name, then rename over it, so an
/// interrupted write never leaves a truncated checkpoint behind.
pub fn save_checkpoint(state: &FieldState, diagonal: usize, dir: &Path) -> nullsim::Result<()> {
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    let mut w = BufWriter::new(File::create(&tmp)?);
    write_checkpoint(state, diagonal, &mut w)?;
    w.flush()?;
    drop(w);
    std::fs::rename(&tmp, dir.join(CHECKPOINT_FILE))?;
    Ok(())
}

/// Rows of preformatted fields under `header`.
pub fn write_rows(header: &[&str], rows: &[Vec<String>], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_rows(header: &[&str], rows: &[Vec<String>], path: &Path) -> CliResult<()> {
    write_rows(header, rows, create(path)?).map_err(|e| csv_error(path, e))
}
