use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GridSpec, OccupancyGrid};
use crate::error::{Error, Result};

/// Writes an 8-bit binary PGM with the top image row at maximum y.
pub fn write_occupancy_pgm(spec: &GridSpec, grid: &OccupancyGrid, path: &Path) -> Result<()> {
    grid.validate(spec)?;
    let mut buf = format!("P5\n{} {}\n255\n", spec.nx, spec.ny).into_bytes();
    for row in (0..spec.ny).rev() {
        for col in 0..spec.nx {
            let p = grid.p_occ[spec.index(row, col)];
            buf.push((p * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes `i,row,col,p_occ`, one line per cell, values in shortest
/// round-trip form so that reading the file back is exact.
pub fn write_occupancy_csv(spec: &GridSpec, grid: &OccupancyGrid, path: &Path) -> Result<()> {
    grid.validate(spec)?;
    let mut out = Vec::with_capacity(grid.len() * 24);
    writeln!(out, "i,row,col,p_occ").expect("write to vec");
    for (i, p) in grid.p_occ.iter().enumerate() {
        let (row, col) = spec.row_col(i);
        writeln!(out, "{i},{row},{col},{p}").expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a map written by [`write_occupancy_csv`] and checks it against `spec`.
pub fn read_occupancy_csv(spec: &GridSpec, path: &Path) -> Result<OccupancyGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::format(path, reason);
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("i,row,col,p_occ") => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let mut p_occ = vec![f64::NAN; spec.num_cells()];
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {}: expected 4 fields", lineno + 2)));
        }
        let int = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))
        };
        let (i, row, col) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
        let p: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
        if i >= spec.num_cells() || spec.row_col(i) != (row, col) {
            return Err(bad(format!(
                "line {}: cell {i} ({row},{col}) does not fit a {}x{} grid",
                lineno + 2,
                spec.nx,
                spec.ny
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("line {}: p_occ {p} outside [0,1]", lineno + 2)));
        }
        if !p_occ[i].is_nan() {
            return Err(bad(format!("cell {i} listed twice")));
        }
        p_occ[i] = p;
        seen += 1;
    }
    if seen != spec.num_cells() {
        return Err(bad(format!(
            "{seen} cells listed, grid has {}",
            spec.num_cells()
        )));
    }
    Ok(OccupancyGrid { p_occ })
}
