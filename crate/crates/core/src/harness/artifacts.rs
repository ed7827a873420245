use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::AgentState;
use crate::error::{Error, Result};
use crate::inference::{PathEstimate, PsfvEstimate};
use crate::math::{wrap_angle, Vec2};
use crate::synthesis::csv_err;

/// One row of the trajectory file. The truth columns are empty when the
/// run had no ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub p_x: f64,
    pub p_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub dphi: f64,
    pub true_p_x: Option<f64>,
    pub true_p_y: Option<f64>,
    pub true_dphi: Option<f64>,
    pub position_error: Option<f64>,
    pub orientation_error_deg: Option<f64>,
}

pub fn write_trajectory_csv(est: &[AgentState], truth: Option<&[AgentState]>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (n, x) in est.iter().enumerate() {
        let t = truth.and_then(|t| t.get(n));
        w.serialize(TrajectoryRow {
            n: n + 1,
            p_x: x.p.x,
            p_y: x.p.y,
            v_x: x.v.x,
            v_y: x.v.y,
            dphi: x.dphi,
            true_p_x: t.map(|t| t.p.x),
            true_p_y: t.map(|t| t.p.y),
            true_dphi: t.map(|t| t.dphi),
            position_error: t.map(|t| x.p.dist(t.p)),
            orientation_error_deg: t.map(|t| wrap_angle(x.dphi - t.dphi).abs().to_degrees()),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Estimated states of a trajectory file, in step order.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<AgentState>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: TrajectoryRow = row.map_err(|e| csv_err(path, e))?;
        if row.n != out.len() + 1 {
            return Err(Error::format(path, format!("step {} out of order", row.n)));
        }
        out.push(AgentState {
            p: Vec2::new(row.p_x, row.p_y),
            v: Vec2::new(row.v_x, row.v_y),
            dphi: row.dphi,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SfvRow {
    id: u64,
    p_x: f64,
    p_y: f64,
    rho: f64,
    r_prob: f64,
}

pub fn write_sfvs_csv(sfvs: &[PsfvEstimate], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for s in sfvs {
        w.serialize(SfvRow {
            id: s.id,
            p_x: s.p.x,
            p_y: s.p.y,
            rho: s.rho,
            r_prob: s.r_prob,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sfvs_csv(path: &Path) -> Result<Vec<PsfvEstimate>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| {
            let row: SfvRow = row.map_err(|e| csv_err(path, e))?;
            Ok(PsfvEstimate {
                id: row.id,
                p: Vec2::new(row.p_x, row.p_y),
                rho: row.rho,
                r_prob: row.r_prob,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct PathRow {
    n: u64,
    pa: usize,
    /// Feature ids separated by `;`, empty for LOS.
    features: String,
    /// `x y` pairs separated by `;`.
    vertices: String,
    length: f64,
    aod: f64,
    aoa: f64,
    u: f64,
    var_d: f64,
    var_aod: f64,
    var_aoa: f64,
    var_u: f64,
}

/// Per-step path estimates, one row per path.
pub fn write_paths_csv(paths: &[(u64, PathEstimate)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (n, p) in paths {
        let features: Vec<String> = p.features.iter().map(u64::to_string).collect();
        let vertices: Vec<String> = p.vertices.iter().map(|v| format!("{} {}", v.x, v.y)).collect();
        w.serialize(PathRow {
            n: *n,
            pa: p.pa,
            features: features.join(";"),
            vertices: vertices.join(";"),
            length: p.length,
            aod: p.aod,
            aoa: p.aoa,
            u: p.u,
            var_d: p.variances.d,
            var_aod: p.variances.aod,
            var_aoa: p.variances.aoa,
            var_u: p.variances.u,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let xs = vec![
            AgentState { p: Vec2::new(0.1, -0.2), v: Vec2::new(0.05, 0.0), dphi: 0.3 },
            AgentState { p: Vec2::new(0.15, -0.2), v: Vec2::new(0.05, 0.0), dphi: -0.1 },
        ];
        write_trajectory_csv(&xs, Some(&xs), &path).unwrap();
        assert_eq!(read_trajectory_csv(&path).unwrap(), xs);
        write_trajectory_csv(&xs, None, &path).unwrap();
        assert_eq!(read_trajectory_csv(&path).unwrap(), xs);
    }

    #[test]
    fn sfv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = vec![PsfvEstimate { id: 4, p: Vec2::new(2.5, 0.0), rho: 0.8, r_prob: 0.97 }];
        write_sfvs_csv(&s, &path).unwrap();
        assert_eq!(read_sfvs_csv(&path).unwrap(), s);
    }
}
