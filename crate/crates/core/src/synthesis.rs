//! Synthetic multipath measurements from a wall environment.
//!
//! True paths (LOS plus single and double bounces off finite walls, with
//! occlusion) are perturbed with the same noise model the filter assumes:
//! Rician amplitude with a detection threshold, Gaussian distance and
//! wrapped-Gaussian angle errors with amplitude-dependent variances, and
//! Poisson false alarms drawn from the false-alarm density.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::AgentState;
use crate::error::{Error, Result};
use crate::math::{wrap_angle, Vec2};
use crate::propagation::{
    solve_path, Environment, Measurement, PathGeometry, PathKind, RadioConstants, Roi,
};
use crate::rng::{substream, tag};

/// Tolerance for contacts that do not count as occlusion.
pub const OCCLUSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub waypoints: Vec<Vec2>,
    pub step_size: f64,
    pub dt: f64,
    /// Orientation change per step (rad).
    #[serde(default)]
    pub orientation_drift: f64,
    /// Offset added to the heading of the first segment (rad).
    #[serde(default)]
    pub orientation_offset: f64,
    /// Keep only the first `max_states` states.
    #[serde(default)]
    pub max_states: Option<usize>,
}

/// Agent states sampled every `step_size` along the waypoint polyline.
pub fn generate_trajectory(cfg: &TrajectoryConfig, roi: [Vec2; 2]) -> Result<Vec<AgentState>> {
    if cfg.waypoints.len() < 2 {
        return Err(Error::Config("trajectory needs at least two waypoints".into()));
    }
    if !(cfg.step_size > 0.0 && cfg.dt > 0.0) {
        return Err(Error::Config("step size and dt must be positive".into()));
    }
    let [lo, hi] = roi;
    for w in &cfg.waypoints {
        if !(w.x >= lo.x && w.x <= hi.x && w.y >= lo.y && w.y <= hi.y) {
            return Err(Error::Config(format!("waypoint {w:?} outside the region of interest")));
        }
    }
    let seg_len: Vec<f64> = cfg.waypoints.windows(2).map(|w| w[0].dist(w[1])).collect();
    let total: f64 = seg_len.iter().sum();
    let n = (total / cfg.step_size + 1e-9).floor() as usize + 1;
    let n = cfg.max_states.map_or(n, |m| m.min(n));

    let mut positions = Vec::with_capacity(n);
    let (mut seg, mut start) = (0usize, 0.0f64);
    for k in 0..n {
        let s = k as f64 * cfg.step_size;
        while seg + 1 < seg_len.len() && s > start + seg_len[seg] {
            start += seg_len[seg];
            seg += 1;
        }
        let (a, b) = (cfg.waypoints[seg], cfg.waypoints[seg + 1]);
        let t = if seg_len[seg] > 0.0 {
            ((s - start) / seg_len[seg]).min(1.0)
        } else {
            0.0
        };
        positions.push(a + (b - a) * t);
    }
    let heading = (cfg.waypoints[1] - cfg.waypoints[0]).angle();
    Ok((0..n)
        .map(|k| {
            let v = if n == 1 {
                Vec2::ZERO
            } else if k == 0 {
                (positions[1] - positions[0]) * (1.0 / cfg.dt)
            } else {
                (positions[k] - positions[k - 1]) * (1.0 / cfg.dt)
            };
            AgentState {
                p: positions[k],
                v,
                dphi: wrap_angle(heading + cfg.orientation_offset + cfg.orientation_drift * k as f64),
            }
        })
        .collect())
}

/// A visible specular path and its attenuation `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruePath {
    pub geometry: PathGeometry,
    pub beta: f64,
}

fn occluded(env: &Environment, path: &PathGeometry) -> bool {
    let own: &[usize] = match &path.kind {
        PathKind::Los => &[],
        PathKind::Single(s) => std::slice::from_ref(s),
        PathKind::Double(s, t) => &[*s, *t][..],
    };
    path.segments().any(|(a, b)| {
        env.surfaces
            .iter()
            .enumerate()
            .any(|(k, s)| !own.contains(&k) && s.blocks(a, b, OCCLUSION_TOL))
    })
}

/// LOS, then single bounces by wall index, then ordered double bounces,
/// keeping only paths whose reflection points lie on their walls and whose
/// segments cross no other wall.
pub fn enumerate_true_paths(env: &Environment, agent: &AgentState, pa: Vec2) -> Vec<TruePath> {
    let mut out = Vec::new();
    let mut push = |geometry: Option<PathGeometry>, beta: f64| {
        if let Some(g) = geometry {
            if !occluded(env, &g) {
                out.push(TruePath { geometry: g, beta });
            }
        }
    };
    push(solve_path(agent.p, agent.dphi, pa, &[]), 1.0);
    let ws = &env.surfaces;
    for (s, w) in ws.iter().enumerate() {
        let g = solve_path(agent.p, agent.dphi, pa, &[*w]).map(|g| g.with_kind(PathKind::Single(s)));
        push(g, w.rho);
    }
    for s in 0..ws.len() {
        for t in 0..ws.len() {
            if s == t {
                continue;
            }
            let g = solve_path(agent.p, agent.dphi, pa, &[ws[s], ws[t]])
                .map(|g| g.with_kind(PathKind::Double(s, t)));
            push(g, ws[s].rho * ws[t].rho);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub mu_fa: f64,
    pub d_max: f64,
    /// Emit every path at its exact parameters with no false alarms.
    #[serde(default)]
    pub noiseless: bool,
}

/// Draws a Rician amplitude for a path of amplitude `u`.
pub fn sample_amplitude<R: Rng + ?Sized>(u: f64, rng: &mut R) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let n1: f64 = StandardNormal.sample(rng);
    let n2: f64 = StandardNormal.sample(rng);
    let (re, im) = (u + s * n1, s * n2);
    re.hypot(im)
}

/// Measurements of one anchor at one agent state, in shuffled order.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    paths: &[TruePath],
    rc: &RadioConstants,
    opts: &SynthOptions,
    rng: &mut R,
) -> Vec<Measurement> {
    let mut out = Vec::with_capacity(paths.len() + 2);
    for p in paths {
        let g = &p.geometry;
        let u = rc.amplitude(p.beta, g.length);
        if opts.noiseless {
            out.push(Measurement {
                z_d: g.length,
                z_aod: g.aod,
                z_aoa: g.aoa,
                z_u: u.max(rc.u_de),
            });
            continue;
        }
        let z_u = sample_amplitude(u, rng);
        if z_u < rc.u_de {
            continue;
        }
        let v = rc.variances(u);
        let n = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
        out.push(Measurement {
            z_d: (g.length + v.d.sqrt() * n(rng)).max(1e-6),
            z_aod: wrap_angle(g.aod + v.aod.sqrt() * n(rng)),
            z_aoa: wrap_angle(g.aoa + v.aoa.sqrt() * n(rng)),
            z_u,
        });
    }
    if !opts.noiseless && opts.mu_fa > 0.0 {
        let count = Poisson::new(opts.mu_fa).map(|p| p.sample(rng)).unwrap_or(0.0) as usize;
        for _ in 0..count {
            out.push(sample_false_alarm(rc, &Roi { d_max: opts.d_max }, rng));
        }
    }
    out.shuffle(rng);
    out
}

/// One draw from the false-alarm density.
pub fn sample_false_alarm<R: Rng + ?Sized>(rc: &RadioConstants, roi: &Roi, rng: &mut R) -> Measurement {
    let pi = std::f64::consts::PI;
    let e: f64 = Exp1.sample(rng);
    Measurement {
        z_d: roi.d_max * (1.0 - rng.random::<f64>()),
        z_aod: wrap_angle(rng.random_range(-pi..pi)),
        z_aoa: wrap_angle(rng.random_range(-pi..pi)),
        z_u: (rc.u_de * rc.u_de + e).sqrt(),
    }
}

/// Measurements indexed by time step and anchor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementLog {
    pub steps: Vec<Vec<Vec<Measurement>>>,
}

impl MeasurementLog {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn get(&self, n: usize, j: usize) -> &[Measurement] {
        &self.steps[n][j]
    }
}

/// Synthesizes measurements for every state and anchor. Step `n`, anchor
/// `j` draws from its own stream.
pub fn synthesize_log(
    env: &Environment,
    states: &[AgentState],
    rc: &RadioConstants,
    opts: &SynthOptions,
    seed: u64,
) -> MeasurementLog {
    let steps = states
        .par_iter()
        .enumerate()
        .map(|(n, x)| {
            env.pas
                .iter()
                .enumerate()
                .map(|(j, pa)| {
                    let paths = enumerate_true_paths(env, x, pa.pos);
                    let mut rng = substream(seed, &[tag::SYNTH, n as u64], j as u64);
                    synthesize_measurements(&paths, rc, opts, &mut rng)
                })
                .collect()
        })
        .collect();
    MeasurementLog { steps }
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    n: usize,
    j: usize,
    m: usize,
    z_d: f64,
    z_aod: f64,
    z_aoa: f64,
    z_u: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    n: usize,
    p_x: f64,
    p_y: f64,
    v_x: f64,
    v_y: f64,
    dphi: f64,
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

/// Writes `n,j,m,z_d,z_aod,z_aoa,z_u` with `m` counted from 1.
pub fn write_measurements_csv(log: &MeasurementLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (n, per_pa) in log.steps.iter().enumerate() {
        for (j, ms) in per_pa.iter().enumerate() {
            for (m, z) in ms.iter().enumerate() {
                w.serialize(MeasurementRow {
                    n,
                    j,
                    m: m + 1,
                    z_d: z.z_d,
                    z_aod: z.z_aod,
                    z_aoa: z.z_aoa,
                    z_u: z.z_u,
                })
                .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a measurement log with the given number of steps and anchors.
pub fn read_measurements_csv(path: &Path, n_steps: usize, n_pas: usize) -> Result<MeasurementLog> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut steps = vec![vec![Vec::new(); n_pas]; n_steps];
    for row in r.deserialize() {
        let row: MeasurementRow = row.map_err(|e| csv_err(path, e))?;
        if row.n >= n_steps || row.j >= n_pas {
            return Err(Error::format(
                path,
                format!("row (n={}, j={}) outside {n_steps} steps x {n_pas} anchors", row.n, row.j),
            ));
        }
        let list = &mut steps[row.n][row.j];
        if row.m != list.len() + 1 {
            return Err(Error::format(path, format!("measurement index {} out of order", row.m)));
        }
        list.push(Measurement {
            z_d: row.z_d,
            z_aod: row.z_aod,
            z_aoa: row.z_aoa,
            z_u: row.z_u,
        });
    }
    Ok(MeasurementLog { steps })
}

pub fn write_truth_csv(states: &[AgentState], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (n, x) in states.iter().enumerate() {
        w.serialize(TruthRow {
            n,
            p_x: x.p.x,
            p_y: x.p.y,
            v_x: x.v.x,
            v_y: x.v.y,
            dphi: x.dphi,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<AgentState>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: TruthRow = row.map_err(|e| csv_err(path, e))?;
        if row.n != out.len() {
            return Err(Error::format(path, format!("state {} out of order", row.n)));
        }
        out.push(AgentState {
            p: Vec2::new(row.p_x, row.p_y),
            v: Vec2::new(row.v_x, row.v_y),
            dphi: row.dphi,
        });
    }
    Ok(out)
}
