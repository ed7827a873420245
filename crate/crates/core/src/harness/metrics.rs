use serde::{Deserialize, Serialize};

use crate::dynamics::AgentState;
use crate::error::{Error, Result};
use crate::grid::{trace_ray, CellClassifier, CellSets, GridSpec, OccupancyGrid};
use crate::math::{wrap_angle, Vec2};
use crate::propagation::{Environment, PathKind};
use crate::synthesis::enumerate_true_paths;

/// Minimum-cost assignment of every row of a rectangular cost matrix with
/// `rows <= cols`. Returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    // Potentials and the column matching, 1-based with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// OSPA distance with cutoff `c` and order `p`. Zero for two empty sets.
pub fn ospa(estimated: &[Vec2], truth: &[Vec2], c: f64, p: f64) -> f64 {
    let (small, large) = if estimated.len() <= truth.len() {
        (estimated, truth)
    } else {
        (truth, estimated)
    };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| a.dist(*b).min(c).powf(p)).collect())
        .collect();
    let assign = hungarian(&cost);
    let matched: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    let unmatched = (n - small.len()) as f64 * c.powf(p);
    ((matched + unmatched) / n as f64).powf(1.0 / p)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per-step errors of an estimated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryErrors {
    pub position: Vec<f64>,
    /// Degrees.
    pub orientation: Vec<f64>,
}

pub fn trajectory_errors(estimated: &[AgentState], truth: &[AgentState]) -> Result<TrajectoryErrors> {
    if estimated.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} estimates for {} true states",
            estimated.len(),
            truth.len()
        )));
    }
    Ok(TrajectoryErrors {
        position: estimated.iter().zip(truth).map(|(e, t)| e.p.dist(t.p)).collect(),
        orientation: estimated
            .iter()
            .zip(truth)
            .map(|(e, t)| wrap_angle(e.dphi - t.dphi).abs().to_degrees())
            .collect(),
    })
}

/// Foot points, seen from `reference`, of every wall that reflects at least
/// one visible path somewhere along the trajectory.
pub fn true_sfvs(env: &Environment, states: &[AgentState], reference: Vec2) -> Vec<Vec2> {
    let mut used = vec![false; env.surfaces.len()];
    for x in states {
        for pa in &env.pas {
            for path in enumerate_true_paths(env, x, pa.pos) {
                match path.geometry.kind {
                    PathKind::Los => {}
                    PathKind::Single(s) => used[s] = true,
                    PathKind::Double(s, t) => {
                        used[s] = true;
                        used[t] = true;
                    }
                }
            }
        }
    }
    env.surfaces
        .iter()
        .zip(used)
        .filter(|(_, u)| *u)
        .filter_map(|(s, _)| s.line().map(|l| l.foot(reference)))
        .collect()
}

/// Cells crossed by any wall segment.
pub fn wall_cells(env: &Environment, spec: &GridSpec) -> Vec<bool> {
    let mut wall = vec![false; spec.num_cells()];
    for s in &env.surfaces {
        for i in trace_ray(spec, s.p1, s.p2) {
            wall[i] = true;
        }
    }
    wall
}

/// How many true paths put each cell in their traversed and hit sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchCounts {
    pub traversed: Vec<u32>,
    pub hit: Vec<u32>,
}

pub fn touch_counts(
    env: &Environment,
    states: &[AgentState],
    spec: &GridSpec,
    hit_radius: f64,
    endpoint_guard: f64,
) -> TouchCounts {
    let q = spec.num_cells();
    let mut counts = TouchCounts {
        traversed: vec![0; q],
        hit: vec![0; q],
    };
    let mut classifier = CellClassifier::new(hit_radius, endpoint_guard);
    let mut sets = CellSets::default();
    for x in states {
        for pa in &env.pas {
            for path in enumerate_true_paths(env, x, pa.pos) {
                classifier.classify_into(spec, path.geometry.vertices(), &mut sets);
                for &i in &sets.traversed {
                    counts.traversed[i] += 1;
                }
                for &i in &sets.hit {
                    counts.hit[i] += 1;
                }
            }
        }
    }
    counts
}

/// Map quality against the rasterized walls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OccupancyStats {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    /// Over all cells at threshold 0.5; NaN when nothing is predicted.
    pub precision: f64,
    pub recall: f64,
    /// Wall cells touched by at least `min_paths` true paths.
    pub wall_cells_touched: usize,
    /// ... of which end with `p_occ > 0.5`.
    pub wall_cells_occupied: usize,
    /// Non-wall cells traversed by at least `min_paths` true paths.
    pub free_cells_traversed: usize,
    /// ... of which end with `p_occ < 0.3`.
    pub free_cells_free: usize,
    pub min_paths: u32,
}

impl OccupancyStats {
    pub fn wall_fraction(&self) -> f64 {
        self.wall_cells_occupied as f64 / self.wall_cells_touched as f64
    }

    pub fn free_fraction(&self) -> f64 {
        self.free_cells_free as f64 / self.free_cells_traversed as f64
    }
}

pub fn occupancy_stats(
    grid: &OccupancyGrid,
    wall: &[bool],
    touches: &TouchCounts,
    min_paths: u32,
) -> OccupancyStats {
    let mut s = OccupancyStats {
        min_paths,
        ..Default::default()
    };
    for (i, &p) in grid.p_occ.iter().enumerate() {
        let occ = p > 0.5;
        match (wall[i], occ) {
            (true, true) => s.true_positive += 1,
            (true, false) => s.false_negative += 1,
            (false, true) => s.false_positive += 1,
            (false, false) => s.true_negative += 1,
        }
        if wall[i] && touches.traversed[i] + touches.hit[i] >= min_paths {
            s.wall_cells_touched += 1;
            s.wall_cells_occupied += occ as usize;
        }
        if !wall[i] && touches.traversed[i] >= min_paths {
            s.free_cells_traversed += 1;
            s.free_cells_free += (p < 0.3) as usize;
        }
    }
    let pred = s.true_positive + s.false_positive;
    s.precision = if pred > 0 {
        s.true_positive as f64 / pred as f64
    } else {
        f64::NAN
    };
    let pos = s.true_positive + s.false_negative;
    s.recall = if pos > 0 {
        s.true_positive as f64 / pos as f64
    } else {
        f64::NAN
    };
    s
}
