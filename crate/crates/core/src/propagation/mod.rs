//! Specular propagation paths and the radio measurement model.
//!
//! Paths are built with image sources: the PA is mirrored across each
//! reflecting line in bounce order and the last image is joined to the agent.
//! Angles are wrapped to `(-pi, pi]`. The AoA is reported relative to the
//! agent array orientation.

mod environment;
mod geometry;
mod likelihood;
mod radio;

pub use environment::{Anchor, Environment};
pub use geometry::{mirror_point, Line, Surface};
pub use likelihood::{
    evaluate_lhf, false_alarm_density, log_detected_likelihood, log_false_alarm_density,
    log_wrapped_normal, Roi,
};
pub use radio::{
    array_constant, detection_probability, measurement_variances, normalized_amplitude,
    RadioConstants, Variances, SPEED_OF_LIGHT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{wrap_angle, Vec2};

/// One channel estimate: distance, AoD at the PA, AoA at the agent (relative
/// to its orientation) and normalized amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub z_d: f64,
    pub z_aod: f64,
    pub z_aoa: f64,
    pub z_u: f64,
}

impl Measurement {
    pub fn validate(&self, u_de: f64) -> Result<()> {
        let ok = self.z_d > 0.0
            && self.z_d.is_finite()
            && self.z_aod.is_finite()
            && self.z_aoa.is_finite()
            && self.z_u >= u_de
            && self.z_u.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid measurement {self:?}")))
        }
    }
}

/// Which features a path reflects off, in bounce order from the PA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    Single(usize),
    Double(usize, usize),
}

impl PathKind {
    pub fn bounces(&self) -> usize {
        match self {
            PathKind::Los => 0,
            PathKind::Single(_) => 1,
            PathKind::Double(..) => 2,
        }
    }
}

/// A resolved propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    pub kind: PathKind,
    pub length: f64,
    pub aod: f64,
    /// Arrival angle in the global frame.
    pub aoa_global: f64,
    /// Arrival angle relative to the agent orientation.
    pub aoa: f64,
    points: [Vec2; 4],
    n_points: usize,
}

impl PathGeometry {
    /// PA, interaction points, agent.
    pub fn vertices(&self) -> &[Vec2] {
        &self.points[..self.n_points]
    }

    pub fn interaction_points(&self) -> &[Vec2] {
        &self.points[1..self.n_points - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.vertices().windows(2).map(|w| (w[0], w[1]))
    }

    pub fn with_kind(mut self, kind: PathKind) -> Self {
        debug_assert_eq!(kind.bounces(), self.kind.bounces());
        self.kind = kind;
        self
    }
}

/// Resolves a path off infinite reflecting lines, given in bounce order from
/// the PA. Returns `None` when the image construction has no reflection
/// point strictly between its neighbours. The kind is labelled with the
/// positions in `lines`.
pub fn solve_path_lines(agent: Vec2, dphi: f64, pa: Vec2, lines: &[Line]) -> Option<PathGeometry> {
    let mut points = [Vec2::ZERO; 4];
    points[0] = pa;
    let kind = match lines.len() {
        0 => PathKind::Los,
        1 => {
            let va = lines[0].mirror(pa);
            let (t, q) = lines[0].crossing(agent, va)?;
            if !(t > 0.0 && t < 1.0) {
                return None;
            }
            points[1] = q;
            PathKind::Single(0)
        }
        2 => {
            let va1 = lines[0].mirror(pa);
            let va2 = lines[1].mirror(va1);
            let (t2, q2) = lines[1].crossing(agent, va2)?;
            if !(t2 > 0.0 && t2 < 1.0) {
                return None;
            }
            let (t1, q1) = lines[0].crossing(q2, va1)?;
            if !(t1 > 0.0 && t1 < 1.0) {
                return None;
            }
            points[1] = q1;
            points[2] = q2;
            PathKind::Double(0, 1)
        }
        _ => return None,
    };
    let n_points = lines.len() + 2;
    points[n_points - 1] = agent;
    let length: f64 = points[..n_points].windows(2).map(|w| w[0].dist(w[1])).sum();
    if length <= 0.0 {
        return None;
    }
    let aod = (points[1] - pa).angle();
    let aoa_global = (points[n_points - 2] - agent).angle();
    Some(PathGeometry {
        kind,
        length,
        aod,
        aoa_global,
        aoa: wrap_angle(aoa_global - dphi),
        points,
        n_points,
    })
}

/// Resolves a path off finite walls; a reflection point outside its wall
/// yields `None`.
pub fn solve_path(agent: Vec2, dphi: f64, pa: Vec2, surfaces: &[Surface]) -> Option<PathGeometry> {
    let mut lines = [Line {
        point: Vec2::ZERO,
        normal: Vec2::ZERO,
    }; 2];
    if surfaces.len() > 2 {
        return None;
    }
    for (l, s) in lines.iter_mut().zip(surfaces) {
        *l = s.line()?;
    }
    let path = solve_path_lines(agent, dphi, pa, &lines[..surfaces.len()])?;
    let on_walls = path
        .interaction_points()
        .iter()
        .zip(surfaces)
        .all(|(q, s)| s.spans(*q, 1e-12));
    on_walls.then_some(path)
}
