use serde::{Deserialize, Serialize};

use crate::math::Vec2;

/// An infinite reflecting line `{x : normal · (x - point) = 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    /// Unit normal.
    pub normal: Vec2,
}

impl Line {
    /// Line through two distinct points.
    pub fn through(p1: Vec2, p2: Vec2) -> Option<Line> {
        let dir = (p2 - p1).normalized()?;
        Some(Line {
            point: p1,
            normal: dir.perp(),
        })
    }

    /// Line whose foot of perpendicular from `reference` is `foot`. Undefined
    /// when the two coincide.
    pub fn from_foot(foot: Vec2, reference: Vec2) -> Option<Line> {
        let normal = (foot - reference).normalized()?;
        Some(Line {
            point: foot,
            normal,
        })
    }

    /// Foot of the perpendicular from `p`.
    pub fn foot(&self, p: Vec2) -> Vec2 {
        p - self.normal * self.signed_distance(p)
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal.dot(p - self.point)
    }

    pub fn mirror(&self, p: Vec2) -> Vec2 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Crossing of the segment `a -> b` with the line, as the segment
    /// parameter `t` and the point. `None` when parallel.
    pub fn crossing(&self, a: Vec2, b: Vec2) -> Option<(f64, Vec2)> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        let denom = da - db;
        if denom == 0.0 {
            return None;
        }
        let t = da / denom;
        Some((t, a + (b - a) * t))
    }
}

/// A finite reflecting wall with reflection coefficient `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub p1: Vec2,
    pub p2: Vec2,
    pub rho: f64,
}

impl Surface {
    pub fn new(p1: Vec2, p2: Vec2, rho: f64) -> Self {
        Surface { p1, p2, rho }
    }

    pub fn line(&self) -> Option<Line> {
        Line::through(self.p1, self.p2)
    }

    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }

    /// Whether `q` (assumed on the line) projects inside the segment.
    pub fn spans(&self, q: Vec2, tol: f64) -> bool {
        let d = self.p2 - self.p1;
        let len2 = d.norm_sq();
        let s = (q - self.p1).dot(d) / len2;
        let slack = tol / len2.sqrt();
        (-slack..=1.0 + slack).contains(&s)
    }

    /// Whether the open segment `a -> b` properly crosses this wall, with
    /// contacts within `tol` of either segment's endpoints ignored.
    pub fn blocks(&self, a: Vec2, b: Vec2, tol: f64) -> bool {
        let r = b - a;
        let s = self.p2 - self.p1;
        let denom = r.cross(s);
        let len_r = r.norm();
        let len_s = s.norm();
        if denom.abs() <= 1e-15 * len_r * len_s {
            return false;
        }
        let t = (self.p1 - a).cross(s) / denom;
        let u = (self.p1 - a).cross(r) / denom;
        let tr = tol / len_r;
        let ts = tol / len_s;
        t > tr && t < 1.0 - tr && u > ts && u < 1.0 - ts
    }
}

/// Reflection of `p` across the infinite line through `surface`.
pub fn mirror_point(p: Vec2, surface: &Surface) -> Vec2 {
    match surface.line() {
        Some(l) => l.mirror(p),
        None => p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point_line_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
        // |cross| / base, written out independently of `Line`.
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        ((p.x - a.x) * dy - (p.y - a.y) * dx).abs() / (dx * dx + dy * dy).sqrt()
    }

    #[test]
    fn mirror_across_x_axis() {
        let s = Surface::new(Vec2::new(-1.0, 0.0), Vec2::new(5.0, 0.0), 0.5);
        let m = mirror_point(Vec2::new(1.0, 1.0), &s);
        assert!((m - Vec2::new(1.0, -1.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn mirror_is_involutive_and_isometric(
            px in -10.0f64..10.0, py in -10.0f64..10.0,
            ax in -10.0f64..10.0, ay in -10.0f64..10.0,
            bx in -10.0f64..10.0, by in -10.0f64..10.0,
        ) {
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            prop_assume!(a.dist(b) > 1e-3);
            let s = Surface::new(a, b, 0.5);
            let p = Vec2::new(px, py);
            let m = mirror_point(p, &s);
            prop_assert!(mirror_point(m, &s).dist(p) < 1e-9);
            let d1 = point_line_distance(p, a, b);
            let d2 = point_line_distance(m, a, b);
            prop_assert!((d1 - d2).abs() < 1e-9);
        }
    }

    #[test]
    fn foot_line_round_trip() {
        let l = Line::from_foot(Vec2::new(0.0, 2.0), Vec2::ZERO).unwrap();
        assert!((l.foot(Vec2::new(3.0, -1.0)) - Vec2::new(3.0, 2.0)).norm() < 1e-15);
        assert!(Line::from_foot(Vec2::ZERO, Vec2::ZERO).is_none());
    }

    #[test]
    fn blocking_ignores_endpoint_contact() {
        let w = Surface::new(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0), 0.5);
        assert!(w.blocks(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 1e-9));
        assert!(!w.blocks(Vec2::new(-1.0, 0.0), Vec2::new(0.0, 0.0), 1e-9));
        assert!(!w.blocks(Vec2::new(-1.0, 2.0), Vec2::new(1.0, 2.0), 1e-9));
        assert!(!w.blocks(Vec2::new(-1.0, 0.0), Vec2::new(-0.5, 0.0), 1e-9));
    }
}
