use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Surface;
use crate::error::{Error, Result};
use crate::math::Vec2;

/// A physical anchor with a known position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: usize,
    pub pos: Vec2,
}

/// Walls, anchors and the region of interest, as stored in the JSON
/// environment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub surfaces: Vec<Surface>,
    pub pas: Vec<Anchor>,
    /// `[min, max]` corners; defaults to the bounding box of walls and anchors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<[Vec2; 2]>,
}

impl Environment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let env: Environment =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        env.validate()?;
        Ok(env)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("environment serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.surfaces.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.rho) {
                return Err(Error::Config(format!("surface {k}: rho {} outside [0,1]", s.rho)));
            }
            if !(s.length() > 0.0) || !s.p1.is_finite() || !s.p2.is_finite() {
                return Err(Error::Config(format!("surface {k} is degenerate")));
            }
        }
        if self.pas.is_empty() {
            return Err(Error::Config("environment needs at least one anchor".into()));
        }
        if let Some([lo, hi]) = self.roi {
            if !(lo.x < hi.x && lo.y < hi.y) {
                return Err(Error::Config("roi min must be below max".into()));
            }
        }
        Ok(())
    }

    pub fn roi(&self) -> [Vec2; 2] {
        if let Some(r) = self.roi {
            return r;
        }
        let pts = self
            .surfaces
            .iter()
            .flat_map(|s| [s.p1, s.p2])
            .chain(self.pas.iter().map(|a| a.pos));
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        [lo, hi]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let [lo, hi] = self.roi();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Axis-aligned rectangular room with walls of reflection coefficient
    /// `rho[k]` (bottom, right, top, left).
    pub fn rectangular_room(min: Vec2, max: Vec2, rho: [f64; 4], pas: &[Vec2]) -> Self {
        let c = [min, Vec2::new(max.x, min.y), max, Vec2::new(min.x, max.y)];
        let surfaces = (0..4)
            .map(|k| Surface::new(c[k], c[(k + 1) % 4], rho[k]))
            .collect();
        Environment {
            surfaces,
            pas: pas
                .iter()
                .enumerate()
                .map(|(id, &pos)| Anchor { id, pos })
                .collect(),
            roi: Some([min, max]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let env = Environment::rectangular_room(
            Vec2::new(-2.5, -2.5),
            Vec2::new(2.5, 2.5),
            [0.5, 0.8, 0.5, 0.8],
            &[Vec2::new(-1.5, 1.8)],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("env.json");
        env.save(&path).unwrap();
        assert_eq!(Environment::load(&path).unwrap(), env);
    }

    #[test]
    fn parses_documented_schema() {
        let text = r#"{"surfaces":[{"p1":[0,0],"p2":[1,0],"rho":0.5}],"pas":[{"id":3,"pos":[0.5,0.5]}]}"#;
        let env: Environment = serde_json::from_str(text).unwrap();
        env.validate().unwrap();
        assert_eq!(env.pas[0].id, 3);
        assert_eq!(env.roi(), [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.5)]);
    }

    #[test]
    fn rejects_bad_rho() {
        let mut env = Environment::rectangular_room(Vec2::ZERO, Vec2::new(1.0, 1.0), [0.5; 4], &[Vec2::new(0.5, 0.5)]);
        env.surfaces[0].rho = 1.5;
        assert!(env.validate().is_err());
    }
}
