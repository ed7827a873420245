//! Occupancy grid storage and the per-cell side of the sum-product updates.
//!
//! A propagation ray interacts with the grid through two cell sets: the
//! *traversed* cells, all of which must be free for the path to exist, and the
//! *hit* cells around each reflection point, at least one of which must be
//! occupied. Every other cell is unconstrained by that ray.

mod cells;
mod io;
mod messages;
mod raycast;

pub use cells::{classify_cells, classify_polyline, CellClassifier, CellSets};
pub use io::{read_occupancy_csv, write_occupancy_csv, write_occupancy_pgm};
pub use messages::{
    cell_message, fuse_cell_beliefs, path_validity_message, predict_grid, predict_grid_markov,
    CellClass, LogOddsAccumulator, RayEvidence, DIVISION_GUARD,
};
pub use raycast::trace_ray;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec2;

/// Geometry of a row-major square-cell grid.
///
/// Cell `(row, col)` has index `row * nx + col` and covers
/// `[origin + (col, row) * cell_size, origin + (col + 1, row + 1) * cell_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Vec2, cell_size: f64, nx: usize, ny: usize) -> Result<Self> {
        let spec = GridSpec {
            origin,
            cell_size,
            nx,
            ny,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Smallest grid with the given cell size covering `[min, max]`.
    pub fn covering(min: Vec2, max: Vec2, cell_size: f64) -> Result<Self> {
        let nx = ((max.x - min.x) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let ny = ((max.y - min.y) / cell_size - 1e-9).ceil().max(1.0) as usize;
        GridSpec::new(min, cell_size, nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::Config(format!(
                "cell size must be positive, got {}",
                self.cell_size
            )));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("grid must have at least one cell".into()));
        }
        if !self.origin.is_finite() {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.ny && col < self.nx);
        row * self.nx + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.nx, index % self.nx)
    }

    pub fn center(&self, index: usize) -> Vec2 {
        let (row, col) = self.row_col(index);
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn max_corner(&self) -> Vec2 {
        Vec2::new(
            self.origin.x + self.nx as f64 * self.cell_size,
            self.origin.y + self.ny as f64 * self.cell_size,
        )
    }

    /// Index of the cell containing `p`, if any.
    pub fn cell_of(&self, p: Vec2) -> Option<usize> {
        let gx = ((p.x - self.origin.x) / self.cell_size).floor();
        let gy = ((p.y - self.origin.y) / self.cell_size).floor();
        if gx < 0.0 || gy < 0.0 || gx >= self.nx as f64 || gy >= self.ny as f64 {
            return None;
        }
        Some(self.index(gy as usize, gx as usize))
    }
}

/// Per-cell occupancy probabilities `p(o_i = 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub p_occ: Vec<f64>,
}

impl OccupancyGrid {
    pub fn uniform(spec: &GridSpec, p: f64) -> Self {
        OccupancyGrid {
            p_occ: vec![p; spec.num_cells()],
        }
    }

    pub fn len(&self) -> usize {
        self.p_occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_occ.is_empty()
    }

    pub fn free(&self, i: usize) -> f64 {
        1.0 - self.p_occ[i]
    }

    pub fn occupied(&self, i: usize) -> f64 {
        self.p_occ[i]
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        if self.p_occ.len() != spec.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} cells, spec expects {}",
                self.p_occ.len(),
                spec.num_cells()
            )));
        }
        if let Some((i, p)) = self
            .p_occ
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InvalidArgument(format!(
                "occupancy of cell {i} is {p}, outside [0, 1]"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(Vec2::ZERO, 0.0, 2, 2).is_err());
        assert!(GridSpec::new(Vec2::ZERO, 1.0, 0, 2).is_err());
    }

    #[test]
    fn covering_grid_contains_bounds() {
        let g = GridSpec::covering(Vec2::new(-2.8, -2.8), Vec2::new(2.8, 2.8), 0.06).unwrap();
        assert_eq!(g.nx, 94);
        assert!(g.max_corner().x >= 2.8);
    }

    #[test]
    fn half_open_cells() {
        let g = GridSpec::new(Vec2::ZERO, 1.0, 4, 4).unwrap();
        assert_eq!(g.cell_of(Vec2::new(1.0, 0.5)), Some(1));
        assert_eq!(g.cell_of(Vec2::new(0.999, 0.5)), Some(0));
        assert_eq!(g.cell_of(Vec2::new(4.0, 0.5)), None);
        assert_eq!(g.cell_of(Vec2::new(-0.001, 0.5)), None);
    }

    proptest! {
        #[test]
        fn index_round_trip(nx in 1usize..50, ny in 1usize..50, i in 0usize..2500) {
            let g = GridSpec::new(Vec2::ZERO, 0.5, nx, ny).unwrap();
            let i = i % g.num_cells();
            let (r, c) = g.row_col(i);
            prop_assert_eq!(g.index(r, c), i);
            prop_assert_eq!(g.cell_of(g.center(i)), Some(i));
        }
    }
}
