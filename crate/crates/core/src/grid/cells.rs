use super::raycast::trace_ray_into;
use super::GridSpec;
use crate::math::Vec2;
use crate::propagation::PathGeometry;

/// Cells a propagation ray constrains: `traversed` must all be free, at least
/// one of `hit` must be occupied. Both are sorted and disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellSets {
    pub traversed: Vec<usize>,
    pub hit: Vec<usize>,
}

impl CellSets {
    pub fn is_traversed(&self, i: usize) -> bool {
        self.traversed.binary_search(&i).is_ok()
    }

    pub fn is_hit(&self, i: usize) -> bool {
        self.hit.binary_search(&i).is_ok()
    }

    pub fn clear(&mut self) {
        self.traversed.clear();
        self.hit.clear();
    }
}

/// Reusable classifier holding the hit radius, the endpoint guard and a
/// scratch buffer, so hot loops do not allocate per ray.
#[derive(Debug, Clone)]
pub struct CellClassifier {
    pub hit_radius: f64,
    pub endpoint_guard: f64,
    scratch: Vec<usize>,
}

impl CellClassifier {
    pub fn new(hit_radius: f64, endpoint_guard: f64) -> Self {
        CellClassifier {
            hit_radius,
            endpoint_guard,
            scratch: Vec::new(),
        }
    }

    /// Defaults relative to the cell size: hit radius 1.5 cells, guard 1 cell.
    pub fn for_grid(grid: &GridSpec) -> Self {
        CellClassifier::new(1.5 * grid.cell_size, grid.cell_size)
    }

    /// Classifies the polyline `vertices` (first and last are the ray
    /// endpoints, the ones in between are reflection points) into `out`.
    pub fn classify_into(&mut self, grid: &GridSpec, vertices: &[Vec2], out: &mut CellSets) {
        out.clear();
        if vertices.len() < 2 {
            return;
        }
        let interior = &vertices[1..vertices.len() - 1];
        for &q in interior {
            push_disc(grid, q, self.hit_radius, &mut out.hit);
        }
        out.hit.sort_unstable();
        out.hit.dedup();

        self.scratch.clear();
        for w in vertices.windows(2) {
            trace_ray_into(grid, w[0], w[1], &mut self.scratch);
        }
        self.scratch.sort_unstable();
        self.scratch.dedup();
        let first = vertices[0];
        let last = vertices[vertices.len() - 1];
        let guard_sq = self.endpoint_guard * self.endpoint_guard;
        for &i in &self.scratch {
            if out.hit.binary_search(&i).is_ok() {
                continue;
            }
            let c = grid.center(i);
            if (c - first).norm_sq() < guard_sq || (c - last).norm_sq() < guard_sq {
                continue;
            }
            out.traversed.push(i);
        }
    }
}

fn push_disc(grid: &GridSpec, q: Vec2, radius: f64, out: &mut Vec<usize>) {
    let cs = grid.cell_size;
    let r = radius * (1.0 + 1e-12);
    let lo_c = (((q.x - r - grid.origin.x) / cs).floor() as i64).max(0);
    let hi_c = (((q.x + r - grid.origin.x) / cs).floor() as i64).min(grid.nx as i64 - 1);
    let lo_r = (((q.y - r - grid.origin.y) / cs).floor() as i64).max(0);
    let hi_r = (((q.y + r - grid.origin.y) / cs).floor() as i64).min(grid.ny as i64 - 1);
    for row in lo_r..=hi_r {
        for col in lo_c..=hi_c {
            let i = grid.index(row as usize, col as usize);
            if (grid.center(i) - q).norm_sq() <= r * r {
                out.push(i);
            }
        }
    }
}

/// Classifies a polyline with a one-off classifier.
pub fn classify_polyline(
    grid: &GridSpec,
    vertices: &[Vec2],
    hit_radius: f64,
    endpoint_guard: f64,
) -> CellSets {
    let mut out = CellSets::default();
    CellClassifier::new(hit_radius, endpoint_guard).classify_into(grid, vertices, &mut out);
    out
}

/// Traversed and hit cells of a propagation path, with the endpoint guard set
/// to one cell.
pub fn classify_cells(grid: &GridSpec, path: &PathGeometry, hit_radius: f64) -> CellSets {
    classify_polyline(grid, &path.vertices(), hit_radius, grid.cell_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trace_ray;
    use std::collections::BTreeSet;

    fn disc_oracle(grid: &GridSpec, q: Vec2, r: f64) -> BTreeSet<usize> {
        (0..grid.num_cells())
            .filter(|&i| grid.center(i).dist(q) <= r + 1e-9)
            .collect()
    }

    #[test]
    fn los_has_no_hit_cells() {
        let g = GridSpec::new(Vec2::ZERO, 1.0, 10, 10).unwrap();
        let sets = classify_polyline(&g, &[Vec2::new(0.5, 5.5), Vec2::new(9.5, 5.5)], 1.5, 1.0);
        assert!(sets.hit.is_empty());
        let expect: Vec<usize> = (1..9).map(|c| g.index(5, c)).collect();
        assert_eq!(sets.traversed, expect);
    }

    #[test]
    fn hit_disc_at_cell_center_is_plus_shape() {
        let g = GridSpec::new(Vec2::ZERO, 1.0, 10, 10).unwrap();
        let q = g.center(g.index(5, 5));
        let sets = classify_polyline(&g, &[Vec2::new(0.5, 0.5), q, Vec2::new(9.5, 0.5)], 1.0, 1.0);
        let hit: BTreeSet<usize> = sets.hit.iter().copied().collect();
        assert_eq!(hit, disc_oracle(&g, q, 1.0));
        assert_eq!(hit.len(), 5);
    }

    #[test]
    fn double_bounce_sets_match_oracles() {
        let g = GridSpec::new(Vec2::new(-3.0, -3.0), 0.1, 60, 60).unwrap();
        let verts = [
            Vec2::new(-2.0, -1.0),
            Vec2::new(0.3, 2.9),
            Vec2::new(2.9, 0.4),
            Vec2::new(1.0, -2.0),
        ];
        let r = 0.15;
        let sets = classify_polyline(&g, &verts, r, 0.1);
        let mut hit = disc_oracle(&g, verts[1], r);
        hit.extend(disc_oracle(&g, verts[2], r));
        assert_eq!(sets.hit.iter().copied().collect::<BTreeSet<_>>(), hit);
        let mut trav: BTreeSet<usize> = BTreeSet::new();
        for w in verts.windows(2) {
            trav.extend(trace_ray(&g, w[0], w[1]));
        }
        let trav: BTreeSet<usize> = trav
            .into_iter()
            .filter(|i| !hit.contains(i))
            .filter(|&i| g.center(i).dist(verts[0]) >= 0.1 && g.center(i).dist(verts[3]) >= 0.1)
            .collect();
        assert_eq!(sets.traversed.iter().copied().collect::<BTreeSet<_>>(), trav);
        assert!(sets.traversed.iter().all(|i| !sets.is_hit(*i)));
    }

    #[test]
    fn outside_path_is_empty() {
        let g = GridSpec::new(Vec2::ZERO, 1.0, 4, 4).unwrap();
        let sets = classify_polyline(
            &g,
            &[Vec2::new(-5.0, -5.0), Vec2::new(-4.0, -9.0), Vec2::new(-1.0, -1.0)],
            1.5,
            1.0,
        );
        assert_eq!(sets, CellSets::default());
    }
}
