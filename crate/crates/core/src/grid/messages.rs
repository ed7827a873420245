use super::{CellSets, OccupancyGrid};

/// Below this a prior mass is treated as zero when it would be divided by.
pub const DIVISION_GUARD: f64 = 1e-12;

/// Probability mass of the occupancy configurations that support a path:
/// every traversed cell free and at least one hit cell occupied. An empty hit
/// set (line of sight) contributes a factor of one.
pub fn path_validity_message(alpha: &OccupancyGrid, sets: &CellSets) -> f64 {
    let free: f64 = sets.traversed.iter().map(|&i| alpha.free(i)).product();
    free * hit_support(alpha, &sets.hit)
}

fn hit_support(alpha: &OccupancyGrid, hit: &[usize]) -> f64 {
    if hit.is_empty() {
        1.0
    } else {
        1.0 - hit.iter().map(|&i| alpha.free(i)).product::<f64>()
    }
}

/// How a ray constrains one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Traversed,
    Hit,
    Unconstrained,
}

impl CellSets {
    pub fn class_of(&self, i: usize) -> CellClass {
        if self.is_traversed(i) {
            CellClass::Traversed
        } else if self.is_hit(i) {
            CellClass::Hit
        } else {
            CellClass::Unconstrained
        }
    }
}

/// Per-ray quantities entering the cell messages.
///
/// `eta[a]` is the association message into the path for `a = 0` (missed)
/// and `a = m`. `lik[0]` is `1 - p_d`; `lik[m]` is the detected-path
/// likelihood of measurement `m` times `p_d`, divided by the false-alarm
/// intensity. `existence` and `nonexistence` are the predicted masses of the
/// path's features; they need not sum to one.
#[derive(Debug, Clone, Copy)]
pub struct RayEvidence<'a> {
    pub eta: &'a [f64],
    pub lik: &'a [f64],
    pub existence: f64,
    pub nonexistence: f64,
}

/// Probabilities that the path is valid given `o_i = 0` and `o_i = 1`, with
/// every other cell marginalized under `alpha`.
pub fn conditional_validity(alpha: &OccupancyGrid, sets: &CellSets, cell: usize) -> [f64; 2] {
    match sets.class_of(cell) {
        CellClass::Traversed => {
            let v = path_validity_message(alpha, sets);
            let a0 = alpha.free(cell);
            let p0 = if a0 < DIVISION_GUARD {
                0.0
            } else {
                v / a0
            };
            [p0, 0.0]
        }
        CellClass::Hit => {
            let free: f64 = sets.traversed.iter().map(|&i| alpha.free(i)).product();
            let others: f64 = sets
                .hit
                .iter()
                .filter(|&&i| i != cell)
                .map(|&i| alpha.free(i))
                .product();
            [free * (1.0 - others), free]
        }
        CellClass::Unconstrained => {
            let v = path_validity_message(alpha, sets);
            [v, v]
        }
    }
}

/// Message `[κ(0), κ(1)]` from one ray's factor to one cell.
///
/// With the features present the factor admits only configurations that
/// support the path, so `κ(o) = e Σ_a η(a) lik(a) P(V | o) + η(0) (1 - e)`.
/// For a traversed cell this is the usual `Σ η R / α(o = 0) + η(0) R̄`; a ray
/// without evidence leaves every cell flat.
pub fn cell_message(
    cell: usize,
    sets: &CellSets,
    alpha: &OccupancyGrid,
    ev: &RayEvidence<'_>,
) -> [f64; 2] {
    let pv = conditional_validity(alpha, sets, cell);
    let s: f64 = ev.eta.iter().zip(ev.lik).map(|(e, l)| e * l).sum();
    pv.map(|p| ev.existence * s * p + ev.eta[0] * ev.nonexistence)
}

/// Stationary grid prediction: the belief is carried over unchanged.
pub fn predict_grid(prev: &OccupancyGrid) -> OccupancyGrid {
    prev.clone()
}

/// Prediction under a symmetric flip kernel with flip probability `eps`.
pub fn predict_grid_markov(prev: &OccupancyGrid, eps: f64) -> OccupancyGrid {
    OccupancyGrid {
        p_occ: prev
            .p_occ
            .iter()
            .map(|&p| eps + (1.0 - 2.0 * eps) * p)
            .collect(),
    }
}

/// Per-cell product of incoming messages, kept as a log ratio
/// `ln κ(1) - ln κ(0)`. Cells that received an all-zero message keep their
/// prediction.
#[derive(Debug, Clone)]
pub struct LogOddsAccumulator {
    delta: Vec<f64>,
    degenerate: Vec<bool>,
}

impl LogOddsAccumulator {
    pub fn new(num_cells: usize) -> Self {
        LogOddsAccumulator {
            delta: vec![0.0; num_cells],
            degenerate: vec![false; num_cells],
        }
    }

    pub fn add(&mut self, cell: usize, kappa: [f64; 2]) {
        let [k0, k1] = kappa;
        if !(k0 > 0.0 || k1 > 0.0) {
            self.degenerate[cell] = true;
            return;
        }
        self.delta[cell] += k1.ln() - k0.ln();
    }

    /// Adds a precomputed log ratio.
    pub fn add_log_ratio(&mut self, cell: usize, log_ratio: f64) {
        if log_ratio.is_nan() {
            self.degenerate[cell] = true;
        } else {
            self.delta[cell] += log_ratio;
        }
    }

    pub fn log_ratio(&self, cell: usize) -> f64 {
        self.delta[cell]
    }

    /// Combines with the prediction and applies an optional lower floor.
    pub fn fuse(&self, prediction: &OccupancyGrid, floor: Option<f64>) -> OccupancyGrid {
        let p_occ = prediction
            .p_occ
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let post = if self.degenerate[i] || self.delta[i] == 0.0 {
                    p
                } else {
                    let x = p.ln() - (1.0 - p).ln() + self.delta[i];
                    if x.is_nan() {
                        p
                    } else {
                        logistic(x)
                    }
                };
                match floor {
                    Some(f) => post.max(f),
                    None => post,
                }
            })
            .collect();
        OccupancyGrid { p_occ }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Normalized cell beliefs `∝ α(o_i) ∏ κ(o_i)` for a list of `(cell, κ)`
/// messages, followed by the optional occupancy floor.
pub fn fuse_cell_beliefs(
    prediction: &OccupancyGrid,
    messages: &[(usize, [f64; 2])],
    floor: Option<f64>,
) -> OccupancyGrid {
    let mut acc = LogOddsAccumulator::new(prediction.len());
    for &(i, k) in messages {
        acc.add(i, k);
    }
    acc.fuse(prediction, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(p: &[f64]) -> OccupancyGrid {
        OccupancyGrid { p_occ: p.to_vec() }
    }

    // Sum over all configurations of the prior mass of those supporting the path.
    fn validity_by_enumeration(p: &[f64], sets: &CellSets) -> f64 {
        let q = p.len();
        let mut total = 0.0;
        for bits in 0u32..(1 << q) {
            let occ = |i: usize| bits >> i & 1 == 1;
            let valid = sets.traversed.iter().all(|&i| !occ(i))
                && (sets.hit.is_empty() || sets.hit.iter().any(|&i| occ(i)));
            if valid {
                total += (0..q)
                    .map(|i| if occ(i) { p[i] } else { 1.0 - p[i] })
                    .product::<f64>();
            }
        }
        total
    }

    fn random_sets(rng: &mut ChaCha8Rng, q: usize) -> CellSets {
        let mut sets = CellSets::default();
        for i in 0..q {
            match rng.random_range(0..3) {
                0 => sets.traversed.push(i),
                1 => sets.hit.push(i),
                _ => {}
            }
        }
        sets
    }

    #[test]
    fn validity_trivial_cases() {
        let g = grid(&[0.0, 0.0, 1.0]);
        let sets = CellSets {
            traversed: vec![0, 1],
            hit: vec![2],
        };
        assert_eq!(path_validity_message(&g, &sets), 1.0);
        let g = grid(&[1.0, 0.0, 1.0]);
        assert_eq!(path_validity_message(&g, &sets), 0.0);
    }

    #[test]
    fn validity_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = 10;
            let p: Vec<f64> = (0..q).map(|_| rng.random()).collect();
            let sets = random_sets(&mut rng, q);
            let a = path_validity_message(&grid(&p), &sets);
            let b = validity_by_enumeration(&p, &sets);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn validity_is_monotone(
            p in proptest::collection::vec(0.0f64..1.0, 8),
            cell in 0usize..8,
            bump in 0.0f64..1.0,
            assign in proptest::collection::vec(0u8..3, 8),
        ) {
            let mut sets = CellSets::default();
            for (i, a) in assign.iter().enumerate() {
                match a { 0 => sets.traversed.push(i), 1 => sets.hit.push(i), _ => {} }
            }
            let base = path_validity_message(&grid(&p), &sets);
            let mut q = p.clone();
            if sets.is_hit(cell) {
                q[cell] = p[cell] + (1.0 - p[cell]) * bump;
            } else {
                q[cell] = p[cell] * (1.0 - bump);
            }
            let moved = path_validity_message(&grid(&q), &sets);
            prop_assert!(moved >= base - 1e-15);
            prop_assert!((0.0..=1.0).contains(&moved));
        }
    }

    #[test]
    fn evidence_free_messages_are_flat() {
        let g = grid(&[0.3, 0.6, 0.5, 0.2]);
        let sets = CellSets {
            traversed: vec![0],
            hit: vec![1, 2],
        };
        let eta = [0.4, 0.6];
        let lik = [0.0, 0.0];
        let ev = RayEvidence {
            eta: &eta,
            lik: &lik,
            existence: 0.7,
            nonexistence: 0.3,
        };
        for i in 0..4 {
            let [k0, k1] = cell_message(i, &sets, &g, &ev);
            assert!((k0 - k1).abs() < 1e-15);
            assert!((k0 - 0.12).abs() < 1e-15);
        }
    }

    #[test]
    fn traversed_cell_with_certain_association() {
        let g = grid(&[0.5, 0.5, 0.1]);
        let sets = CellSets {
            traversed: vec![0, 1],
            hit: vec![],
        };
        let eta = [0.0, 1.0];
        let lik = [0.2, 3.0];
        let ev = RayEvidence {
            eta: &eta,
            lik: &lik,
            existence: 1.0,
            nonexistence: 0.0,
        };
        let v = path_validity_message(&g, &sets);
        let r = ev.existence * lik[1] * v;
        let [k0, k1] = cell_message(0, &sets, &g, &ev);
        assert!((k0 - 2.0 * r).abs() < 1e-15);
        assert_eq!(k1, 0.0);
        let [u0, u1] = cell_message(2, &sets, &g, &ev);
        assert_eq!(u0, u1);
    }

    #[test]
    fn division_guard_drops_quotient() {
        let g = grid(&[1.0, 0.5]);
        let sets = CellSets {
            traversed: vec![0, 1],
            hit: vec![],
        };
        assert_eq!(conditional_validity(&g, &sets, 0), [0.0, 0.0]);
    }

    // Exact single-factor joint over (a, o): prior α on the cells, the
    // measurement-side weights on a, and the path factor coupling them.
    fn exact_marginals(p: &[f64], sets: &CellSets, nu: &[f64], lik: &[f64], e: f64, ne: f64) -> Vec<f64> {
        let q = p.len();
        let mut occ_mass = vec![0.0; q];
        let mut total = 0.0;
        for bits in 0u32..(1 << q) {
            let occ = |i: usize| bits >> i & 1 == 1;
            let valid = sets.traversed.iter().all(|&i| !occ(i))
                && (sets.hit.is_empty() || sets.hit.iter().any(|&i| occ(i)));
            let prior: f64 = (0..q).map(|i| if occ(i) { p[i] } else { 1.0 - p[i] }).product();
            let vf = if valid { 1.0 } else { 0.0 };
            let mut w = nu[0] * ne;
            for m in 0..nu.len() {
                w += nu[m] * e * lik[m] * vf;
            }
            let mass = prior * w;
            total += mass;
            for (i, acc) in occ_mass.iter_mut().enumerate() {
                if occ(i) {
                    *acc += mass;
                }
            }
        }
        occ_mass.iter().map(|m| m / total).collect()
    }

    #[test]
    fn single_factor_fusion_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let q = 10;
            let p: Vec<f64> = (0..q).map(|_| rng.random_range(0.05..0.95)).collect();
            let sets = random_sets(&mut rng, q);
            let nu = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
            let pd: f64 = rng.random_range(0.1..0.99);
            let lik = [1.0 - pd, pd * rng.random_range(0.1..50.0)];
            let e = rng.random_range(0.0..1.0);
            let ev = RayEvidence {
                eta: &nu,
                lik: &lik,
                existence: e,
                nonexistence: 1.0 - e,
            };
            let g = grid(&p);
            let msgs: Vec<_> = (0..q).map(|i| (i, cell_message(i, &sets, &g, &ev))).collect();
            let fused = fuse_cell_beliefs(&g, &msgs, None);
            let exact = exact_marginals(&p, &sets, &nu, &lik, e, 1.0 - e);
            for i in 0..q {
                assert!((fused.p_occ[i] - exact[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prediction_is_identity() {
        let g = grid(&[0.5, 0.123456789, 1.0, 0.0]);
        assert_eq!(predict_grid(&g), g);
    }

    #[test]
    fn markov_prediction_matches_two_state_chain() {
        let eps = 0.07;
        let p = 0.3;
        // Transition matrix applied to [1 - p, p].
        let occ = (1.0 - p) * eps + p * (1.0 - eps);
        let out = predict_grid_markov(&grid(&[p]), eps);
        assert!((out.p_occ[0] - occ).abs() < 1e-15);
    }

    #[test]
    fn fusion_edge_cases() {
        let g = grid(&[0.5, 0.2, 0.9]);
        assert_eq!(fuse_cell_beliefs(&g, &[], None), g);
        let flat = fuse_cell_beliefs(&g, &[(0, [2.0, 2.0]), (1, [0.0, 0.0])], None);
        assert_eq!(flat, g);
        let floored = fuse_cell_beliefs(&g, &[(0, [1.0, 0.0]), (1, [5.0, 1.0])], Some(0.15));
        assert!(floored.p_occ.iter().all(|&p| p >= 0.15));
        assert_eq!(floored.p_occ[0], 0.15);
    }
}
