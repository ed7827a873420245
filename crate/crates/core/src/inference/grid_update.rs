//! Cell messages of one legacy path, averaged over its particle tuples.
//!
//! For tuple `k` the message to cell `i` is `e s_k P_k(i, o) + ν(0) (1 - e)`,
//! where `P_k(i, o)` is the validity of the tuple's path given `o_i = o`,
//! divided by the same normalizer as the path evidence. Cells a tuple's ray
//! does not touch see `P_k = ṽ_k` for both states, so every cell shares one
//! base sum and only touched cells need per-cell corrections.

use serde::{Deserialize, Serialize};

use super::evidence::{GridView, PathEvidence};
use crate::grid::DIVISION_GUARD;

/// Validity conditionals used for hit cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitMessage {
    /// Marginalizes the other hit cells: matches enumeration of the factor.
    #[default]
    Exact,
    /// Treats every hit cell as the only one: `P(V | 1) = v / α(1)`,
    /// `P(V | 0) = 0`.
    Independent,
}

/// Scratch arrays sized to the grid, reused across paths.
pub struct CellScratch {
    ns: Vec<f64>,
    cs: Vec<[f64; 2]>,
    touched: Vec<u32>,
    seen: Vec<bool>,
    hit_free: Vec<f64>,
}

impl CellScratch {
    pub fn new(num_cells: usize) -> Self {
        CellScratch {
            ns: vec![0.0; num_cells],
            cs: vec![[0.0; 2]; num_cells],
            touched: Vec::new(),
            seen: vec![false; num_cells],
            hit_free: Vec::new(),
        }
    }

    fn touch(&mut self, i: u32) {
        let iu = i as usize;
        if !self.seen[iu] {
            self.seen[iu] = true;
            self.touched.push(i);
        }
    }
}

/// Log ratios `ln κ(1) - ln κ(0)` for every cell touched by some tuple of
/// `ev`, appended to `out` in ascending cell order.
pub fn path_cell_log_ratios(
    view: &GridView,
    ev: &PathEvidence,
    log_nu: &[f64],
    form: HitMessage,
    scratch: &mut CellScratch,
    out: &mut Vec<(u32, f64)>,
) {
    let cache = &ev.cache;
    let n = ev.num_particles();
    let ln_e = ev.existence.ln();
    let ln_tail = (1.0 - ev.existence).ln() + log_nu[0];

    // ln(c_k e s_k): the weight of tuple k's validity conditionals.
    let log_w: Vec<f64> = (0..n)
        .map(|k| {
            if cache.log_v[k] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                cache.log_c[k] + ln_e + cache.log_s(k, log_nu)
            }
        })
        .collect();
    let scale = log_w
        .iter()
        .zip(0..n)
        .map(|(w, k)| w + cache.log_vn(k))
        .fold(ln_tail, f64::max);
    if !scale.is_finite() {
        return;
    }

    let mut base = 0.0;
    for k in 0..n {
        if log_w[k] == f64::NEG_INFINITY {
            continue;
        }
        let a = (log_w[k] - scale).exp();
        let v = cache.log_vn(k).exp();
        base += a * v;
        let tr = cache.traversed(k);
        let hit = cache.hit(k);
        for &i in tr {
            let iu = i as usize;
            let a0 = view.free[iu];
            let p0 = if a0 < DIVISION_GUARD { 0.0 } else { v / a0 };
            scratch.touch(i);
            accumulate(scratch, iu, a, v, [p0, 0.0]);
        }
        if hit.is_empty() {
            continue;
        }
        let ln_t: f64 = tr.iter().map(|&i| view.ln_free[i as usize]).sum();
        let tp = (ln_t - cache.ln_vbar).exp();
        scratch.hit_free.clear();
        scratch.hit_free.extend(hit.iter().map(|&i| view.free[i as usize]));
        let h = hit.len();
        let mut prefix = 1.0;
        for (idx, &i) in hit.iter().enumerate() {
            let iu = i as usize;
            let pv = match form {
                HitMessage::Exact => {
                    let suffix: f64 = scratch.hit_free[idx + 1..h].iter().product();
                    [tp * (1.0 - prefix * suffix), tp]
                }
                HitMessage::Independent => {
                    let a1 = 1.0 - view.free[iu];
                    [0.0, if a1 < DIVISION_GUARD { 0.0 } else { v / a1 }]
                }
            };
            prefix *= scratch.hit_free[idx];
            scratch.touch(i);
            accumulate(scratch, iu, a, v, pv);
        }
    }
    let tail = (ln_tail - scale).exp();

    scratch.touched.sort_unstable();
    for t in 0..scratch.touched.len() {
        let i = scratch.touched[t];
        let iu = i as usize;
        let rest = clamp_rest(base, scratch.ns[iu]);
        let k0 = rest + scratch.cs[iu][0] + tail;
        let k1 = rest + scratch.cs[iu][1] + tail;
        let r = if k0 > 0.0 || k1 > 0.0 { k1.ln() - k0.ln() } else { f64::NAN };
        out.push((i, r));
        scratch.ns[iu] = 0.0;
        scratch.cs[iu] = [0.0; 2];
        scratch.seen[iu] = false;
    }
    scratch.touched.clear();
}

#[inline]
fn accumulate(s: &mut CellScratch, i: usize, a: f64, v: f64, pv: [f64; 2]) {
    s.ns[i] += a * v;
    s.cs[i][0] += a * pv[0];
    s.cs[i][1] += a * pv[1];
}

/// `total - touched`, the contribution of tuples that do not touch the cell.
/// Differences at rounding level are zero.
#[inline]
fn clamp_rest(total: f64, touched: f64) -> f64 {
    let d = total - touched;
    if d <= 1e-12 * total {
        0.0
    } else {
        d
    }
}
