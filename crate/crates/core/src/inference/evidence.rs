//! Path evidence from index-aligned particle tuples.
//!
//! Particle `k` of the agent is paired with particle `k` of every feature on
//! the path; the tuple weight is the product of the member weights. All
//! per-measurement quantities are natural logs relative to the false-alarm
//! intensity.

use rayon::prelude::*;

use crate::dynamics::{AgentParticles, PsfvBelief, CHUNK};
use crate::error::{Error, Result};
use crate::grid::{CellClassifier, CellSets, GridSpec, OccupancyGrid};
use crate::math::{log_sum_exp, Vec2};
use crate::propagation::{
    detection_probability, log_detected_likelihood, solve_path_lines, Line, Measurement, PathKind,
    RadioConstants,
};

/// `p_d(u)` tabulated on a uniform amplitude grid. Beyond the table the
/// exceedance is one to double precision.
#[derive(Debug, Clone)]
pub struct DetectionTable {
    step: f64,
    values: Vec<f64>,
}

impl DetectionTable {
    pub fn new(rc: &RadioConstants) -> Self {
        let step = 1e-3;
        let u_max = rc.u_de + 12.0;
        let n = (u_max / step).ceil() as usize + 1;
        let values = (0..=n)
            .into_par_iter()
            .map(|i| detection_probability(i as f64 * step, rc))
            .collect();
        DetectionTable { step, values }
    }

    #[inline]
    pub fn get(&self, u: f64) -> f64 {
        let x = (u.max(0.0)) / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap_or(&1.0);
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Free probabilities of the predicted grid, with their logs.
#[derive(Debug, Clone)]
pub struct GridView {
    pub spec: GridSpec,
    pub free: Vec<f64>,
    pub ln_free: Vec<f64>,
}

impl GridView {
    pub fn new(spec: GridSpec, grid: &OccupancyGrid) -> Self {
        let free: Vec<f64> = grid.p_occ.iter().map(|p| 1.0 - p).collect();
        let ln_free = free.iter().map(|f| f.ln()).collect();
        GridView { spec, free, ln_free }
    }
}

/// Everything a path evaluation needs besides the particles.
pub struct EvalContext<'a> {
    pub view: &'a GridView,
    pub rc: &'a RadioConstants,
    pub pd: &'a DetectionTable,
    pub reference: Vec2,
    pub pa: Vec2,
    pub measurements: &'a [Measurement],
    /// `ln(μ_fa f_fa(z_m))`.
    pub log_fa: &'a [f64],
    pub hit_radius: f64,
    pub endpoint_guard: f64,
    /// Divide every tuple's validity by the path average.
    pub normalize_validity: bool,
}

/// Evidence of one legacy path for the association, plus the per-particle
/// caches the belief updates reuse.
#[derive(Debug, Clone)]
pub struct PathEvidence {
    /// Features are positions in the legacy PSFV list.
    pub kind: PathKind,
    /// Predicted probability that all features of the path exist.
    pub existence: f64,
    /// `ln R(m)`, `m = 1..=M`.
    pub log_r: Vec<f64>,
    /// `ln ω(0)`: missed detection of an existing path plus nonexistence.
    pub log_r_bar: f64,
    /// Tuple-averaged path-validity message, before normalization.
    pub alpha_v: f64,
    pub(crate) cache: ParticleCache,
}

impl PathEvidence {
    pub fn r(&self, m: usize) -> f64 {
        self.log_r[m].exp()
    }

    pub fn r_bar(&self) -> f64 {
        self.log_r_bar.exp()
    }

    pub fn num_particles(&self) -> usize {
        self.cache.log_v.len()
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ParticleCache {
    pub n_meas: usize,
    /// Normalized tuple weights.
    pub log_c: Vec<f64>,
    /// `Σ ln(N w_k)` over the path's features.
    pub log_feature_ratio: Vec<f64>,
    /// Unnormalized validity; zero for geometrically infeasible tuples.
    pub log_v: Vec<f64>,
    /// Log of the divisor applied to `v` of feasible tuples; zero when not
    /// normalizing.
    pub ln_vbar: f64,
    pub pd: Vec<f64>,
    /// `ell[k * M + m]`.
    pub ell: Vec<f64>,
    /// Flattened traversed then hit cells per particle.
    pub cells: Vec<u32>,
    /// `(start, n_traversed, n_hit)` into `cells`.
    pub spans: Vec<[u32; 3]>,
    /// Path length, AoD, relative AoA and amplitude; NaN when invalid.
    pub geometry: Vec<[f64; 4]>,
}

impl ParticleCache {
    pub fn traversed(&self, k: usize) -> &[u32] {
        let [s, t, _] = self.spans[k];
        &self.cells[s as usize..(s + t) as usize]
    }

    pub fn hit(&self, k: usize) -> &[u32] {
        let [s, t, h] = self.spans[k];
        &self.cells[(s + t) as usize..(s + t + h) as usize]
    }

    /// `ln Σ_m ν(m) ell_k(m)` with `log_nu[0]` the miss entry.
    pub fn log_measured(&self, k: usize, log_nu: &[f64]) -> f64 {
        let m = self.n_meas;
        let row = &self.ell[k * m..(k + 1) * m];
        log_sum_exp(row.iter().zip(&log_nu[1..]).map(|(l, n)| l + n))
    }

    /// Whether the tuple's features admit a reflection path at all. An
    /// infeasible tuple has no ray and can only miss.
    #[inline]
    pub fn feasible(&self, k: usize) -> bool {
        !self.geometry[k][0].is_nan()
    }

    /// Normalized validity `ln ṽ_k`.
    #[inline]
    pub fn log_vn(&self, k: usize) -> f64 {
        if self.feasible(k) {
            self.log_v[k] - self.ln_vbar
        } else {
            0.0
        }
    }

    /// `ln s_k = ln Σ_a ν(a) lik_k(a)` with `lik_k(0) = 1 - p_d`.
    pub fn log_s(&self, k: usize, log_nu: &[f64]) -> f64 {
        crate::math::log_add(log_nu[0] + (1.0 - self.pd[k]).ln(), self.log_measured(k, log_nu))
    }

    /// `ln(ṽ_k s_k)`: the path factor of tuple `k` with the occupancy and the
    /// association summed out, given that the features exist. Infeasible
    /// tuples give `ν(0)`.
    pub fn log_exist_message(&self, k: usize, log_nu: &[f64]) -> f64 {
        if self.log_v[k] == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.log_vn(k) + self.log_s(k, log_nu)
    }
}

#[derive(Default)]
struct Chunk {
    geometry: Vec<[f64; 4]>,
    cells: Vec<u32>,
    spans: Vec<[u32; 3]>,
}

/// Wall-clock seconds spent in the two evaluation passes.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalTiming {
    pub ray_casting: f64,
    pub evidence: f64,
}

fn tuple_weights(agent: &AgentParticles, features: &[&PsfvBelief]) -> (Vec<f64>, Vec<f64>) {
    let n = agent.len() as f64;
    let mut log_c: Vec<f64> = agent.weights.iter().map(|w| w.ln()).collect();
    let mut ratio = vec![0.0; agent.len()];
    for f in features {
        for (k, w) in f.weights.iter().enumerate() {
            log_c[k] += w.ln();
            ratio[k] += (n * w).ln();
        }
    }
    let z = log_sum_exp(log_c.iter().copied());
    for l in &mut log_c {
        *l -= z;
    }
    (log_c, ratio)
}

/// Evaluates a path of `kind` whose features are `features` in bounce order.
pub fn evaluate_path(
    ctx: &EvalContext<'_>,
    agent: &AgentParticles,
    kind: PathKind,
    features: &[&PsfvBelief],
    existence: f64,
    timing: &mut EvalTiming,
) -> Result<PathEvidence> {
    let n = agent.len();
    if features.len() != kind.bounces() {
        return Err(Error::InvalidArgument("feature count does not match path kind".into()));
    }
    if features.iter().any(|f| f.particles.len() != n || f.weights.len() != n) {
        return Err(Error::InvalidArgument(
            "index-aligned pairing needs equal particle counts".into(),
        ));
    }
    let t0 = std::time::Instant::now();
    let spec = &ctx.view.spec;
    let chunks: Vec<Chunk> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut classifier = CellClassifier::new(ctx.hit_radius, ctx.endpoint_guard);
            let mut sets = CellSets::default();
            let mut out = Chunk::default();
            for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let x = &agent.states[k];
                let mut lines = [Line {
                    point: Vec2::ZERO,
                    normal: Vec2::new(1.0, 0.0),
                }; 2];
                let mut beta = 1.0;
                let mut ok = true;
                for (b, f) in features.iter().enumerate() {
                    let y = &f.particles[k];
                    match Line::from_foot(y.p, ctx.reference) {
                        Some(l) => lines[b] = l,
                        None => ok = false,
                    }
                    beta *= y.rho;
                }
                let geom = if ok {
                    solve_path_lines(x.p, x.dphi, ctx.pa, &lines[..features.len()])
                } else {
                    None
                };
                let start = out.cells.len() as u32;
                match geom {
                    Some(g) if g.length > 0.0 => {
                        classifier.classify_into(spec, g.vertices(), &mut sets);
                        out.cells.extend(sets.traversed.iter().map(|&i| i as u32));
                        out.cells.extend(sets.hit.iter().map(|&i| i as u32));
                        out.spans
                            .push([start, sets.traversed.len() as u32, sets.hit.len() as u32]);
                        let u = ctx.rc.amplitude(beta, g.length);
                        out.geometry.push([g.length, g.aod, g.aoa, u]);
                    }
                    _ => {
                        out.spans.push([start, 0, 0]);
                        out.geometry.push([f64::NAN; 4]);
                    }
                }
            }
            out
        })
        .collect();
    let mut cache = ParticleCache {
        n_meas: ctx.measurements.len(),
        ..Default::default()
    };
    for ch in chunks {
        let base = cache.cells.len() as u32;
        cache.cells.extend_from_slice(&ch.cells);
        cache
            .spans
            .extend(ch.spans.iter().map(|[s, t, h]| [s + base, *t, *h]));
        cache.geometry.extend_from_slice(&ch.geometry);
    }
    timing.ray_casting += t0.elapsed().as_secs_f64();

    let t1 = std::time::Instant::now();
    let m = ctx.measurements.len();
    let per: Vec<(f64, f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|k| {
            let [d, aod, aoa, u] = cache.geometry[k];
            if d.is_nan() {
                return (0.0, 0.0, vec![f64::NEG_INFINITY; m]);
            }
            let mut log_v: f64 = cache.traversed(k).iter().map(|&i| ctx.view.ln_free[i as usize]).sum();
            let hit = cache.hit(k);
            if !hit.is_empty() {
                let s: f64 = hit.iter().map(|&i| ctx.view.ln_free[i as usize]).sum();
                log_v += (-s.exp_m1()).ln();
            }
            let pd = ctx.pd.get(u);
            let ell = ctx
                .measurements
                .iter()
                .zip(ctx.log_fa)
                .map(|(z, fa)| log_detected_likelihood(z, d, aod, aoa, u, ctx.rc) - fa)
                .collect();
            (log_v, pd, ell)
        })
        .collect();
    cache.log_v.reserve(n);
    cache.pd.reserve(n);
    cache.ell.reserve(n * m);
    for (lv, pd, ell) in per {
        cache.log_v.push(lv);
        cache.pd.push(pd);
        cache.ell.extend(ell);
    }
    let (log_c, ratio) = tuple_weights(agent, features);
    cache.log_c = log_c;
    cache.log_feature_ratio = ratio;

    let feasible: Vec<usize> = (0..n).filter(|&k| cache.feasible(k)).collect();
    let ln_alpha_v = log_sum_exp(feasible.iter().map(|&k| cache.log_c[k] + cache.log_v[k]));
    let ln_feasible = log_sum_exp(feasible.iter().map(|&k| cache.log_c[k]));
    cache.ln_vbar = if ctx.normalize_validity && ln_alpha_v.is_finite() {
        ln_alpha_v - ln_feasible
    } else {
        0.0
    };
    let ln_e = existence.ln();
    let log_r = (0..m)
        .map(|j| {
            ln_e + log_sum_exp(
                (0..n).map(|k| cache.log_c[k] + cache.log_vn(k) + cache.ell[k * m + j]),
            )
        })
        .collect();
    let mut missed = 0.0;
    for k in 0..n {
        missed += (cache.log_c[k] + cache.log_vn(k)).exp() * (1.0 - cache.pd[k]);
    }
    let r_bar = (1.0 - existence) + existence * missed;
    timing.evidence += t1.elapsed().as_secs_f64();
    Ok(PathEvidence {
        kind,
        existence,
        log_r,
        log_r_bar: r_bar.max(f64::MIN_POSITIVE).ln(),
        alpha_v: ln_alpha_v.exp(),
        cache,
    })
}

/// Evidence of the line-of-sight path with existence probability `r_los`.
pub fn evaluate_los(
    ctx: &EvalContext<'_>,
    agent: &AgentParticles,
    r_los: f64,
    timing: &mut EvalTiming,
) -> Result<PathEvidence> {
    evaluate_path(ctx, agent, PathKind::Los, &[], r_los, timing)
}

/// Evidence of the single-bounce path off PSFV `s` (its list position).
pub fn evaluate_single_bounce(
    ctx: &EvalContext<'_>,
    agent: &AgentParticles,
    psfvs: &[PsfvBelief],
    s: usize,
    timing: &mut EvalTiming,
) -> Result<PathEvidence> {
    let y = &psfvs[s];
    evaluate_path(ctx, agent, PathKind::Single(s), &[y], y.r_prob, timing)
}

/// Evidence of the double-bounce path hitting `s` first, then `t`.
pub fn evaluate_double_bounce(
    ctx: &EvalContext<'_>,
    agent: &AgentParticles,
    psfvs: &[PsfvBelief],
    s: usize,
    t: usize,
    timing: &mut EvalTiming,
) -> Result<PathEvidence> {
    if s == t {
        return Err(Error::InvalidArgument("double bounce needs two distinct PSFVs".into()));
    }
    let (a, b) = (&psfvs[s], &psfvs[t]);
    evaluate_path(
        ctx,
        agent,
        PathKind::Double(s, t),
        &[a, b],
        a.r_prob * b.r_prob,
        timing,
    )
}
