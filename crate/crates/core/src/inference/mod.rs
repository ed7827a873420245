//! The particle-based sum-product filter.
//!
//! One time step is a prediction followed by one update per PA, in anchor
//! order. An update evaluates every legacy path (line of sight, each single
//! bounce and the gated ordered double bounces), solves the data association,
//! then reweights the agent, updates every PSFV and the grid, turns the
//! unexplained measurements into new PSFVs and resamples.

mod birth;
mod evidence;
mod grid_update;
mod resample;

pub use birth::{is_fallback, propose_birth, BirthCandidate, BirthSpec};
pub use evidence::{
    evaluate_double_bounce, evaluate_los, evaluate_path, evaluate_single_bounce, DetectionTable,
    EvalContext, EvalTiming, GridView, PathEvidence,
};
pub use grid_update::{path_cell_log_ratios, CellScratch, HitMessage};
pub use resample::{effective_sample_size, normalize_log_weights, systematic_indices};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{solve_association, AssociationMarginals, AssociationProblem, BpOptions};
use crate::dynamics::{
    predict_agent, psfv_stream, transition_psfv_pa, transition_psfv_time, AgentParticles,
    AgentState, MotionNoise, PsfvBelief,
};
use crate::error::{Error, Result};
use crate::grid::{predict_grid, GridSpec, LogOddsAccumulator, OccupancyGrid};
use crate::math::{log_add, log_sum_exp, Vec2};
use crate::propagation::{solve_path_lines, Line, Measurement, PathKind, RadioConstants, Variances};
use crate::rng::{substream, tag};

/// Filter knobs. Missing fields take their defaults when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Detection threshold on the existence probability.
    pub p_de: f64,
    /// Pruning threshold on the existence probability.
    pub p_pr: f64,
    /// Double-bounce paths are formed only among PSFVs above this.
    pub p_gate: f64,
    pub mu_n: f64,
    pub mu_fa: f64,
    /// Initial existence probability of each line-of-sight path.
    pub los_existence: f64,
    pub hit_radius_cells: f64,
    pub endpoint_guard_cells: f64,
    pub occupancy_floor: Option<f64>,
    pub hit_message: HitMessage,
    /// Divide each path's validity messages by their particle average, so
    /// that unexplored cells shape the evidence without vetoing it.
    pub normalize_validity: bool,
    pub birth_uniform_fraction: f64,
    pub birth_rho: [f64; 2],
    /// Foot-point reference; the ROI centre when absent.
    pub reference: Option<Vec2>,
    /// Distance support of the false-alarm density; three ROI diagonals when
    /// absent.
    pub d_max: Option<f64>,
    /// Resample when the ESS drops below this fraction of the particle count.
    pub resample_threshold: f64,
    pub bp_max_iters: usize,
    pub bp_tol: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            n_particles: 2000,
            p_de: 0.5,
            p_pr: 0.1,
            p_gate: 0.2,
            mu_n: 0.05,
            mu_fa: 1.0,
            los_existence: 0.9,
            hit_radius_cells: 1.5,
            endpoint_guard_cells: 1.0,
            occupancy_floor: Some(0.15),
            hit_message: HitMessage::Exact,
            normalize_validity: true,
            birth_uniform_fraction: 0.1,
            birth_rho: [0.1, 0.9],
            reference: None,
            d_max: None,
            resample_threshold: 0.5,
            bp_max_iters: 200,
            bp_tol: 1e-6,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("p_de", self.p_de),
            ("p_pr", self.p_pr),
            ("p_gate", self.p_gate),
            ("los_existence", self.los_existence),
            ("birth_uniform_fraction", self.birth_uniform_fraction),
            ("resample_threshold", self.resample_threshold),
            ("birth_rho[0]", self.birth_rho[0]),
            ("birth_rho[1]", self.birth_rho[1]),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if let Some(f) = self.occupancy_floor {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("occupancy_floor = {f} outside [0, 1)")));
            }
        }
        if self.n_particles == 0 {
            return Err(Error::Config("n_particles must be positive".into()));
        }
        if self.birth_rho[0] > self.birth_rho[1] {
            return Err(Error::Config("birth_rho must be an increasing range".into()));
        }
        if !(self.mu_fa > 0.0 && self.mu_fa.is_finite()) {
            return Err(Error::Config("mu_fa must be positive".into()));
        }
        if !(self.mu_n >= 0.0 && self.mu_n.is_finite()) {
            return Err(Error::Config("mu_n must be nonnegative".into()));
        }
        if !(self.hit_radius_cells > 0.0 && self.endpoint_guard_cells >= 0.0) {
            return Err(Error::Config("hit radius must be positive".into()));
        }
        if let Some(d) = self.d_max {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config("d_max must be positive".into()));
            }
        }
        if self.bp_max_iters == 0 || !(self.bp_tol > 0.0) {
            return Err(Error::Config("association iterations and tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Everything that changes during a run; serializable as a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub agent: AgentParticles,
    /// Legacy PSFVs in increasing id order.
    pub psfvs: Vec<PsfvBelief>,
    /// Line-of-sight existence probability per PA.
    pub los_existence: Vec<f64>,
    pub grid_spec: GridSpec,
    pub grid: OccupancyGrid,
    /// Time index of the last prediction; 0 before the first.
    pub n: u64,
    /// Number of PAs processed at time `n`.
    pub j: usize,
    pub next_id: u64,
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    state: FilterState,
}

impl FilterState {
    pub fn save(&self, path: &Path) -> Result<()> {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            state: self.clone(),
        };
        let s = serde_json::to_string(&ck).map_err(|e| Error::format(path, e.to_string()))?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint =
            serde_json::from_str(&s).map_err(|e| Error::format(path, e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                path,
                format!("checkpoint version {} not supported", ck.version),
            ));
        }
        ck.state.grid.validate(&ck.state.grid_spec)?;
        Ok(ck.state)
    }
}

/// Wall-clock seconds per phase, summed over the run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub prediction: f64,
    pub ray_casting: f64,
    pub evidence: f64,
    pub birth: f64,
    pub association: f64,
    pub fusion: f64,
    pub resampling: f64,
}

/// Bookkeeping of one PA update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaReport {
    pub n: u64,
    pub j: usize,
    pub num_measurements: usize,
    pub num_paths: usize,
    pub legacy_before: usize,
    pub births: usize,
    pub pruned: usize,
    pub bp_iterations: usize,
    pub bp_converged: bool,
    /// Most probable association per path, `0` for missed.
    pub assignments: Vec<(PathKind, usize)>,
}

/// MMSE estimate of one detected PSFV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfvEstimate {
    pub id: u64,
    pub p: Vec2,
    pub rho: f64,
    pub r_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub n: u64,
    pub agent: AgentState,
    pub psfvs: Vec<PsfvEstimate>,
}

/// An estimated specular path with its amplitude and measurement variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub pa: usize,
    /// PSFV ids in bounce order.
    pub features: Vec<u64>,
    pub vertices: Vec<Vec2>,
    pub length: f64,
    pub aod: f64,
    pub aoa: f64,
    pub u: f64,
    pub variances: Variances,
}

/// Detection, pruning and MMSE extraction. Returns the estimates and the
/// state without the PSFVs below `p_pr`.
pub fn detect_prune_extract(state: &FilterState, p_de: f64, p_pr: f64) -> (Estimates, FilterState) {
    let psfvs = state
        .psfvs
        .iter()
        .filter(|y| y.r_prob > p_de)
        .map(|y| {
            let m = y.mean();
            PsfvEstimate {
                id: y.id,
                p: m.p,
                rho: m.rho,
                r_prob: y.r_prob,
            }
        })
        .collect();
    let mut pruned = state.clone();
    pruned.psfvs.retain(|y| y.r_prob >= p_pr);
    (
        Estimates {
            n: state.n,
            agent: state.agent.mean(),
            psfvs,
        },
        pruned,
    )
}

/// The filter: fixed model parameters plus the evolving [`FilterState`].
#[derive(Debug, Clone)]
pub struct Filter {
    pub config: FilterConfig,
    pub radio: RadioConstants,
    pub noise: MotionNoise,
    pub pas: Vec<Vec2>,
    pub roi: [Vec2; 2],
    pub seed: u64,
    pub state: FilterState,
    pub timings: PhaseTimings,
    reference: Vec2,
    d_max: f64,
    detection: DetectionTable,
}

impl Filter {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: FilterConfig,
        radio: RadioConstants,
        noise: MotionNoise,
        pas: Vec<Vec2>,
        roi: [Vec2; 2],
        grid_spec: GridSpec,
        prior: OccupancyGrid,
        agent: AgentParticles,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        radio.validate()?;
        noise.validate()?;
        grid_spec.validate()?;
        prior.validate(&grid_spec)?;
        if pas.is_empty() {
            return Err(Error::Config("at least one PA is required".into()));
        }
        if agent.len() != config.n_particles || agent.weights.len() != agent.len() {
            return Err(Error::Config(format!(
                "agent particle set has {} particles, expected {}",
                agent.len(),
                config.n_particles
            )));
        }
        let reference = config
            .reference
            .unwrap_or_else(|| (roi[0] + roi[1]) * 0.5);
        let d_max = config.d_max.unwrap_or_else(|| 3.0 * (roi[1] - roi[0]).norm());
        let state = FilterState {
            agent,
            psfvs: Vec::new(),
            los_existence: vec![config.los_existence; pas.len()],
            grid_spec,
            grid: prior,
            n: 0,
            j: pas.len(),
            next_id: 0,
        };
        Ok(Filter {
            detection: DetectionTable::new(&radio),
            config,
            radio,
            noise,
            pas,
            roi,
            seed,
            state,
            timings: PhaseTimings::default(),
            reference,
            d_max,
        })
    }

    /// Replaces the state, e.g. from a checkpoint.
    pub fn with_state(mut self, state: FilterState) -> Result<Self> {
        if state.los_existence.len() != self.pas.len() {
            return Err(Error::Config("checkpoint PA count does not match".into()));
        }
        state.grid.validate(&state.grid_spec)?;
        self.state = state;
        Ok(self)
    }

    pub fn reference(&self) -> Vec2 {
        self.reference
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Time prediction of the agent, every PSFV, the LOS existences and the
    /// grid.
    pub fn predict(&mut self) {
        let t = Instant::now();
        let st = &mut self.state;
        st.n += 1;
        st.j = 0;
        predict_agent(&mut st.agent, &self.noise, self.seed, st.n);
        let (seed, n, noise) = (self.seed, st.n, self.noise);
        st.psfvs = st
            .psfvs
            .par_iter()
            .map(|y| transition_psfv_time(y, &noise, &mut psfv_stream(seed, n, y.id)))
            .collect();
        for r in &mut st.los_existence {
            *r *= noise.p_s;
        }
        st.grid = predict_grid(&st.grid);
        self.timings.prediction += t.elapsed().as_secs_f64();
    }

    /// Legacy paths for the current PSFV list: LOS, every single bounce and
    /// the ordered double bounces among PSFVs above the gate.
    pub fn enumerate_paths(&self) -> Vec<PathKind> {
        let ys = &self.state.psfvs;
        let mut out = vec![PathKind::Los];
        out.extend((0..ys.len()).map(PathKind::Single));
        let gated: Vec<usize> = (0..ys.len())
            .filter(|&s| ys[s].r_prob > self.config.p_gate)
            .collect();
        for &s in &gated {
            for &t in &gated {
                if s != t {
                    out.push(PathKind::Double(s, t));
                }
            }
        }
        out
    }

    fn log_fa(&self, z: &Measurement) -> f64 {
        let u_de = self.radio.u_de;
        self.config.mu_fa.ln() - self.d_max.ln() - 2.0 * (2.0 * std::f64::consts::PI).ln()
            + (2.0 * z.z_u).ln()
            - (z.z_u * z.z_u - u_de * u_de)
    }

    /// Evidence of every legacy path at PA `j` for `measurements`.
    pub fn evaluate_paths(
        &mut self,
        j: usize,
        measurements: &[Measurement],
    ) -> Result<(GridView, Vec<PathEvidence>)> {
        let view = GridView::new(self.state.grid_spec, &self.state.grid);
        let log_fa: Vec<f64> = measurements.iter().map(|z| self.log_fa(z)).collect();
        let cs = self.state.grid_spec.cell_size;
        let ctx = EvalContext {
            view: &view,
            rc: &self.radio,
            pd: &self.detection,
            reference: self.reference,
            pa: self.pas[j],
            measurements,
            log_fa: &log_fa,
            hit_radius: self.config.hit_radius_cells * cs,
            endpoint_guard: self.config.endpoint_guard_cells * cs,
            normalize_validity: self.config.normalize_validity,
        };
        let st = &self.state;
        let mut timing = EvalTiming::default();
        let mut out = Vec::new();
        for kind in self.enumerate_paths() {
            let ev = match kind {
                PathKind::Los => evaluate_los(&ctx, &st.agent, st.los_existence[j], &mut timing)?,
                PathKind::Single(s) => {
                    evaluate_single_bounce(&ctx, &st.agent, &st.psfvs, s, &mut timing)?
                }
                PathKind::Double(s, t) => {
                    evaluate_double_bounce(&ctx, &st.agent, &st.psfvs, s, t, &mut timing)?
                }
            };
            out.push(ev);
        }
        self.timings.ray_casting += timing.ray_casting;
        self.timings.evidence += timing.evidence;
        Ok((view, out))
    }

    fn birth_spec(&self) -> BirthSpec {
        BirthSpec {
            reference: self.reference,
            roi: self.roi,
            d_max: self.d_max,
            rho_range: self.config.birth_rho,
            uniform_fraction: self.config.birth_uniform_fraction,
            mu_n: self.config.mu_n,
            mu_fa: self.config.mu_fa,
        }
    }

    /// Measurement update with the measurements of PA `j`.
    pub fn update_pa(&mut self, j: usize, measurements: &[Measurement]) -> Result<PaReport> {
        if j >= self.pas.len() {
            return Err(Error::InvalidArgument(format!("PA index {j} out of range")));
        }
        for z in measurements {
            z.validate(self.radio.u_de)?;
        }
        if j > 0 {
            self.state.psfvs = self.state.psfvs.iter().map(transition_psfv_pa).collect();
        }
        let n_part = self.state.agent.len();
        let legacy_before = self.state.psfvs.len();

        let (view, paths) = self.evaluate_paths(j, measurements)?;

        let t = Instant::now();
        let spec = self.birth_spec();
        let births: Vec<BirthCandidate> = measurements
            .iter()
            .enumerate()
            .map(|(m, z)| {
                propose_birth(
                    &self.state.agent,
                    self.pas[j],
                    z,
                    &self.radio,
                    &spec,
                    self.seed,
                    [self.state.n, j as u64],
                    m,
                )
            })
            .collect();
        self.timings.birth += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let problem = AssociationProblem {
            log_omega: paths
                .iter()
                .map(|p| std::iter::once(p.log_r_bar).chain(p.log_r.iter().copied()).collect())
                .collect(),
            log_xi: births.iter().map(|b| log_add(0.0, b.log_evidence)).collect(),
        };
        let marg = solve_association(
            &problem,
            &BpOptions {
                max_iters: self.config.bp_max_iters,
                tol: self.config.bp_tol,
            },
        )?;
        self.timings.association += t.elapsed().as_secs_f64();

        let t = Instant::now();
        self.apply_messages(j, &paths, &marg, &view);
        self.timings.fusion += t.elapsed().as_secs_f64();

        let mut born = 0;
        for (m, b) in births.into_iter().enumerate() {
            let new_given_free = logistic(b.log_evidence);
            let r = marg.eta_meas[m] * new_given_free;
            let id = self.state.next_id;
            self.state.next_id += 1;
            self.state.psfvs.push(PsfvBelief {
                id,
                particles: b.particles,
                weights: b.weights,
                r_prob: r,
            });
            born += 1;
        }

        let t = Instant::now();
        self.resample_all(j);
        self.timings.resampling += t.elapsed().as_secs_f64();

        let before = self.state.psfvs.len();
        let p_pr = self.config.p_pr;
        self.state.psfvs.retain(|y| y.r_prob >= p_pr);
        let pruned = before - self.state.psfvs.len();
        self.state.j = j + 1;
        self.check_finite()?;
        debug_assert_eq!(self.state.agent.len(), n_part);

        let assignments = paths
            .iter()
            .map(|p| p.kind)
            .zip(marg.argmax())
            .collect();
        Ok(PaReport {
            n: self.state.n,
            j,
            num_measurements: measurements.len(),
            num_paths: paths.len(),
            legacy_before,
            births: born,
            pruned,
            bp_iterations: marg.iterations,
            bp_converged: marg.converged,
            assignments,
        })
    }

    /// Agent reweighting, PSFV and LOS existence updates and grid fusion from
    /// the extrinsic association messages.
    fn apply_messages(
        &mut self,
        j: usize,
        paths: &[PathEvidence],
        marg: &AssociationMarginals,
        view: &GridView,
    ) {
        let st = &mut self.state;
        let n = st.agent.len();
        let nf = n as f64;

        // ln E_k per path and tuple.
        let log_e: Vec<Vec<f64>> = paths
            .par_iter()
            .zip(&marg.log_nu)
            .map(|(p, nu)| (0..n).map(|k| p.cache.log_exist_message(k, nu)).collect())
            .collect();

        let log_agent_ratio: Vec<f64> = st.agent.weights.iter().map(|w| (nf * w).ln()).collect();

        // Agent.
        let mut log_w: Vec<f64> = st.agent.weights.iter().map(|w| w.ln()).collect();
        for (p, le) in paths.iter().zip(&log_e) {
            let ln_e = p.existence.ln();
            let ln_ne = (1.0 - p.existence).ln();
            for k in 0..n {
                log_w[k] += log_add(ln_e + p.cache.log_feature_ratio[k] + le[k], ln_ne);
            }
        }

        // PSFVs. Each feature collects the factors of every path it is on.
        let s_count = st.psfvs.len();
        let mut acc: Vec<Vec<f64>> = st
            .psfvs
            .iter()
            .map(|y| {
                y.weights
                    .iter()
                    .zip(&log_agent_ratio)
                    .map(|(w, a)| w.ln() + a)
                    .collect()
            })
            .collect();
        for (p, le) in paths.iter().zip(&log_e) {
            match p.kind {
                PathKind::Los => {}
                PathKind::Single(s) => {
                    for k in 0..n {
                        acc[s][k] += le[k];
                    }
                }
                PathKind::Double(s, t) => {
                    for (me, other) in [(s, t), (t, s)] {
                        let y = &st.psfvs[other];
                        let ln_r = y.r_prob.ln();
                        let ln_nr = (1.0 - y.r_prob).ln();
                        for k in 0..n {
                            let g = log_add(ln_r + (nf * y.weights[k]).ln() + le[k], ln_nr);
                            acc[me][k] += g;
                        }
                    }
                }
            }
        }
        let mut buf = Vec::new();
        for (s, a) in acc.iter().enumerate().take(s_count) {
            let log_a = normalize_log_weights(a, &mut buf);
            let y = &mut st.psfvs[s];
            y.r_prob = posterior_existence(y.r_prob, log_a);
            if log_a.is_finite() {
                y.weights.clone_from(&buf);
            }
        }

        // Line of sight.
        if let Some(i) = paths.iter().position(|p| p.kind == PathKind::Los) {
            let a = log_sum_exp((0..n).map(|k| st.agent.weights[k].ln() + log_e[i][k]));
            st.los_existence[j] = posterior_existence(st.los_existence[j], a);
        }

        let log_z = normalize_log_weights(&log_w, &mut buf);
        if log_z.is_finite() {
            st.agent.weights.clone_from(&buf);
        }

        // Grid.
        let form = self.config.hit_message;
        let q = st.grid_spec.num_cells();
        let ratios: Vec<Vec<(u32, f64)>> = paths
            .par_iter()
            .zip(&marg.log_nu)
            .map_init(
                || CellScratch::new(q),
                |scratch, (p, nu)| {
                    let mut out = Vec::new();
                    path_cell_log_ratios(view, p, nu, form, scratch, &mut out);
                    out
                },
            )
            .collect();
        let mut lo = LogOddsAccumulator::new(q);
        for r in &ratios {
            for &(i, x) in r {
                lo.add_log_ratio(i as usize, x);
            }
        }
        st.grid = lo.fuse(&st.grid, self.config.occupancy_floor);
    }

    fn resample_all(&mut self, j: usize) {
        let st = &mut self.state;
        let n = st.agent.len();
        let thr = self.config.resample_threshold * n as f64;
        let labels = [tag::RESAMPLE, st.n, j as u64];
        if effective_sample_size(&st.agent.weights) < thr {
            let mut rng = substream(self.seed, &labels, u64::MAX);
            let idx = systematic_indices(&st.agent.weights, n, &mut rng);
            st.agent.states = idx.iter().map(|&i| st.agent.states[i]).collect();
            st.agent.weights = vec![1.0 / n as f64; n];
        }
        let seed = self.seed;
        st.psfvs.par_iter_mut().for_each(|y| {
            let m = y.particles.len();
            if effective_sample_size(&y.weights) < self.config.resample_threshold * m as f64 {
                let mut rng = substream(seed, &labels, y.id);
                let idx = systematic_indices(&y.weights, m, &mut rng);
                y.particles = idx.iter().map(|&i| y.particles[i]).collect();
                y.weights = vec![1.0 / m as f64; m];
            }
        });
    }

    fn check_finite(&self) -> Result<()> {
        let st = &self.state;
        let agent_ok = st.agent.weights.iter().all(|w| w.is_finite())
            && st.agent.states.iter().all(|x| x.p.is_finite() && x.v.is_finite() && x.dphi.is_finite());
        if !agent_ok {
            return Err(Error::Numerical(format!("agent belief not finite at n = {}", st.n)));
        }
        for y in &st.psfvs {
            if !y.r_prob.is_finite() || y.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Numerical(format!("PSFV {} not finite at n = {}", y.id, st.n)));
            }
        }
        if st.grid.p_occ.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical(format!("grid not finite at n = {}", st.n)));
        }
        Ok(())
    }

    /// Prediction followed by one update per PA. `measurements[j]` belongs to
    /// PA `j`.
    pub fn step(&mut self, measurements: &[Vec<Measurement>]) -> Result<Vec<PaReport>> {
        if measurements.len() != self.pas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} measurement lists for {} PAs",
                measurements.len(),
                self.pas.len()
            )));
        }
        self.predict();
        (0..self.pas.len())
            .map(|j| self.update_pa(j, &measurements[j]))
            .collect()
    }

    pub fn estimates(&self) -> Estimates {
        detect_prune_extract(&self.state, self.config.p_de, self.config.p_pr).0
    }

    /// Paths implied by the MMSE estimates at PA `j`: LOS, single bounces off
    /// detected PSFVs and double bounces among them.
    pub fn path_estimates(&self, j: usize) -> Vec<PathEstimate> {
        let est = self.estimates();
        let agent = est.agent;
        let mut out = Vec::new();
        let mut push = |feats: &[&PsfvEstimate]| {
            let mut lines = Vec::with_capacity(feats.len());
            let mut beta = 1.0;
            for f in feats {
                match Line::from_foot(f.p, self.reference) {
                    Some(l) => lines.push(l),
                    None => return,
                }
                beta *= f.rho;
            }
            if let Some(g) = solve_path_lines(agent.p, agent.dphi, self.pas[j], &lines) {
                let u = self.radio.amplitude(beta, g.length);
                out.push(PathEstimate {
                    pa: j,
                    features: feats.iter().map(|f| f.id).collect(),
                    vertices: g.vertices().to_vec(),
                    length: g.length,
                    aod: g.aod,
                    aoa: g.aoa,
                    u,
                    variances: self.radio.variances(u),
                });
            }
        };
        push(&[]);
        for a in &est.psfvs {
            push(&[a]);
        }
        for a in &est.psfvs {
            for b in &est.psfvs {
                if a.id != b.id {
                    push(&[a, b]);
                }
            }
        }
        out
    }
}

/// `r A / (r A + 1 - r)` with `A` given as a log.
fn posterior_existence(r: f64, log_a: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    if log_a.is_nan() {
        return r;
    }
    let x = r.ln() + log_a;
    let post = (x - log_add(x, (1.0 - r).ln())).exp();
    post.clamp(0.0, 1.0)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
