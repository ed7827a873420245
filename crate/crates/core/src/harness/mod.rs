//! Configuration, scenario runner, metrics and artifact files.
//!
//! A run loads an environment, synthesizes (or reads) measurements, filters
//! them and scores the result against the ground truth. All artifacts are
//! written after the filter finishes, so a failed run leaves no partial
//! output behind.

mod artifacts;
mod config;
mod metrics;

pub use artifacts::{
    read_sfvs_csv, read_trajectory_csv, write_paths_csv, write_sfvs_csv, write_trajectory_csv,
    TrajectoryRow,
};
pub use config::{RunConfig, ScenarioConfig, DEFAULT_CELL, GRID_MARGIN};
pub use metrics::{
    hungarian, mean, median, occupancy_stats, ospa, touch_counts, trajectory_errors, true_sfvs,
    wall_cells, OccupancyStats, TouchCounts, TrajectoryErrors,
};

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{init_agent_particles, AgentState};
use crate::error::{Error, Result};
use crate::grid::{read_occupancy_csv, write_occupancy_csv, write_occupancy_pgm, GridSpec, OccupancyGrid};
use crate::inference::{Filter, PathEstimate, PhaseTimings, PsfvEstimate};
use crate::propagation::Environment;
use crate::synthesis::{
    generate_trajectory, synthesize_log, write_measurements_csv, write_truth_csv, MeasurementLog,
    SynthOptions,
};

/// OSPA cutoff (m) and order used for the SFV set error.
pub const OSPA_CUTOFF: f64 = 1.0;
pub const OSPA_ORDER: f64 = 1.0;
/// Cells count for the map criteria once this many true paths touched them.
pub const MIN_TOUCHES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTimings {
    pub synthesis: f64,
    pub filter: PhaseTimings,
    pub metrics: f64,
    pub total: f64,
}

/// Scores against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub position_error: Vec<f64>,
    pub orientation_error_deg: Vec<f64>,
    pub mean_position_error: f64,
    pub median_position_error: f64,
    pub mean_orientation_error_deg: f64,
    pub median_orientation_error_deg: f64,
    /// OSPA between the final detected SFVs and the true ones.
    pub ospa: f64,
    pub true_sfvs: usize,
    pub detected_sfvs: usize,
    pub occupancy: OccupancyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub steps: usize,
    pub seed: u64,
    pub metrics: Option<Metrics>,
    pub timings: RunTimings,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub estimates: Vec<AgentState>,
    pub truth: Option<Vec<AgentState>>,
    pub sfvs: Vec<PsfvEstimate>,
    /// `(n, path)` for every step and PA.
    pub paths: Vec<(u64, PathEstimate)>,
    pub filter: Filter,
    pub log: MeasurementLog,
    pub report: RunReport,
}

/// Synthetic ground truth and measurements of a scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub environment: Environment,
    pub truth: Vec<AgentState>,
    pub log: MeasurementLog,
    pub seconds: f64,
}

pub fn simulate(cfg: &RunConfig, env: &Environment) -> Result<Simulation> {
    let t = Instant::now();
    let truth = generate_trajectory(&cfg.scenario.trajectory, env.roi())?;
    let rc = cfg.scenario.radio();
    let roi = env.roi();
    let opts = SynthOptions {
        mu_fa: cfg.scenario.mu_fa,
        d_max: cfg.filter.d_max.unwrap_or_else(|| 3.0 * (roi[1] - roi[0]).norm()),
        noiseless: cfg.scenario.noiseless,
    };
    let log = with_pool(cfg, || synthesize_log(env, &truth, &rc, &opts, cfg.seed))?;
    Ok(Simulation {
        environment: env.clone(),
        truth,
        log,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn with_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match cfg.thread_count() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// The map prior: the configured CSV or a flat 0.5.
pub fn prior_map(cfg: &RunConfig, spec: &GridSpec) -> Result<OccupancyGrid> {
    match &cfg.prior_map {
        Some(p) => read_occupancy_csv(spec, p),
        None => Ok(OccupancyGrid::uniform(spec, 0.5)),
    }
}

/// A filter ready for step 1. The prior is centred on `initial_state`, or
/// one step before `first_truth`.
pub fn build_filter(
    cfg: &RunConfig,
    env: &Environment,
    first_truth: Option<&AgentState>,
) -> Result<Filter> {
    let spec = cfg.grid_spec(env)?;
    let centre = match (cfg.initial_state, first_truth) {
        (Some(x), _) => x,
        (None, Some(t)) => AgentState {
            p: t.p - t.v * cfg.motion.dt,
            ..*t
        },
        (None, None) => {
            return Err(Error::Config(
                "initial_state is required without ground truth".into(),
            ))
        }
    };
    let n = cfg.filter.n_particles;
    let agent = init_agent_particles(&centre, &cfg.agent_prior, n, cfg.seed);
    Filter::new(
        cfg.filter.clone(),
        cfg.scenario.radio(),
        cfg.motion,
        env.pas.iter().map(|a| a.pos).collect(),
        env.roi(),
        spec,
        prior_map(cfg, &spec)?,
        agent,
        cfg.seed,
    )
}

/// Filters `log` and, with ground truth, scores the result.
pub fn run_filter(
    cfg: &RunConfig,
    env: &Environment,
    log: MeasurementLog,
    truth: Option<Vec<AgentState>>,
) -> Result<RunOutput> {
    if let Some(t) = &truth {
        if t.len() != log.num_steps() {
            return Err(Error::InvalidArgument(format!(
                "{} true states for {} measurement steps",
                t.len(),
                log.num_steps()
            )));
        }
    }
    if log.steps.iter().any(|s| s.len() != env.pas.len()) {
        return Err(Error::InvalidArgument(
            "measurement log PA count differs from the environment".into(),
        ));
    }
    let mut filter = build_filter(cfg, env, truth.as_ref().and_then(|t| t.first()))?;
    let (estimates, paths) = with_pool(cfg, || -> Result<_> {
        let mut estimates = Vec::with_capacity(log.num_steps());
        let mut paths = Vec::new();
        for step in &log.steps {
            filter.step(step)?;
            estimates.push(filter.estimates().agent);
            let n = filter.state.n;
            for j in 0..env.pas.len() {
                paths.extend(filter.path_estimates(j).into_iter().map(|p| (n, p)));
            }
        }
        Ok((estimates, paths))
    })??;
    let sfvs = filter.estimates().psfvs;
    let t = Instant::now();
    let metrics = match &truth {
        Some(t) => Some(compute_metrics(cfg, env, &filter, &estimates, t, &sfvs)?),
        None => None,
    };
    let report = RunReport {
        steps: estimates.len(),
        seed: cfg.seed,
        metrics,
        timings: RunTimings {
            filter: filter.timings,
            metrics: t.elapsed().as_secs_f64(),
            ..Default::default()
        },
    };
    Ok(RunOutput {
        estimates,
        truth,
        sfvs,
        paths,
        filter,
        log,
        report,
    })
}

/// Scores estimates against the ground truth.
pub fn compute_metrics(
    cfg: &RunConfig,
    env: &Environment,
    filter: &Filter,
    estimates: &[AgentState],
    truth: &[AgentState],
    sfvs: &[PsfvEstimate],
) -> Result<Metrics> {
    score(
        env,
        &filter.state.grid_spec,
        &filter.state.grid,
        filter.reference(),
        cfg.filter.hit_radius_cells,
        cfg.filter.endpoint_guard_cells,
        estimates,
        truth,
        sfvs,
    )
}

/// [`compute_metrics`] from raw artifacts.
#[allow(clippy::too_many_arguments)]
pub fn score(
    env: &Environment,
    spec: &GridSpec,
    grid: &OccupancyGrid,
    reference: crate::math::Vec2,
    hit_radius_cells: f64,
    endpoint_guard_cells: f64,
    estimates: &[AgentState],
    truth: &[AgentState],
    sfvs: &[PsfvEstimate],
) -> Result<Metrics> {
    grid.validate(spec)?;
    let err = trajectory_errors(estimates, truth)?;
    let true_pts = true_sfvs(env, truth, reference);
    let est_pts: Vec<_> = sfvs.iter().map(|s| s.p).collect();
    let wall = wall_cells(env, spec);
    let touches = touch_counts(
        env,
        truth,
        spec,
        hit_radius_cells * spec.cell_size,
        endpoint_guard_cells * spec.cell_size,
    );
    Ok(Metrics {
        mean_position_error: mean(&err.position),
        median_position_error: median(&err.position),
        mean_orientation_error_deg: mean(&err.orientation),
        median_orientation_error_deg: median(&err.orientation),
        position_error: err.position,
        orientation_error_deg: err.orientation,
        ospa: ospa(&est_pts, &true_pts, OSPA_CUTOFF, OSPA_ORDER),
        true_sfvs: true_pts.len(),
        detected_sfvs: est_pts.len(),
        occupancy: occupancy_stats(grid, &wall, &touches, MIN_TOUCHES),
    })
}

/// Synthesizes, filters, scores and writes every artifact to
/// `cfg.output_dir`.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutput> {
    let t = Instant::now();
    cfg.validate()?;
    let env = Environment::load(&cfg.environment)?;
    let sim = simulate(cfg, &env)?;
    let mut out = run_filter(cfg, &env, sim.log, Some(sim.truth))?;
    out.report.timings.synthesis = sim.seconds;
    out.report.timings.total = t.elapsed().as_secs_f64();
    write_artifacts(&cfg.output_dir, &out)?;
    Ok(out)
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const TRAJECTORY: &str = "trajectory.csv";
    pub const TRUTH: &str = "truth.csv";
    pub const MEASUREMENTS: &str = "measurements.csv";
    pub const MAP_CSV: &str = "occupancy.csv";
    pub const MAP_PGM: &str = "occupancy.pgm";
    pub const SFVS: &str = "sfvs.csv";
    pub const PATHS: &str = "paths.csv";
    pub const CHECKPOINT: &str = "checkpoint.json";
    pub const REPORT: &str = "report.json";
}

pub fn write_artifacts(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let st = &out.filter.state;
    write_trajectory_csv(&out.estimates, out.truth.as_deref(), &dir.join(files::TRAJECTORY))?;
    if let Some(t) = &out.truth {
        write_truth_csv(t, &dir.join(files::TRUTH))?;
    }
    write_measurements_csv(&out.log, &dir.join(files::MEASUREMENTS))?;
    write_occupancy_csv(&st.grid_spec, &st.grid, &dir.join(files::MAP_CSV))?;
    write_occupancy_pgm(&st.grid_spec, &st.grid, &dir.join(files::MAP_PGM))?;
    write_sfvs_csv(&out.sfvs, &dir.join(files::SFVS))?;
    write_paths_csv(&out.paths, &dir.join(files::PATHS))?;
    st.save(&dir.join(files::CHECKPOINT))?;
    write_report(&out.report, &dir.join(files::REPORT))
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
