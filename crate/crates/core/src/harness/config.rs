use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentPrior, AgentState, MotionNoise};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::inference::FilterConfig;
use crate::math::Vec2;
use crate::propagation::{Environment, RadioConstants};
use crate::synthesis::TrajectoryConfig;

/// Radio link and measurement synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub snr_1m_db: f64,
    pub u_de_db: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Mean false-alarm count used by the generator.
    pub mu_fa: f64,
    /// Exact path parameters, every path detected, no false alarms.
    pub noiseless: bool,
    pub trajectory: TrajectoryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            snr_1m_db: 30.0,
            u_de_db: 6.0,
            carrier_hz: 6e9,
            bandwidth_hz: 1e9,
            mu_fa: 1.0,
            noiseless: false,
            trajectory: TrajectoryConfig {
                waypoints: vec![Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0)],
                step_size: 0.05,
                dt: 1.0,
                orientation_drift: 0.0,
                orientation_offset: 0.0,
                max_states: Some(80),
            },
        }
    }
}

impl ScenarioConfig {
    pub fn radio(&self) -> RadioConstants {
        RadioConstants::calibrated(self.snr_1m_db, self.u_de_db, self.carrier_hz, self.bandwidth_hz)
    }
}

/// One run: where the world comes from, how to simulate it and how to
/// filter it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Environment JSON; relative paths resolve against the config file.
    pub environment: PathBuf,
    pub scenario: ScenarioConfig,
    pub motion: MotionNoise,
    pub filter: FilterConfig,
    pub agent_prior: AgentPrior,
    /// Centre of the agent prior; one step before the first true state
    /// when absent.
    pub initial_state: Option<AgentState>,
    /// Covers the ROI with a margin of 0.32 m and 6 cm cells when absent.
    pub grid: Option<GridSpec>,
    /// Occupancy CSV used as the map prior instead of a flat 0.5.
    pub prior_map: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; `MPSLAM_THREADS` or all cores when absent.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            environment: PathBuf::from("environment.json"),
            scenario: ScenarioConfig::default(),
            motion: MotionNoise {
                sigma_nu: 0.02,
                ..MotionNoise::default()
            },
            filter: FilterConfig::default(),
            agent_prior: AgentPrior::default(),
            initial_state: None,
            grid: None,
            prior_map: None,
            output_dir: PathBuf::from("out"),
            seed: 1,
            threads: None,
        }
    }
}

pub const GRID_MARGIN: f64 = 0.32;
pub const DEFAULT_CELL: f64 = 0.06;

impl RunConfig {
    /// Reads a JSON config and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.environment = base.join(&cfg.environment);
        cfg.output_dir = base.join(&cfg.output_dir);
        if let Some(p) = &cfg.prior_map {
            cfg.prior_map = Some(base.join(p));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.motion.validate()?;
        self.scenario.radio().validate()?;
        if !(self.scenario.mu_fa >= 0.0 && self.scenario.mu_fa.is_finite()) {
            return Err(Error::Config("scenario.mu_fa must be nonnegative".into()));
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn grid_spec(&self, env: &Environment) -> Result<GridSpec> {
        if let Some(g) = self.grid {
            return Ok(g);
        }
        let [lo, hi] = env.roi();
        let m = Vec2::new(GRID_MARGIN, GRID_MARGIN);
        GridSpec::covering(lo - m, hi + m, DEFAULT_CELL)
    }

    /// Worker count from the config, then `MPSLAM_THREADS`.
    pub fn thread_count(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var("MPSLAM_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
                .filter(|&n| n > 0)
        })
    }
}
