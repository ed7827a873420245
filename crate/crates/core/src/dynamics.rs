//! Agent and PSFV state containers, their transition kernels and priors.
//!
//! Nonexistence is carried only by `1 - r_prob`; the dummy density that would
//! complete the Bernoulli statistics is never materialized.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{wrap_angle, Vec2};
use crate::rng::{substream, tag};

/// Particles per RNG stream in parallel transitions.
pub const CHUNK: usize = 256;

/// Agent position, velocity and array orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub p: Vec2,
    pub v: Vec2,
    pub dphi: f64,
}

/// One PSFV hypothesis: the foot point of the reflecting line seen from the
/// reference point, and the reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfvParticle {
    pub p: Vec2,
    pub rho: f64,
}

/// Particle belief of one potential surface-feature vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfvBelief {
    pub id: u64,
    pub particles: Vec<PsfvParticle>,
    pub weights: Vec<f64>,
    pub r_prob: f64,
}

impl PsfvBelief {
    pub fn mean(&self) -> PsfvParticle {
        let mut p = Vec2::ZERO;
        let mut rho = 0.0;
        for (x, &w) in self.particles.iter().zip(&self.weights) {
            p += x.p * w;
            rho += x.rho * w;
        }
        PsfvParticle { p, rho }
    }
}

/// Weighted agent particle set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParticles {
    pub states: Vec<AgentState>,
    pub weights: Vec<f64>,
}

impl AgentParticles {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Weighted mean; the orientation is a circular mean.
    pub fn mean(&self) -> AgentState {
        let mut p = Vec2::ZERO;
        let mut v = Vec2::ZERO;
        let mut c = Vec2::ZERO;
        for (x, &w) in self.states.iter().zip(&self.weights) {
            p += x.p * w;
            v += x.v * w;
            c += Vec2::from_angle(x.dphi) * w;
        }
        AgentState {
            p,
            v,
            dphi: c.angle(),
        }
    }
}

/// Process noise and survival parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionNoise {
    pub sigma_nu: f64,
    pub sigma_phi: f64,
    pub sigma_p: f64,
    pub sigma_rho: f64,
    pub p_s: f64,
    pub dt: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        MotionNoise {
            sigma_nu: 9e-4,
            sigma_phi: 2f64.to_radians(),
            sigma_p: 0.01,
            sigma_rho: 0.01,
            p_s: 0.99,
            dt: 1.0,
        }
    }
}

impl MotionNoise {
    pub fn validate(&self) -> Result<()> {
        let stds = [
            self.sigma_nu,
            self.sigma_phi,
            self.sigma_p,
            self.sigma_rho,
        ];
        if stds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("noise levels must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(Error::Config(format!("p_s = {} outside [0,1]", self.p_s)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Near-constant-velocity step with a random-walk orientation.
pub fn sample_agent_transition<R: Rng + ?Sized>(
    x: &AgentState,
    noise: &MotionNoise,
    rng: &mut R,
) -> AgentState {
    let dt = noise.dt;
    let nu = Vec2::new(normal(rng), normal(rng)) * noise.sigma_nu;
    let eps = normal(rng) * noise.sigma_phi;
    AgentState {
        p: x.p + x.v * dt + nu * (0.5 * dt * dt),
        v: x.v + nu * dt,
        dphi: wrap_angle(x.dphi + eps),
    }
}

/// Propagates every agent particle over one time step. Each chunk of
/// [`CHUNK`] particles draws from its own stream, so the result does not
/// depend on the thread count.
pub fn predict_agent(particles: &mut AgentParticles, noise: &MotionNoise, seed: u64, step: u64) {
    particles
        .states
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = substream(seed, &[tag::AGENT_MOTION, step], c as u64);
            for x in chunk {
                *x = sample_agent_transition(x, noise, &mut rng);
            }
        });
}

/// Time transition of a PSFV: survival thinning plus position and
/// reflection-coefficient jitter.
pub fn transition_psfv_time<R: Rng + ?Sized>(
    y: &PsfvBelief,
    noise: &MotionNoise,
    rng: &mut R,
) -> PsfvBelief {
    let mut out = y.clone();
    out.r_prob = noise.p_s * y.r_prob;
    if noise.sigma_p > 0.0 || noise.sigma_rho > 0.0 {
        for x in &mut out.particles {
            x.p += Vec2::new(normal(rng), normal(rng)) * noise.sigma_p;
            x.rho = (x.rho + normal(rng) * noise.sigma_rho).clamp(0.0, 1.0);
        }
    }
    out
}

/// Stream used for the time transition of PSFV `id` at `step`.
pub fn psfv_stream(seed: u64, step: u64, id: u64) -> rand_chacha::ChaCha8Rng {
    substream(seed, &[tag::PSFV_MOTION, step], id)
}

/// Transition between anchors within one time step: an exact copy.
pub fn transition_psfv_pa(y: &PsfvBelief) -> PsfvBelief {
    y.clone()
}

/// Half-widths of the uniform agent prior around its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentPrior {
    pub position: f64,
    pub velocity: f64,
    pub orientation: f64,
}

impl Default for AgentPrior {
    fn default() -> Self {
        AgentPrior {
            position: 0.5,
            velocity: 0.01,
            orientation: 5f64.to_radians(),
        }
    }
}

/// `n` equally weighted particles drawn uniformly in boxes around `centre`.
pub fn init_agent_particles(centre: &AgentState, prior: &AgentPrior, n: usize, seed: u64) -> AgentParticles {
    let mut rng = substream(seed, &[tag::AGENT_INIT], 0);
    let mut sym = |h: f64| if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
    let states = (0..n)
        .map(|_| AgentState {
            p: centre.p + Vec2::new(sym(prior.position), sym(prior.position)),
            v: centre.v + Vec2::new(sym(prior.velocity), sym(prior.velocity)),
            dphi: wrap_angle(centre.dphi + sym(prior.orientation)),
        })
        .collect();
    AgentParticles {
        states,
        weights: vec![1.0 / n as f64; n],
    }
}
