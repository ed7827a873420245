//! New-PSFV proposals from unexplained measurements.
//!
//! Most particles invert the single-bounce geometry: the measured distance
//! and AoA place a virtual anchor relative to an agent particle, and the
//! reflecting line is the perpendicular bisector of the PA and that virtual
//! anchor. The new-feature prior is taken uniform over `(distance, AoA)` with
//! density `1 / (d_max 2π)`, so those two likelihood factors are absorbed by
//! the proposal and only the AoD and amplitude factors weight the particle. A
//! fraction of the particles is drawn uniformly over the region of interest
//! instead and weighted by the full likelihood.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{AgentParticles, PsfvParticle, CHUNK};
use crate::math::{log_sum_exp, Vec2};
use crate::propagation::{
    log_detected_likelihood, log_wrapped_normal, solve_path_lines, Line, Measurement,
    RadioConstants,
};
use crate::rng::{substream, tag};
use crate::special::rician_log_pdf;

/// Birth proposal settings.
#[derive(Debug, Clone, Copy)]
pub struct BirthSpec {
    pub reference: Vec2,
    pub roi: [Vec2; 2],
    pub d_max: f64,
    pub rho_range: [f64; 2],
    pub uniform_fraction: f64,
    pub mu_n: f64,
    pub mu_fa: f64,
}

/// One candidate per measurement: weighted particles and `ln N_m`, the
/// new-path evidence relative to the false-alarm intensity.
#[derive(Debug, Clone)]
pub struct BirthCandidate {
    pub particles: Vec<PsfvParticle>,
    pub weights: Vec<f64>,
    pub log_evidence: f64,
}

/// Whether particle `k` comes from the uniform fallback; spreads the
/// fallback evenly over the index range.
pub fn is_fallback(k: usize, fraction: f64) -> bool {
    ((k + 1) as f64 * fraction).floor() > (k as f64 * fraction).floor()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `ln(f_ray(z_u) / 2π)`: the false-alarm density without its distance and
/// AoA factors.
fn log_fa_reduced(z: &Measurement, rc: &RadioConstants) -> f64 {
    -(2.0 * PI).ln() + (2.0 * z.z_u).ln() - (z.z_u * z.z_u - rc.u_de * rc.u_de)
}

/// Proposes a new PSFV for measurement `z`. Particle `k` is tied to agent
/// particle `k`. The random stream is keyed by `(seed, n, pa, m)`.
#[allow(clippy::too_many_arguments)]
pub fn propose_birth(
    agent: &AgentParticles,
    pa: Vec2,
    z: &Measurement,
    rc: &RadioConstants,
    spec: &BirthSpec,
    seed: u64,
    labels: [u64; 2],
    m: usize,
) -> BirthCandidate {
    let n = agent.len();
    let var_z = rc.variances(z.z_u);
    let (sd, sa) = (var_z.d.sqrt(), var_z.aoa.sqrt());
    let ln_prior_volume = (spec.d_max * 2.0 * PI).ln();
    let f = spec.uniform_fraction.clamp(0.0, 1.0);

    let per: Vec<(PsfvParticle, f64, bool)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(
                seed,
                &[tag::BIRTH, labels[0], labels[1], m as u64],
                c as u64,
            );
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut out = Vec::with_capacity(hi - lo);
            for k in lo..hi {
                let x = &agent.states[k];
                let rho = rng.random_range(spec.rho_range[0]..=spec.rho_range[1]);
                let fb = is_fallback(k, f);
                let foot = if fb {
                    Vec2::new(
                        rng.random_range(spec.roi[0].x..=spec.roi[1].x),
                        rng.random_range(spec.roi[0].y..=spec.roi[1].y),
                    )
                } else {
                    let d = z.z_d + sd * normal(&mut rng);
                    let a = z.z_aoa + sa * normal(&mut rng);
                    let va = x.p + Vec2::from_angle(a + x.dphi) * d;
                    match (va - pa).normalized() {
                        Some(normal) => Line {
                            point: (va + pa) * 0.5,
                            normal,
                        }
                        .foot(spec.reference),
                        None => spec.reference,
                    }
                };
                let y = PsfvParticle { p: foot, rho };
                let lw = Line::from_foot(foot, spec.reference)
                    .and_then(|l| solve_path_lines(x.p, x.dphi, pa, &[l]))
                    .map(|g| {
                        let u = rc.amplitude(rho, g.length);
                        if fb {
                            log_detected_likelihood(z, g.length, g.aod, g.aoa, u, rc)
                                + ln_prior_volume
                        } else {
                            let v = rc.variances(u);
                            log_wrapped_normal(z.z_aod, g.aod, v.aod) + rician_log_pdf(z.z_u, u)
                        }
                    })
                    .unwrap_or(f64::NEG_INFINITY);
                out.push((y, lw + agent.weights[k].ln(), fb));
            }
            out
        })
        .collect();

    // Each group estimates the same mean; mix them with their nominal shares.
    let group_log_mass = |fb: bool| {
        log_sum_exp(
            agent
                .weights
                .iter()
                .zip(&per)
                .filter(|(_, p)| p.2 == fb)
                .map(|(w, _)| w.ln()),
        )
    };
    let shares = [(false, 1.0 - f), (true, f)];
    let mut log_w: Vec<f64> = vec![f64::NEG_INFINITY; n];
    for (fb, share) in shares {
        if share <= 0.0 {
            continue;
        }
        let mass = group_log_mass(fb);
        if !mass.is_finite() {
            continue;
        }
        for (k, p) in per.iter().enumerate() {
            if p.2 == fb {
                log_w[k] = p.1 + share.ln() - mass;
            }
        }
    }
    let log_mean = log_sum_exp(log_w.iter().copied());
    let weights = if log_mean.is_finite() {
        log_w.iter().map(|l| (l - log_mean).exp()).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    // Particle k was built from agent particle k; the belief is a marginal,
    // so drop that pairing before the filter pairs particles by index.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(
        seed,
        &[tag::BIRTH, labels[0], labels[1], m as u64],
        u64::MAX,
    ));
    let particles = order.iter().map(|&k| per[k].0).collect();
    let weights = order.iter().map(|&k| weights[k]).collect();
    let log_evidence = if spec.mu_n > 0.0 {
        (spec.mu_n / spec.mu_fa).ln() + log_mean - log_fa_reduced(z, rc)
    } else {
        f64::NEG_INFINITY
    };
    BirthCandidate {
        particles,
        weights,
        log_evidence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AgentState;

    #[test]
    fn fallback_share() {
        let count = (0..1000).filter(|&k| is_fallback(k, 0.1)).count();
        assert_eq!(count, 100);
        assert!(!(0..50).any(|k| is_fallback(k, 0.0)));
    }

    fn spec() -> BirthSpec {
        BirthSpec {
            reference: Vec2::ZERO,
            roi: [Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0)],
            d_max: 25.0,
            rho_range: [0.1, 0.9],
            uniform_fraction: 0.1,
            mu_n: 0.05,
            mu_fa: 1.0,
        }
    }

    #[test]
    fn inverted_particles_land_on_the_wall() {
        // Wall y = 2, PA (0, 0), agent (1, 0): VA (0, 4).
        let rc = RadioConstants::default();
        let pa = Vec2::ZERO;
        let x = AgentState {
            p: Vec2::new(1.0, 0.0),
            v: Vec2::ZERO,
            dphi: 0.0,
        };
        let agent = AgentParticles {
            states: vec![x; 200],
            weights: vec![1.0 / 200.0; 200],
        };
        let va = Vec2::new(0.0, 4.0);
        let z = Measurement {
            z_d: (va - x.p).norm(),
            z_aod: Vec2::new(0.5, 2.0).angle(),
            z_aoa: (va - x.p).angle(),
            z_u: rc.amplitude(0.5, (va - x.p).norm()),
        };
        let c = propose_birth(&agent, pa, &z, &rc, &spec(), 1, [0, 0], 0);
        let mut s = spec();
        s.uniform_fraction = 0.0;
        let c0 = propose_birth(&agent, pa, &z, &rc, &s, 1, [0, 0], 0);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: Vec2 = c0
            .particles
            .iter()
            .zip(&c0.weights)
            .fold(Vec2::ZERO, |a, (p, w)| a + p.p * *w);
        assert!((mean - Vec2::new(0.0, 2.0)).norm() < 0.02, "{mean:?}");
        assert!(c.log_evidence.is_finite());
        let mut s0 = spec();
        s0.mu_n = 0.0;
        let none = propose_birth(&agent, pa, &z, &rc, &s0, 1, [0, 0], 0);
        assert_eq!(none.log_evidence, f64::NEG_INFINITY);
    }
}
