//! Multipath radio SLAM with a probabilistic occupancy grid.
//!
//! The crate jointly estimates a mobile agent's pose, a set of potential
//! surface-feature vertices (PSFVs, each a particle cloud with an existence
//! probability and a reflection coefficient) and a binary occupancy grid from
//! per-anchor multipath measurements `(distance, AoD, AoA, normalized amplitude)`.
//! Inference is a particle-based sum-product algorithm: path evidence is
//! integrated over particles, associated to measurements by loopy belief
//! propagation, and fed back to the agent, the PSFVs and every grid cell a
//! propagation ray interacts with.
//!
//! Module map:
//!
//! - [`grid`]: grid geometry, ray traversal, traversed/hit cell sets,
//!   path-validity messages and the per-cell message/fusion math.
//! - [`propagation`]: specular image-source paths, the amplitude model,
//!   detection probability, measurement variances and likelihoods.
//! - [`dynamics`]: agent and PSFV state containers, transitions and priors.
//! - [`association`]: belief-propagation data association.
//! - [`inference`]: the per-step, per-anchor filter.
//! - [`synthesis`]: the synthetic measurement generator.
//! - [`harness`]: configuration, scenario runner, metrics and artifact I/O.

pub mod association;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod inference;
pub mod math;
pub mod propagation;
pub mod rng;
pub mod special;
pub mod synthesis;

pub use error::{Error, Result};
pub use math::Vec2;
