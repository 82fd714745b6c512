//! Pose error injection and the blend-toward-truth optimization stand-in.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Pose2D;
use crate::incremental::OptimizationEvent;
use crate::submap_graph::{SubmapGraph, SubmapId};

/// Odometry drift. Each new submap perturbs the estimated robot pose by a
/// zero-mean Gaussian whose standard deviation grows with the square root of
/// the distance and rotation covered since the previous submap started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftModel {
    /// Meters per square-root meter of travel.
    pub per_meter_xy_sigma: f64,
    /// Radians per square-root radian of rotation.
    pub per_radian_theta_sigma: f64,
    pub rng_seed: u64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            per_meter_xy_sigma: 0.01,
            per_radian_theta_sigma: 0.0005,
            rng_seed: 1,
        }
    }
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drift.per_meter_xy_sigma", self.per_meter_xy_sigma),
            ("drift.per_radian_theta_sigma", self.per_radian_theta_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Perturbation in the robot frame for the given distance and rotation.
    pub fn sample(&self, distance: f64, rotation: f64, rng: &mut ChaCha8Rng) -> Pose2D {
        let xy = self.per_meter_xy_sigma * distance.max(0.0).sqrt();
        let th = self.per_radian_theta_sigma * rotation.abs().sqrt();
        Pose2D::new(gaussian(xy, rng), gaussian(xy, rng), gaussian(th, rng))
    }
}

fn gaussian(sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
    } else {
        0.0
    }
}

fn uniform(half_width: f64, rng: &mut ChaCha8Rng) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// Bounds of the uniform noise added to every corrected pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub xy: f64,
    pub theta: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter {
        xy: 0.0,
        theta: 0.0,
    };
}

/// Moves every finished submap's pose `strength` of the way to its true
/// pose and adds uniform jitter. Submaps are visited in id order so the
/// random stream is reproducible.
pub fn optimization_step(
    graph: &SubmapGraph,
    truth_poses: &BTreeMap<SubmapId, Pose2D>,
    strength: f64,
    jitter: &Jitter,
    round: u32,
    latest_submap: SubmapId,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizationEvent> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidArgument(format!(
            "optimization strength must be in [0, 1], got {strength}"
        )));
    }
    let mut corrected = BTreeMap::new();
    for id in graph.finished_ids() {
        let truth = truth_poses.get(&id).ok_or(Error::UnknownSubmap(id))?;
        let blended = graph
            .submap(id)?
            .current_pose()
            .interpolate(truth, strength);
        let pose = Pose2D::new(
            blended.x + uniform(jitter.xy, rng),
            blended.y + uniform(jitter.xy, rng),
            blended.theta + uniform(jitter.theta, rng),
        );
        corrected.insert(id, pose);
    }
    Ok(OptimizationEvent {
        round,
        corrected_poses: corrected,
        latest_submap,
    })
}
