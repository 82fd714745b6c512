//! Simulator configuration, read from TOML. Every section and key is
//! optional; unknown keys are rejected by name.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::motion::{DriftModel, Jitter};
use super::sensor::SensorModel;
use crate::clustering::{MeanShiftConfig, PriorityConfig};
use crate::error::{Error, Result};
use crate::grid::Connectivity;
use crate::incremental::{DeviationConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotConfig {
    /// Meters.
    pub radius: f64,
    /// Extra clearance beyond the radius, meters.
    pub safety_margin: f64,
    /// In-place rotation per idle tick, radians.
    pub rotation_step: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            radius: 0.2,
            safety_margin: 0.2,
            rotation_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubmapConfig {
    pub scans_per_submap: usize,
    pub connectivity: Connectivity,
}

impl Default for SubmapConfig {
    fn default() -> Self {
        Self {
            scans_per_submap: 70,
            connectivity: Connectivity::Eight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizationConfig {
    /// Fraction of the remaining pose error removed per ordinary round.
    pub strength: f64,
    /// Half-width of the uniform translation jitter, meters. The angular
    /// jitter is this arc length at the sensor range.
    pub jitter: f64,
    /// Travel in meters since a submap finished before re-entering its box
    /// counts as a loop closure, and the minimum travel between closures.
    pub loop_closure_travel: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            strength: 0.15,
            jitter: 0.001,
            loop_closure_travel: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementalConfig {
    pub strategy: Strategy,
    /// Meters.
    pub epsilon: f64,
    pub arc_factor: f64,
}

impl Default for IncrementalConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Direct,
            epsilon: 0.05,
            arc_factor: TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExploreLimits {
    pub max_ticks: u64,
    /// Abort when the observed-cell count stays flat for this many rounds.
    pub no_progress_rounds: usize,
    /// Frontier points within this distance of a reached target are ignored, meters.
    pub blacklist_radius: f64,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        Self {
            max_ticks: 200_000,
            no_progress_rounds: 12,
            blacklist_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub sensor: SensorModel,
    pub drift: DriftModel,
    pub robot: RobotConfig,
    pub submap: SubmapConfig,
    pub optimization: OptimizationConfig,
    pub incremental: IncrementalConfig,
    pub clustering: MeanShiftConfig,
    pub priority: PriorityConfig,
    pub explore: ExploreLimits,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.drift.validate()?;
        positive("robot.radius", self.robot.radius)?;
        if !(self.robot.safety_margin >= 0.0) {
            return Err(Error::InvalidConfig(
                "robot.safety_margin must be non-negative".into(),
            ));
        }
        positive("robot.rotation_step", self.robot.rotation_step)?;
        if self.submap.scans_per_submap == 0 {
            return Err(Error::InvalidConfig(
                "submap.scans_per_submap must be at least 1".into(),
            ));
        }
        let o = &self.optimization;
        if !(0.0..=1.0).contains(&o.strength) {
            return Err(Error::InvalidConfig(format!(
                "optimization.strength must be in [0, 1], got {}",
                o.strength
            )));
        }
        if !(o.jitter >= 0.0) {
            return Err(Error::InvalidConfig(
                "optimization.jitter must be non-negative".into(),
            ));
        }
        positive("optimization.loop_closure_travel", o.loop_closure_travel)?;
        positive("incremental.epsilon", self.incremental.epsilon)?;
        positive("incremental.arc_factor", self.incremental.arc_factor)?;
        positive("clustering.bandwidth", self.clustering.bandwidth)?;
        positive("clustering.tolerance", self.clustering.tolerance)?;
        positive("priority.window", self.priority.window)?;
        if !(self.explore.blacklist_radius >= 0.0) {
            return Err(Error::InvalidConfig(
                "explore.blacklist_radius must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Inflation radius in cells covering robot radius plus margin.
    pub fn inflation_radius(&self, resolution: f64) -> u32 {
        ((self.robot.radius + self.robot.safety_margin) / resolution - 1e-9).ceil() as u32
    }

    pub fn deviation(&self) -> DeviationConfig {
        DeviationConfig {
            epsilon: self.incremental.epsilon,
            lidar_range: self.sensor.range,
            arc_factor: self.incremental.arc_factor,
        }
    }

    pub fn jitter(&self) -> Jitter {
        let xy = self.optimization.jitter;
        Jitter {
            xy,
            theta: xy / (self.incremental.arc_factor * self.sensor.range),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = SimConfig::default();
        assert_eq!(c.inflation_radius(0.05), 8);
        assert_eq!(c.submap.scans_per_submap, 70);
        assert_eq!(c.sensor.beams, 180);
        assert_eq!(c.priority.lambda, 10.0);
        assert_eq!(c.deviation(), DeviationConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn empty_file_is_default_and_round_trips() {
        assert_eq!(SimConfig::from_toml("").unwrap(), SimConfig::default());
        let mut c = SimConfig::default();
        c.incremental.strategy = Strategy::Bfs;
        c.drift.rng_seed = 42;
        assert_eq!(SimConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = SimConfig::from_toml("[sensor]\nrange = 4.0\nbeems = 3\n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("beems"), "{err}");
        let err = SimConfig::from_toml("colour = 1\n").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[optimization]\nstrength = 1.5",
            "[incremental]\nepsilon = 0.0",
            "[sensor]\nbeams = 1",
            "[incremental]\nstrategy = \"greedy\"",
        ] {
            assert!(SimConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
