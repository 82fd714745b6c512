//! Deterministic 2D exploration simulator: truth worlds, lidar, drift,
//! submap construction, emulated optimization, planning and the loop that
//! ties them together.

mod config;
mod explore;
mod motion;
mod planner;
mod sensor;
mod world;

pub use config::{
    ExploreLimits, IncrementalConfig, OptimizationConfig, RobotConfig, SimConfig, SubmapConfig,
};
pub use explore::{explore, navigation_points, Exploration, ExplorationLog, RoundRecord};
pub use motion::{optimization_step, DriftModel, Jitter};
pub use planner::{path_length, plan_path, reachable_mask};
pub use sensor::{
    frame_origin_cell, mark_observed, raycast_scan, Beam, Scan, SensorModel, SubmapBuilder,
    FREE_UPDATE, OCCUPIED_UPDATE,
};
pub use world::{
    builtin, closed_room, corridor, single_loop, two_loop, two_rooms, World, BUILTIN_WORLDS,
};
