//! Lidar raycasting against the truth raster and scan insertion into a
//! growing submap.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{Error, Result};
use crate::grid::{Cell, CellLabel, OccupancyGrid, Point2, Pose2D};
use crate::submap_graph::{FinishParams, SubmapGraph, SubmapId};

/// Stand-in for the sensor model's hit/miss update: traversed cells are set
/// to this value, overwriting whatever was there.
pub const FREE_UPDATE: f32 = 0.1;
/// Endpoint value for beams that hit an obstacle.
pub const OCCUPIED_UPDATE: f32 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel {
    /// Meters.
    pub range: f64,
    /// Radians, centered on the heading.
    pub fov: f64,
    pub beams: usize,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            range: 8.0,
            fov: std::f64::consts::PI,
            beams: 180,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sensor.range must be positive, got {}",
                self.range
            )));
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(Error::InvalidConfig(format!(
                "sensor.fov must be in (0, 2π], got {}",
                self.fov
            )));
        }
        if self.beams < 2 {
            return Err(Error::InvalidConfig(format!(
                "sensor.beams must be at least 2, got {}",
                self.beams
            )));
        }
        Ok(())
    }

    /// Beam bearings relative to the heading. A full circle does not repeat
    /// its first bearing.
    pub fn bearings(&self) -> Vec<f64> {
        let full = self.fov >= TAU - 1e-12;
        let step = if full {
            self.fov / self.beams as f64
        } else {
            self.fov / (self.beams - 1) as f64
        };
        (0..self.beams)
            .map(|i| -self.fov / 2.0 + i as f64 * step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub bearing: f64,
    /// Distance to the first Occupied cell, or the sensor range.
    pub range: f64,
    pub hit: bool,
}

pub type Scan = Vec<Beam>;

/// Cell-exact ray traversal (Amanatides–Woo). `start` is in raster units
/// (cells, fractional), `dir` a unit vector, `max_t` a length in cells.
/// `visit(x, y, t_enter)` is called for each crossed cell in order until it
/// returns `false`.
pub(crate) fn traverse(
    start: (f64, f64),
    dir: (f64, f64),
    max_t: f64,
    mut visit: impl FnMut(i64, i64, f64) -> bool,
) {
    let (mut x, mut y) = (start.0.floor() as i64, start.1.floor() as i64);
    let step_x: i64 = if dir.0 > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dir.1 > 0.0 { 1 } else { -1 };
    let delta_x = if dir.0 != 0.0 {
        (1.0 / dir.0).abs()
    } else {
        f64::INFINITY
    };
    let delta_y = if dir.1 != 0.0 {
        (1.0 / dir.1).abs()
    } else {
        f64::INFINITY
    };
    let mut next_x = if dir.0 > 0.0 {
        (x as f64 + 1.0 - start.0) * delta_x
    } else if dir.0 < 0.0 {
        (start.0 - x as f64) * delta_x
    } else {
        f64::INFINITY
    };
    let mut next_y = if dir.1 > 0.0 {
        (y as f64 + 1.0 - start.1) * delta_y
    } else if dir.1 < 0.0 {
        (start.1 - y as f64) * delta_y
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    loop {
        if !visit(x, y, t) {
            return;
        }
        if next_x < next_y {
            t = next_x;
            next_x += delta_x;
            x += step_x;
        } else {
            t = next_y;
            next_y += delta_y;
            y += step_y;
        }
        if t > max_t {
            return;
        }
    }
}

fn raster_coords(grid: &OccupancyGrid, p: Point2) -> (f64, f64) {
    let local = grid.origin().inverse_transform_point(p);
    (local.x / grid.resolution(), local.y / grid.resolution())
}

/// Casts every beam from `pose` against the truth raster. Cells outside the
/// raster count as obstacles.
pub fn raycast_scan(world: &World, pose: &Pose2D, sensor: &SensorModel) -> Result<Scan> {
    let truth = world.truth();
    match truth.world_to_cell(pose.translation()) {
        Some(c) if truth.label(c) == CellLabel::Free => {}
        _ => {
            return Err(Error::PoseInObstacle {
                x: pose.x,
                y: pose.y,
            })
        }
    }
    let res = truth.resolution();
    let start = raster_coords(truth, pose.translation());
    let max_t = sensor.range / res;
    let rel = pose.theta - truth.origin().theta;
    Ok(sensor
        .bearings()
        .into_iter()
        .map(|bearing| {
            let (s, c) = (rel + bearing).sin_cos();
            let mut hit_t = None;
            traverse(start, (c, s), max_t, |x, y, t| match truth.label_at(x, y) {
                Some(CellLabel::Free) => true,
                _ => {
                    hit_t = Some(t);
                    false
                }
            });
            match hit_t {
                Some(t) if t <= max_t => Beam {
                    bearing,
                    range: t * res,
                    hit: true,
                },
                _ => Beam {
                    bearing,
                    range: sensor.range,
                    hit: false,
                },
            }
        })
        .collect())
}

/// Marks every truth cell a scan observed: the traversed cells and the hit cell.
pub fn mark_observed(world: &World, pose: &Pose2D, scan: &Scan, observed: &mut [bool]) {
    let truth = world.truth();
    let res = truth.resolution();
    let start = raster_coords(truth, pose.translation());
    let rel = pose.theta - truth.origin().theta;
    for beam in scan {
        let (s, c) = (rel + beam.bearing).sin_cos();
        let limit = beam.range / res;
        traverse(start, (c, s), limit + 1e-6, |x, y, t| {
            let Some(cell) = truth.checked_cell(x, y) else {
                return false;
            };
            let inside = t < limit - 1e-9;
            if inside || beam.hit {
                observed[truth.index(cell)] = true;
            }
            inside
        });
    }
}

/// An unfinished submap: a raster in the submap frame that scans are
/// written into until it holds its quota.
#[derive(Debug, Clone)]
pub struct SubmapBuilder {
    id: SubmapId,
    grid: OccupancyGrid,
    scans: usize,
    capacity: usize,
}

impl SubmapBuilder {
    /// `half_extent` is the distance in meters from the frame origin to the
    /// raster edge; it must cover the sensor range plus the travel while the
    /// submap is active.
    pub fn new(id: SubmapId, resolution: f64, half_extent: f64, capacity: usize) -> Self {
        let half = (half_extent / resolution).ceil() as usize + 1;
        let origin = Pose2D::new(
            -(half as f64) * resolution,
            -(half as f64) * resolution,
            0.0,
        );
        Self {
            id,
            grid: OccupancyGrid::new(2 * half, 2 * half, resolution, origin),
            scans: 0,
            capacity,
        }
    }

    pub fn id(&self) -> SubmapId {
        self.id
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn scans(&self) -> usize {
        self.scans
    }

    pub fn is_full(&self) -> bool {
        self.scans >= self.capacity
    }

    /// Writes one scan taken at `local_pose` (robot pose in the submap
    /// frame). Traversed cells become Free, hit cells Occupied; later writes
    /// overwrite earlier ones. Returns whether the submap is now full.
    pub fn integrate_scan(&mut self, local_pose: &Pose2D, scan: &Scan) -> Result<bool> {
        if self.is_full() {
            return Err(Error::SubmapFinished(self.id));
        }
        let res = self.grid.resolution();
        let start = raster_coords(&self.grid, local_pose.translation());
        for beam in scan {
            let (s, c) = (local_pose.theta + beam.bearing).sin_cos();
            let limit = beam.range / res;
            traverse(start, (c, s), limit, |x, y, t| {
                if t >= limit - 1e-9 {
                    return false;
                }
                match self.grid.checked_cell(x, y) {
                    Some(cell) => {
                        self.grid
                            .set_probability(cell, FREE_UPDATE)
                            .expect("valid probability");
                        true
                    }
                    None => false,
                }
            });
            if beam.hit {
                // nudge past the cell boundary the beam stopped on
                let t = limit + 1e-6;
                let end = (start.0 + c * t, start.1 + s * t);
                if let Some(cell) = self
                    .grid
                    .checked_cell(end.0.floor() as i64, end.1.floor() as i64)
                {
                    self.grid
                        .set_probability(cell, OCCUPIED_UPDATE)
                        .expect("valid probability");
                }
            }
        }
        self.scans += 1;
        Ok(self.is_full())
    }

    /// The raster trimmed to its observed cells plus one Unknown border.
    pub fn cropped(&self) -> OccupancyGrid {
        match self.grid.observed_bounds(1) {
            Some((x0, y0, w, h)) => self.grid.crop(x0, y0, w, h),
            None => self.grid.clone(),
        }
    }

    /// Inserts the trimmed raster into `graph` at `pose` and finishes it.
    pub fn finish_into(
        self,
        graph: &mut SubmapGraph,
        pose: Pose2D,
        params: &FinishParams,
    ) -> Result<SubmapId> {
        if graph.len() != self.id.index() {
            return Err(Error::InvalidArgument(format!(
                "builder for {} cannot be inserted as submap #{}",
                self.id,
                graph.len()
            )));
        }
        graph.add_finished_submap(self.cropped(), pose, params)
    }
}

/// Cell of the submap raster holding the frame origin.
pub fn frame_origin_cell(grid: &OccupancyGrid) -> Option<Cell> {
    grid.world_to_cell(Point2::new(0.0, 0.0))
}
