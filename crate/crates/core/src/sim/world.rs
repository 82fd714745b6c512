//! Ground-truth worlds: a fully known Free/Occupied raster and a start pose.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    inflate, read_pgm, write_pgm, Cell, CellLabel, Connectivity, GridHeader, OccupancyGrid, Pose2D,
    DEFAULT_RESOLUTION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    truth: OccupancyGrid,
    start: Pose2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldHeader {
    resolution: f64,
    #[serde(default)]
    origin: Pose2D,
    start: Pose2D,
}

impl World {
    /// Checks that the raster has no Unknown cells, is axis-aligned, and that
    /// the start lies on a Free cell.
    pub fn new(truth: OccupancyGrid, start: Pose2D) -> Result<Self> {
        if truth.origin().theta != 0.0 {
            return Err(Error::InvalidWorld(
                "world raster must be axis-aligned".into(),
            ));
        }
        if truth.count_label(CellLabel::Unknown) > 0 {
            return Err(Error::InvalidWorld(
                "world raster contains Unknown cells".into(),
            ));
        }
        match truth.world_to_cell(start.translation()) {
            Some(c) if truth.label(c) == CellLabel::Free => {}
            _ => {
                return Err(Error::InvalidWorld(format!(
                    "start ({:.3}, {:.3}) is not on a Free cell",
                    start.x, start.y
                )))
            }
        }
        Ok(Self { truth, start })
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    pub fn start(&self) -> Pose2D {
        self.start
    }

    pub fn start_cell(&self) -> Cell {
        self.truth
            .world_to_cell(self.start.translation())
            .expect("start checked on construction")
    }

    /// Start clearance requirement: no Occupied cell within `radius` cells.
    pub fn check_clearance(&self, radius: u32) -> Result<()> {
        if inflate(&self.truth, radius).label(self.start_cell()) != CellLabel::Free {
            return Err(Error::InvalidWorld(format!(
                "start has less than {radius} cells of clearance"
            )));
        }
        Ok(())
    }

    /// Mask of Free cells 8-connected to the start cell.
    pub fn reachable_free(&self) -> Vec<bool> {
        let g = &self.truth;
        let mut mask = vec![false; g.len()];
        let start = self.start_cell();
        mask[g.index(start)] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in g.neighbors(c, Connectivity::Eight) {
                let i = g.index(n);
                if !mask[i] && g.label(n) == CellLabel::Free {
                    mask[i] = true;
                    queue.push_back(n);
                }
            }
        }
        mask
    }

    /// Writes `<name>.pgm` (white Free, black Occupied) and a JSON sidecar
    /// with resolution, origin and start pose.
    pub fn save(&self, pgm_path: &Path) -> Result<()> {
        fs::write(pgm_path, write_pgm(&self.truth)).map_err(|e| Error::file(pgm_path, e))?;
        let header = WorldHeader {
            resolution: self.truth.resolution(),
            origin: self.truth.origin(),
            start: self.start,
        };
        let side = pgm_path.with_extension("json");
        fs::write(&side, serde_json::to_string_pretty(&header)?)
            .map_err(|e| Error::file(side, e))?;
        Ok(())
    }

    pub fn load(pgm_path: &Path) -> Result<Self> {
        let side = pgm_path.with_extension("json");
        let text = fs::read_to_string(&side).map_err(|e| Error::file(&side, e))?;
        let header: WorldHeader = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidWorld(format!("{}: {e}", side.display())))?;
        let bytes = fs::read(pgm_path).map_err(|e| Error::file(pgm_path, e))?;
        let truth = read_pgm(
            &bytes,
            GridHeader {
                resolution: header.resolution,
                origin: header.origin,
            },
        )?;
        Self::new(truth, header.start)
    }
}

/// Paints axis-aligned rectangles in meters onto an all-Occupied raster.
struct Canvas {
    grid: OccupancyGrid,
}

impl Canvas {
    fn new(width_m: f64, height_m: f64) -> Self {
        let res = DEFAULT_RESOLUTION;
        let w = (width_m / res).round() as usize;
        let h = (height_m / res).round() as usize;
        Self {
            grid: OccupancyGrid::filled(w, h, res, Pose2D::identity(), CellLabel::Occupied),
        }
    }

    fn paint(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, label: CellLabel) -> &mut Self {
        let res = self.grid.resolution();
        let cx0 = (x0 / res).round().max(0.0) as u32;
        let cy0 = (y0 / res).round().max(0.0) as u32;
        let cx1 = ((x1 / res).round() as u32).min(self.grid.width() as u32);
        let cy1 = ((y1 / res).round() as u32).min(self.grid.height() as u32);
        for y in cy0..cy1 {
            for x in cx0..cx1 {
                self.grid.set_label(Cell::new(x, y), label);
            }
        }
        self
    }

    fn free(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) -> &mut Self {
        self.paint(x0, y0, x1, y1, CellLabel::Free)
    }

    fn wall(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) -> &mut Self {
        self.paint(x0, y0, x1, y1, CellLabel::Occupied)
    }

    fn world(&self, x: f64, y: f64) -> World {
        World::new(self.grid.clone(), Pose2D::new(x, y, 0.0)).expect("built-in world is valid")
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_WORLDS: [&str; 5] = ["corridor", "two-rooms", "closed-room", "loop", "two-loop"];

pub fn builtin(name: &str) -> Option<World> {
    Some(match name {
        "corridor" => corridor(),
        "two-rooms" => two_rooms(),
        "closed-room" => closed_room(),
        "loop" => single_loop(),
        "two-loop" => two_loop(),
        _ => return None,
    })
}

/// A straight 20 m × 4 m corridor, closed at both ends.
pub fn corridor() -> World {
    Canvas::new(20.2, 4.2)
        .free(0.1, 0.1, 20.1, 4.1)
        .world(1.025, 2.125)
}

/// Two 6 m × 6 m rooms joined by a one-cell doorway.
pub fn two_rooms() -> World {
    Canvas::new(12.3, 6.2)
        .free(0.1, 0.1, 6.1, 6.1)
        .free(6.2, 0.1, 12.2, 6.1)
        .free(6.1, 3.1, 6.2, 3.15)
        .world(3.025, 3.025)
}

/// A 3 m × 3 m room that one rotation of the sensor observes completely.
pub fn closed_room() -> World {
    Canvas::new(3.2, 3.2)
        .free(0.1, 0.1, 3.1, 3.1)
        .world(1.625, 1.625)
}

/// A 2 m wide ring corridor around a 16 m × 8 m block.
pub fn single_loop() -> World {
    Canvas::new(20.2, 12.2)
        .free(0.1, 0.1, 20.1, 12.1)
        .wall(2.1, 2.1, 18.1, 10.1)
        .world(1.125, 1.125)
}

/// Figure-eight corridors, 3 m wide, around two blocks in a 40 m × 25 m
/// hall, with a few pillars that leave small shadows.
pub fn two_loop() -> World {
    let mut c = Canvas::new(40.2, 25.2);
    c.free(0.1, 0.1, 40.1, 25.1)
        .wall(3.1, 3.1, 18.6, 22.1)
        .wall(21.6, 3.1, 37.1, 22.1);
    for (x, y) in [
        (9.0, 1.5),
        (30.0, 23.6),
        (1.5, 12.5),
        (20.1, 12.5),
        (38.6, 8.0),
    ] {
        c.wall(x - 0.1, y - 0.1, x + 0.1, y + 0.1);
    }
    c.world(1.525, 1.525)
}
