//! Reachable local-frontier detection with the Wavefront Frontier Detector.
//!
//! Detection runs on an already inflated submap so that every returned cell is
//! both a frontier and reachable by a robot of the inflated footprint: a
//! pocket of free space behind a gap narrower than the robot is sealed by the
//! inflation and never visited by the search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, CellLabel, Connectivity, OccupancyGrid};
use crate::submap_graph::SubmapId;

/// Frontier cells of one submap, in submap-local raster coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocalFrontierSet {
    pub submap_id: SubmapId,
    /// Sorted, no duplicates.
    points: Vec<Cell>,
}

impl LocalFrontierSet {
    pub fn new(submap_id: SubmapId, mut points: Vec<Cell>) -> Self {
        points.sort_unstable();
        points.dedup();
        Self { submap_id, points }
    }

    pub fn points(&self) -> &[Cell] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.points.binary_search(&cell).is_ok()
    }
}

/// A Free cell with at least one Unknown neighbor.
pub fn is_frontier(grid: &OccupancyGrid, cell: Cell, connectivity: Connectivity) -> bool {
    grid.label(cell) == CellLabel::Free
        && grid
            .neighbors(cell, connectivity)
            .any(|n| grid.label(n) == CellLabel::Unknown)
}

/// Contiguous frontier segments reachable from `seed`, in discovery order.
///
/// The outer search floods Free space from the seed. Whenever it reaches a
/// frontier cell that no segment has claimed yet, an inner search collects the
/// whole connected run of frontier cells around it.
pub fn detect_frontier_segments(
    grid: &OccupancyGrid,
    seed: Cell,
    connectivity: Connectivity,
) -> Result<Vec<Vec<Cell>>> {
    if !grid.contains(seed.x as i64, seed.y as i64) {
        return Err(Error::SeedOutOfBounds {
            x: seed.x as i64,
            y: seed.y as i64,
        });
    }
    if grid.label(seed) != CellLabel::Free {
        return Err(Error::SeedNotFree {
            x: seed.x,
            y: seed.y,
        });
    }

    let n = grid.len();
    let mut map_open = vec![false; n];
    let mut frontier_seen = vec![false; n];
    let mut segments = Vec::new();

    let mut outer = VecDeque::new();
    outer.push_back(seed);
    map_open[grid.index(seed)] = true;

    let mut inner = VecDeque::new();
    while let Some(p) = outer.pop_front() {
        let pi = grid.index(p);
        if !frontier_seen[pi] && is_frontier(grid, p, connectivity) {
            let mut segment = Vec::new();
            frontier_seen[pi] = true;
            inner.push_back(p);
            while let Some(q) = inner.pop_front() {
                segment.push(q);
                for w in grid.neighbors(q, connectivity) {
                    let wi = grid.index(w);
                    if !frontier_seen[wi] && is_frontier(grid, w, connectivity) {
                        frontier_seen[wi] = true;
                        inner.push_back(w);
                    }
                }
            }
            segments.push(segment);
        }
        for v in grid.neighbors(p, connectivity) {
            let vi = grid.index(v);
            if !map_open[vi] && grid.label(v) == CellLabel::Free {
                map_open[vi] = true;
                outer.push_back(v);
            }
        }
    }
    Ok(segments)
}

/// All frontier cells reachable from `seed` through Free cells.
pub fn detect_local_frontiers(
    grid: &OccupancyGrid,
    seed: Cell,
    connectivity: Connectivity,
) -> Result<Vec<Cell>> {
    let mut cells: Vec<Cell> = detect_frontier_segments(grid, seed, connectivity)?
        .into_iter()
        .flatten()
        .collect();
    cells.sort_unstable();
    Ok(cells)
}

/// Chooses where the frontier search starts: the preferred cell when it is
/// Free, else the nearest Free cell within `max_radius` cells (ties broken by
/// row, then column), else `None`.
pub fn find_seed(grid: &OccupancyGrid, preferred: (i64, i64), max_radius: u32) -> Option<Cell> {
    let (px, py) = preferred;
    if grid.label_at(px, py) == Some(CellLabel::Free) {
        return grid.checked_cell(px, py);
    }
    let r = max_radius as i64;
    let mut best: Option<(i64, Cell)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = dx * dx + dy * dy;
            if d2 > r * r {
                continue;
            }
            let Some(c) = grid.checked_cell(px + dx, py + dy) else {
                continue;
            };
            if grid.label(c) != CellLabel::Free {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bc)) => (d2, c.y, c.x) < (bd, bc.y, bc.x),
            };
            if better {
                best = Some((d2, c));
            }
        }
    }
    best.map(|(_, c)| c)
}
