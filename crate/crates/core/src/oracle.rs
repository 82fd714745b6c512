//! Brute-force reference implementations, written straight from the
//! definitions and sharing no search code with the production paths: a
//! stack flood fill plus a neighbor scan for frontiers, and an all-pairs
//! stabbing test that ignores the bounding-box index.

use std::collections::BTreeSet;

use crate::grid::{Cell, CellLabel, Connectivity, OccupancyGrid, Point2};
use crate::submap_graph::{SubmapGraph, SubmapId};

fn offsets(connectivity: Connectivity) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let diagonal = dx != 0 && dy != 0;
            if (dx, dy) != (0, 0) && (connectivity == Connectivity::Eight || !diagonal) {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn label(grid: &OccupancyGrid, x: i64, y: i64) -> Option<CellLabel> {
    if x < 0 || y < 0 || x >= grid.width() as i64 || y >= grid.height() as i64 {
        return None;
    }
    let p = grid.cells()[y as usize * grid.width() + x as usize];
    Some(if p < 0.5 {
        CellLabel::Free
    } else if p > 0.5 {
        CellLabel::Occupied
    } else {
        CellLabel::Unknown
    })
}

/// Free cells reachable from `seed` through Free cells that touch an
/// Unknown cell. Empty when the seed is not a Free cell.
pub fn frontier_cells(grid: &OccupancyGrid, seed: Cell, connectivity: Connectivity) -> Vec<Cell> {
    let nbrs = offsets(connectivity);
    let (sx, sy) = (seed.x as i64, seed.y as i64);
    if label(grid, sx, sy) != Some(CellLabel::Free) {
        return Vec::new();
    }
    let mut seen = BTreeSet::from([(sx, sy)]);
    let mut stack = vec![(sx, sy)];
    while let Some((x, y)) = stack.pop() {
        for &(dx, dy) in &nbrs {
            let n = (x + dx, y + dy);
            if label(grid, n.0, n.1) == Some(CellLabel::Free) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    let mut out: Vec<Cell> = seen
        .into_iter()
        .filter(|&(x, y)| {
            nbrs.iter()
                .any(|&(dx, dy)| label(grid, x + dx, y + dy) == Some(CellLabel::Unknown))
        })
        .map(|(x, y)| Cell::new(x as u32, y as u32))
        .collect();
    out.sort();
    out
}

/// Raster cell of world point `w` in `other`, computed from first
/// principles: undo the submap pose, undo the raster origin, floor.
fn landing(graph: &SubmapGraph, other: SubmapId, w: Point2) -> (i64, i64) {
    let s = graph.submap(other).expect("submap exists");
    let cp = s.current_pose();
    let (sin, cos) = cp.theta.sin_cos();
    let (dx, dy) = (w.x - cp.x, w.y - cp.y);
    let local = (cos * dx + sin * dy, -sin * dx + cos * dy);
    let o = s.raw().origin();
    let (sin, cos) = o.theta.sin_cos();
    let (dx, dy) = (local.0 - o.x, local.1 - o.y);
    let r = (cos * dx + sin * dy, -sin * dx + cos * dy);
    let res = s.raw().resolution();
    ((r.0 / res).floor() as i64, (r.1 / res).floor() as i64)
}

/// Surviving frontier cells of `id`, testing every other finished submap.
pub fn stabbing(graph: &SubmapGraph, id: SubmapId) -> Vec<Cell> {
    let s = graph.submap(id).expect("submap exists");
    let Some(local) = s.local_frontiers() else {
        return Vec::new();
    };
    let others: Vec<SubmapId> = graph.finished_ids().filter(|&o| o != id).collect();
    local
        .points()
        .iter()
        .copied()
        .filter(|&f| {
            let w = s.cell_to_world(f);
            others.iter().all(|&o| {
                let (x, y) = landing(graph, o, w);
                let other = graph.submap(o).expect("submap exists");
                match label(other.inflated(), x, y) {
                    None | Some(CellLabel::Unknown) => true,
                    Some(_) => other
                        .local_frontiers()
                        .is_some_and(|lf| lf.points().contains(&Cell::new(x as u32, y as u32))),
                }
            })
        })
        .collect()
}

/// The global frontier of a graph recomputed from scratch.
pub fn global_frontiers(graph: &SubmapGraph) -> BTreeSet<(SubmapId, Cell)> {
    graph
        .finished_ids()
        .flat_map(|id| stabbing(graph, id).into_iter().map(move |c| (id, c)))
        .collect()
}

/// Cells reachable from `start` with 4-connected moves over Free cells. The
/// planner's rule (8-connected, no corner cutting) reaches exactly these.
pub fn reachable_cells(grid: &OccupancyGrid, start: Cell) -> BTreeSet<(u32, u32)> {
    let mut seen = BTreeSet::new();
    if label(grid, start.x as i64, start.y as i64) != Some(CellLabel::Free) {
        return seen;
    }
    let nbrs = offsets(Connectivity::Four);
    seen.insert((start.x, start.y));
    let mut stack = vec![(start.x as i64, start.y as i64)];
    while let Some((x, y)) = stack.pop() {
        for &(dx, dy) in &nbrs {
            let (nx, ny) = (x + dx, y + dy);
            if label(grid, nx, ny) == Some(CellLabel::Free) && seen.insert((nx as u32, ny as u32)) {
                stack.push((nx, ny));
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Pose2D;

    #[test]
    fn oracle_on_half_known_grid() {
        let g =
            OccupancyGrid::from_ascii(&["..??", "..??", "#.??"], 0.05, Pose2D::identity()).unwrap();
        // rows are top-first, so the wall cell is (0, 0)
        let f = frontier_cells(&g, Cell::new(0, 2), Connectivity::Eight);
        assert_eq!(f, vec![Cell::new(1, 0), Cell::new(1, 1), Cell::new(1, 2)]);
        let f4 = frontier_cells(&g, Cell::new(0, 2), Connectivity::Four);
        assert_eq!(f4, f);
        assert!(frontier_cells(&g, Cell::new(0, 0), Connectivity::Eight).is_empty());
    }

    #[test]
    fn four_connected_reach_blocks_diagonal_gaps() {
        let g = OccupancyGrid::from_ascii(&[".#", "#."], 0.05, Pose2D::identity()).unwrap();
        assert_eq!(reachable_cells(&g, Cell::new(0, 1)).len(), 1);
    }
}
