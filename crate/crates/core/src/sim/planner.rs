//! Grid path planning on the inflated fused map.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::grid::{Cell, CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // min-heap on f; equal f resolved by lower index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.x as f64 - b.x as f64).abs();
    let dy = (a.y as f64 - b.y as f64).abs();
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

/// Shortest 8-connected path over Free cells from the robot's cell to the
/// cell containing `to`, as cell-center waypoints including both ends.
/// Diagonal moves may not cut between two blocked orthogonal neighbors.
/// Returns `Ok(None)` when the target is unreachable.
pub fn plan_path(map: &OccupancyGrid, from: &Pose2D, to: Point2) -> Result<Option<Vec<Point2>>> {
    let start = match map.world_to_cell(from.translation()) {
        Some(c) if map.label(c) == CellLabel::Free => c,
        _ => {
            return Err(Error::PoseInObstacle {
                x: from.x,
                y: from.y,
            })
        }
    };
    let goal = match map.world_to_cell(to) {
        Some(c) if map.label(c) == CellLabel::Free => c,
        _ => return Ok(None),
    };
    let n = map.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let si = map.index(start);
    let gi = map.index(goal);
    g[si] = 0.0;
    let mut open = BinaryHeap::from([Open {
        f: octile(start, goal),
        index: si,
    }]);
    let free = |x: i64, y: i64| map.label_at(x, y) == Some(CellLabel::Free);
    while let Some(Open { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        if index == gi {
            break;
        }
        closed[index] = true;
        let c = map.cell_at_index(index);
        let (cx, cy) = (c.x as i64, c.y as i64);
        for &(dx, dy) in Connectivity::Eight.offsets() {
            let (nx, ny) = (cx + dx, cy + dy);
            if !free(nx, ny) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && !(free(cx + dx, cy) && free(cx, cy + dy)) {
                continue;
            }
            let ni = map.index(Cell::new(nx as u32, ny as u32));
            if closed[ni] {
                continue;
            }
            let cand = g[index] + if diagonal { SQRT_2 } else { 1.0 };
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = index;
                let h = octile(map.cell_at_index(ni), goal);
                open.push(Open {
                    f: cand + h,
                    index: ni,
                });
            }
        }
    }
    if g[gi].is_infinite() {
        return Ok(None);
    }
    let mut path = vec![gi];
    while *path.last().expect("non-empty") != si {
        path.push(parent[*path.last().expect("non-empty")]);
    }
    path.reverse();
    Ok(Some(
        path.into_iter()
            .map(|i| map.cell_to_world_center(map.cell_at_index(i)))
            .collect(),
    ))
}

pub fn path_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Cells reachable from `start` through Free cells under the planner's move
/// rule (8-connected, no corner cutting).
pub fn reachable_mask(map: &OccupancyGrid, start: Cell) -> Vec<bool> {
    let mut mask = vec![false; map.len()];
    if map.label(start) != CellLabel::Free {
        return mask;
    }
    let free = |x: i64, y: i64| map.label_at(x, y) == Some(CellLabel::Free);
    mask[map.index(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let (cx, cy) = (c.x as i64, c.y as i64);
        for &(dx, dy) in Connectivity::Eight.offsets() {
            let (nx, ny) = (cx + dx, cy + dy);
            if !free(nx, ny) || (dx != 0 && dy != 0 && !(free(cx + dx, cy) && free(cx, cy + dy))) {
                continue;
            }
            let n = Cell::new(nx as u32, ny as u32);
            let i = map.index(n);
            if !mask[i] {
                mask[i] = true;
                queue.push_back(n);
            }
        }
    }
    mask
}
