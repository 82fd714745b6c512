#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use submap_frontiers::grid::{Cell, CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D};
use submap_frontiers::submap_graph::{FinishParams, SeedPolicy, SubmapGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unknown background with Free rooms carved in and Occupied specks and
/// walls scattered over them, so there are several regions, pockets and
/// frontiers of every shape.
pub fn random_grid(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    res: f64,
    origin: Pose2D,
) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(w, h, res, origin);
    let rooms = rng.random_range(2..7);
    for _ in 0..rooms {
        let rw = rng.random_range(3..w / 2);
        let rh = rng.random_range(3..h / 2);
        let x0 = rng.random_range(0..w - rw);
        let y0 = rng.random_range(0..h - rh);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                g.set_label(Cell::new(x as u32, y as u32), CellLabel::Free);
            }
        }
    }
    let walls = rng.random_range(0..4);
    for _ in 0..walls {
        let horizontal = rng.random_bool(0.5);
        let at = rng.random_range(0..if horizontal { h } else { w });
        let len = rng.random_range(2..w.min(h));
        let start = rng.random_range(0..w.min(h) - len + 1);
        for i in start..start + len {
            let (x, y) = if horizontal { (i, at) } else { (at, i) };
            g.set_label(Cell::new(x as u32, y as u32), CellLabel::Occupied);
        }
    }
    let specks = w * h / 40;
    for _ in 0..specks {
        let x = rng.random_range(0..w) as u32;
        let y = rng.random_range(0..h) as u32;
        let label = if rng.random_bool(0.7) {
            CellLabel::Occupied
        } else {
            CellLabel::Unknown
        };
        g.set_label(Cell::new(x, y), label);
    }
    g
}

/// Up to `max_submaps` finished submaps with random rasters, scattered
/// poses (any heading) in a 3 m square so most of them overlap.
pub fn random_graph(rng: &mut ChaCha8Rng, max_submaps: usize) -> SubmapGraph {
    let n = rng.random_range(2..=max_submaps);
    let mut graph = SubmapGraph::new();
    let params = FinishParams {
        inflation_radius: rng.random_range(0..3),
        connectivity: if rng.random_bool(0.5) {
            Connectivity::Eight
        } else {
            Connectivity::Four
        },
        seed: SeedPolicy::FrameOrigin,
    };
    for _ in 0..n {
        let size = rng.random_range(12..28);
        let res = 0.05;
        let half = size as f64 * res / 2.0;
        let mut raw = random_grid(rng, size, size, res, Pose2D::new(-half, -half, 0.0));
        // the frame origin is where the robot stood, so it is Free
        let c = raw.world_to_cell(Point2::new(0.0, 0.0)).unwrap();
        raw.set_label(c, CellLabel::Free);
        let pose = Pose2D::new(
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        graph.add_finished_submap(raw, pose, &params).unwrap();
    }
    graph
}
