//! Turning dense global frontiers into a few reachable navigation points.
//!
//! Mean-shift groups nearby frontier points, but it knows nothing about
//! walls: two frontier runs on opposite sides of a thin obstacle can end up
//! in one cluster whose mode sits inside the obstacle. Each cluster is
//! therefore split into connected components over non-Occupied cells of the
//! fused map (Unknown counts as passable), and each component is represented
//! by its member closest to the robot rather than by a centroid.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanShiftConfig {
    pub bandwidth: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        Self {
            bandwidth: 1.0,
            tolerance: 1e-4,
            max_iterations: 100,
        }
    }
}

/// A mean-shift cluster before connectivity refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    pub mode: Point2,
    pub members: Vec<Point2>,
}

struct SpatialHash<'a> {
    cell: f64,
    points: &'a [Point2],
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> SpatialHash<'a> {
    fn new(points: &'a [Point2], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets
                .entry(((p.x / cell).floor() as i64, (p.y / cell).floor() as i64))
                .or_default()
                .push(i);
        }
        Self {
            cell,
            points,
            buckets,
        }
    }

    /// Mean of all points within `radius` (≤ bucket size) of `q`.
    fn disc_mean(&self, q: Point2, radius: f64) -> Option<Point2> {
        let (bx, by) = (
            (q.x / self.cell).floor() as i64,
            (q.y / self.cell).floor() as i64,
        );
        let r2 = radius * radius;
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(ids) = self.buckets.get(&(bx + dx, by + dy)) {
                    for &i in ids {
                        let p = self.points[i];
                        if p.distance_squared(&q) <= r2 {
                            sx += p.x;
                            sy += p.y;
                            n += 1;
                        }
                    }
                }
            }
        }
        (n > 0).then(|| Point2::new(sx / n as f64, sy / n as f64))
    }
}

/// Flat-kernel mean-shift. Every point climbs to a mode; modes closer than
/// half the bandwidth are merged (first one wins), and each input point is
/// assigned to the mode nearest to it.
pub fn mean_shift(points: &[Point2], cfg: &MeanShiftConfig) -> Result<Vec<FrontierCluster>> {
    if !(cfg.bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mean-shift bandwidth must be positive, got {}",
            cfg.bandwidth
        )));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let index = SpatialHash::new(points, cfg.bandwidth);
    let mut modes: Vec<Point2> = Vec::new();
    let merge2 = (cfg.bandwidth / 2.0).powi(2);
    for &start in points {
        let mut m = start;
        for _ in 0..cfg.max_iterations {
            let Some(next) = index.disc_mean(m, cfg.bandwidth) else {
                break;
            };
            let shift = next.distance(&m);
            m = next;
            if shift < cfg.tolerance {
                break;
            }
        }
        if !modes.iter().any(|k| k.distance_squared(&m) < merge2) {
            modes.push(m);
        }
    }
    let mut members: Vec<Vec<Point2>> = vec![Vec::new(); modes.len()];
    for &p in points {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, mode) in modes.iter().enumerate() {
            let d = mode.distance_squared(&p);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        members[best].push(p);
    }
    Ok(modes
        .into_iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(mode, members)| FrontierCluster { mode, members })
        .collect())
}

/// Connected-component labels of the non-Occupied cells of a map.
#[derive(Debug, Clone)]
pub struct ConnectivityLabels {
    labels: Vec<u32>,
}

const NO_LABEL: u32 = u32::MAX;

impl ConnectivityLabels {
    pub fn compute(map: &OccupancyGrid, connectivity: Connectivity) -> Self {
        let mut labels = vec![NO_LABEL; map.len()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..map.len() {
            if labels[start] != NO_LABEL || map.label_at_index(start) == CellLabel::Occupied {
                continue;
            }
            labels[start] = next;
            queue.push_back(map.cell_at_index(start));
            while let Some(c) = queue.pop_front() {
                for n in map.neighbors(c, connectivity) {
                    let i = map.index(n);
                    if labels[i] == NO_LABEL && map.label_at_index(i) != CellLabel::Occupied {
                        labels[i] = next;
                        queue.push_back(n);
                    }
                }
            }
            next += 1;
        }
        Self { labels }
    }

    /// Component of the cell under `p`, `None` for Occupied cells.
    pub fn label_of(&self, map: &OccupancyGrid, p: Point2) -> Result<Option<u32>> {
        let cell = map
            .world_to_cell(p)
            .ok_or(Error::OffGrid { x: p.x, y: p.y })?;
        let l = self.labels[map.index(cell)];
        Ok((l != NO_LABEL).then_some(l))
    }

    /// Splits `members` by component. Points on Occupied cells become
    /// singleton components. Components appear in order of first member.
    pub fn split(&self, map: &OccupancyGrid, members: &[Point2]) -> Result<Vec<Vec<Point2>>> {
        let mut out: Vec<Vec<Point2>> = Vec::new();
        let mut slot: HashMap<u32, usize> = HashMap::new();
        for &p in members {
            match self.label_of(map, p)? {
                Some(l) => {
                    let k = *slot.entry(l).or_insert_with(|| {
                        out.push(Vec::new());
                        out.len() - 1
                    });
                    out[k].push(p);
                }
                None => out.push(vec![p]),
            }
        }
        Ok(out)
    }
}

/// Partitions a cluster's members into 8-connected components over
/// non-Occupied cells of `fused`.
pub fn refine_by_connectivity(
    members: &[Point2],
    fused: &OccupancyGrid,
) -> Result<Vec<Vec<Point2>>> {
    ConnectivityLabels::compute(fused, Connectivity::Eight).split(fused, members)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavigationPoint {
    pub point: Point2,
    /// Index of the source component in the round's component list.
    pub component: usize,
    pub component_size: usize,
    pub score: f64,
}

/// The component member closest to the robot; ties go to the
/// lexicographically smaller `(x, y)`.
pub fn select_navigation_point(
    component: &[Point2],
    component_index: usize,
    robot: &Pose2D,
) -> Result<NavigationPoint> {
    let r = robot.translation();
    let best = component
        .iter()
        .copied()
        .min_by(|a, b| {
            a.distance_squared(&r)
                .total_cmp(&b.distance_squared(&r))
                .then(a.x.total_cmp(&b.x))
                .then(a.y.total_cmp(&b.y))
        })
        .ok_or_else(|| Error::InvalidArgument("empty frontier component".into()))?;
    Ok(NavigationPoint {
        point: best,
        component: component_index,
        component_size: component.len(),
        score: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorityConfig {
    /// Weight of the unknown fraction against distance in meters.
    pub lambda: f64,
    /// Half-width of the square window for the unknown fraction, meters.
    pub window: f64,
}

impl Default for PriorityConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            window: 2.0,
        }
    }
}

/// Fraction of Unknown cells in the square window around `p`. Cells off the
/// map count as Unknown since nothing has observed them.
pub fn unknown_fraction(map: &OccupancyGrid, p: Point2, window: f64) -> f64 {
    let half = (window / map.resolution()).round() as i64;
    let (cx, cy) = map.world_to_raster(p);
    let mut unknown = 0usize;
    let mut total = 0usize;
    for y in cy - half..=cy + half {
        for x in cx - half..=cx + half {
            total += 1;
            if map.label_at(x, y).is_none_or(|l| l == CellLabel::Unknown) {
                unknown += 1;
            }
        }
    }
    unknown as f64 / total as f64
}

/// Scores each point as `lambda · unknown_fraction − distance` and sorts by
/// descending score (stable).
pub fn prioritize(
    mut points: Vec<NavigationPoint>,
    robot: &Pose2D,
    fused: &OccupancyGrid,
    cfg: &PriorityConfig,
) -> Result<Vec<NavigationPoint>> {
    if !(cfg.window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "priority window must be positive, got {}",
            cfg.window
        )));
    }
    let r = robot.translation();
    for np in &mut points {
        let u = unknown_fraction(fused, np.point, cfg.window);
        np.score = cfg.lambda * u - np.point.distance(&r);
    }
    points.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(points)
}

#[derive(Serialize)]
struct NavRow {
    x: f64,
    y: f64,
    score: f64,
    component_size: usize,
}

pub fn write_navigation_csv<W: Write>(out: W, points: &[NavigationPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(NavRow {
            x: p.point.x,
            y: p.point.y,
            score: p.score,
            component_size: p.component_size,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg(bandwidth: f64) -> MeanShiftConfig {
        MeanShiftConfig {
            bandwidth,
            ..Default::default()
        }
    }

    #[test]
    fn empty_and_single_inputs() {
        assert!(mean_shift(&[], &cfg(1.0)).unwrap().is_empty());
        let c = mean_shift(&[Point2::new(1.0, 2.0)], &cfg(1.0)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members, vec![Point2::new(1.0, 2.0)]);
        assert!(mean_shift(&[Point2::new(0.0, 0.0)], &cfg(0.0)).is_err());
    }

    #[test]
    fn distant_points_stay_apart() {
        let c = mean_shift(&[Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)], &cfg(1.0)).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn two_blobs_separate_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut pts = Vec::new();
        for i in 0..20 {
            let cx = if i % 2 == 0 { 0.0 } else { 3.0 };
            pts.push(Point2::new(
                cx + noise.sample(&mut rng),
                noise.sample(&mut rng),
            ));
        }
        let clusters = mean_shift(&pts, &cfg(0.5)).unwrap();
        assert_eq!(clusters.len(), 2);
        // brute-force: each point belongs with the blob center it was drawn around
        for c in &clusters {
            let left = c.members[0].x < 1.5;
            assert_eq!(c.members.len(), 10);
            assert!(c.members.iter().all(|p| (p.x < 1.5) == left));
        }
        let _ = rng.random::<u8>();
    }

    fn walled_map() -> OccupancyGrid {
        // unknown top, free bottom, wall splitting left and right everywhere
        let mut rows = Vec::new();
        for y in (0..10).rev() {
            let row: String = (0..10)
                .map(|x| {
                    if x == 5 {
                        '#'
                    } else if y >= 5 {
                        '?'
                    } else {
                        '.'
                    }
                })
                .collect();
            rows.push(row);
        }
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        OccupancyGrid::from_ascii(&rows, 0.1, Pose2D::identity()).unwrap()
    }

    #[test]
    fn wall_splits_cluster() {
        let map = walled_map();
        let members: Vec<Point2> = [1u32, 3, 7, 9]
            .iter()
            .map(|&x| map.cell_to_world_center(Cell::new(x, 4)))
            .collect();
        let comps = refine_by_connectivity(&members, &map).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 2);
        assert_eq!(comps.iter().map(Vec::len).sum::<usize>(), 4);
    }

    #[test]
    fn unknown_does_not_split() {
        let map =
            OccupancyGrid::from_ascii(&["..??..", "..??.."], 0.1, Pose2D::identity()).unwrap();
        let members = vec![
            map.cell_to_world_center(Cell::new(0, 0)),
            map.cell_to_world_center(Cell::new(5, 1)),
        ];
        assert_eq!(refine_by_connectivity(&members, &map).unwrap().len(), 1);
    }

    #[test]
    fn off_grid_member_is_an_error() {
        let map = walled_map();
        assert!(matches!(
            refine_by_connectivity(&[Point2::new(-5.0, 0.0)], &map),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn closest_member_wins() {
        let robot = Pose2D::identity();
        let comp = [
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 3.5),
            Point2::new(-1.2, 0.0),
        ];
        let np = select_navigation_point(&comp, 0, &robot).unwrap();
        assert_eq!(np.point, Point2::new(-1.2, 0.0));
        let single = select_navigation_point(&comp[..1], 0, &robot).unwrap();
        assert_eq!(single.point, comp[0]);
        assert!(select_navigation_point(&[], 0, &robot).is_err());
    }

    #[test]
    fn equidistant_tie_is_lexicographic() {
        let robot = Pose2D::identity();
        let comp = [
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.0, -1.0),
        ];
        let np = select_navigation_point(&comp, 0, &robot).unwrap();
        assert_eq!(np.point, Point2::new(0.0, -1.0));
    }

    fn nav(x: f64, y: f64) -> NavigationPoint {
        NavigationPoint {
            point: Point2::new(x, y),
            component: 0,
            component_size: 1,
            score: 0.0,
        }
    }

    #[test]
    fn nearer_point_first_when_unknown_equal() {
        let map = OccupancyGrid::filled(
            200,
            200,
            0.05,
            Pose2D::new(-5.0, -5.0, 0.0),
            CellLabel::Free,
        );
        let out = prioritize(
            vec![nav(4.0, 0.0), nav(1.0, 0.0)],
            &Pose2D::identity(),
            &map,
            &PriorityConfig {
                lambda: 10.0,
                window: 0.5,
            },
        )
        .unwrap();
        assert_eq!(out[0].point.x, 1.0);
        assert_eq!(out[1].score, -4.0);
    }

    #[test]
    fn informative_far_point_beats_near_one() {
        // window of one cell: 0.8 vs 0.1 unknown cannot be built from a single
        // cell, so use a 10x10-cell window on a hand-painted map
        let res = 0.1;
        let mut map =
            OccupancyGrid::filled(200, 60, res, Pose2D::new(0.0, -3.0, 0.0), CellLabel::Free);
        let paint = |map: &mut OccupancyGrid, cx: f64, fraction: f64| {
            // the 11x11 window around (cx, 0): mark the first k cells unknown
            let (x0, y0) = map.world_to_raster(Point2::new(cx, 0.0));
            let k = (fraction * 121.0).round() as usize;
            let mut n = 0;
            for y in y0 - 5..=y0 + 5 {
                for x in x0 - 5..=x0 + 5 {
                    if n < k {
                        map.set_label(Cell::new(x as u32, y as u32), CellLabel::Unknown);
                        n += 1;
                    }
                }
            }
        };
        paint(&mut map, 6.05, 0.8);
        paint(&mut map, 1.05, 0.1);
        let cfgp = PriorityConfig {
            lambda: 10.0,
            window: 0.5,
        };
        let u_far = unknown_fraction(&map, Point2::new(6.05, 0.05), 0.5);
        let u_near = unknown_fraction(&map, Point2::new(1.05, 0.05), 0.5);
        let robot = Pose2D::new(0.05, 0.05, 0.0);
        let out = prioritize(vec![nav(1.05, 0.05), nav(6.05, 0.05)], &robot, &map, &cfgp).unwrap();
        assert_eq!(out[0].point.x, 6.05);
        assert!((out[0].score - (10.0 * u_far - 6.0)).abs() < 1e-9);
        assert!((out[1].score - (10.0 * u_near - 1.0)).abs() < 1e-9);
        assert!((u_far - 97.0 / 121.0).abs() < 1e-12);
    }

    #[test]
    fn score_formula_worked_values() {
        let lambda = PriorityConfig::default().lambda;
        assert_eq!(lambda * 0.8 - 6.0, 2.0);
        assert!((lambda * 0.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prioritize_is_a_permutation() {
        let map = OccupancyGrid::new(50, 50, 0.1, Pose2D::identity());
        let input: Vec<_> = (0..7).map(|i| nav(i as f64 * 0.3, 1.0)).collect();
        let out = prioritize(
            input.clone(),
            &Pose2D::identity(),
            &map,
            &PriorityConfig::default(),
        )
        .unwrap();
        let mut a: Vec<_> = input.iter().map(|n| n.point.x.to_bits()).collect();
        let mut b: Vec<_> = out.iter().map(|n| n.point.x.to_bits()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(prioritize(
            input,
            &Pose2D::identity(),
            &map,
            &PriorityConfig {
                lambda: 1.0,
                window: 0.0
            }
        )
        .is_err());
    }
}
