//! Posed submaps, their bounding-box index, stabbing queries and global-map fusion.
//!
//! Every submap keeps its raster and its local frontier cells in its own frame;
//! only its pose (`current_pose`) places it in the world. Re-anchoring a
//! submap after optimization is therefore just a pose change: nothing stored
//! in the submap is rewritten.
//!
//! A local frontier cell is *global* when, in every other finished submap
//! whose bounding box overlaps the queried one, the cell center lands
//! outside the raster, on an Unknown cell, or on one of that submap's own
//! local frontier cells. Any other landing (Free interior, Occupied) means
//! the other submap has seen past the frontier and it is dropped.

mod snapshot;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use snapshot::{load_snapshot, save_snapshot, SnapshotManifest, SubmapRecord};

use crate::error::{Error, Result};
use crate::frontier::{detect_local_frontiers, find_seed, LocalFrontierSet};
use crate::grid::{
    inflate, Cell, CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D, PoseDelta,
    DEFAULT_INFLATION_RADIUS,
};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SubmapId(pub u32);

impl fmt::Display for SubmapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl SubmapId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// World-frame axis-aligned box. Overlap tests use closed intervals, so
/// boxes that merely touch intersect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn from_points(points: &[Point2]) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: Point2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }
}

/// How the frontier search picks its start cell when a submap is finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedPolicy {
    /// The cell under the submap frame origin, which is where the first scan
    /// was taken.
    FrameOrigin,
    Cell(Cell),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinishParams {
    pub inflation_radius: u32,
    pub connectivity: Connectivity,
    pub seed: SeedPolicy,
}

impl Default for FinishParams {
    fn default() -> Self {
        Self {
            inflation_radius: DEFAULT_INFLATION_RADIUS,
            connectivity: Connectivity::Eight,
            seed: SeedPolicy::FrameOrigin,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Submap {
    id: SubmapId,
    raw: OccupancyGrid,
    inflated: OccupancyGrid,
    current_pose: Pose2D,
    previous_pose: Pose2D,
    cumulative_deviation: PoseDelta,
    local_frontiers: Option<LocalFrontierSet>,
    frontier_mask: Vec<bool>,
    finish_order: Option<u64>,
}

impl Submap {
    pub fn id(&self) -> SubmapId {
        self.id
    }

    pub fn raw(&self) -> &OccupancyGrid {
        &self.raw
    }

    pub fn inflated(&self) -> &OccupancyGrid {
        &self.inflated
    }

    pub fn current_pose(&self) -> Pose2D {
        self.current_pose
    }

    pub fn previous_pose(&self) -> Pose2D {
        self.previous_pose
    }

    pub fn cumulative_deviation(&self) -> PoseDelta {
        self.cumulative_deviation
    }

    pub fn set_cumulative_deviation(&mut self, cd: PoseDelta) {
        self.cumulative_deviation = cd;
    }

    pub fn is_finished(&self) -> bool {
        self.finish_order.is_some()
    }

    pub fn finish_order(&self) -> Option<u64> {
        self.finish_order
    }

    pub fn local_frontiers(&self) -> Option<&LocalFrontierSet> {
        self.local_frontiers.as_ref()
    }

    /// Number of local frontier points (zero while unfinished).
    pub fn frontier_count(&self) -> usize {
        self.local_frontiers
            .as_ref()
            .map_or(0, LocalFrontierSet::len)
    }

    #[inline]
    pub fn is_local_frontier(&self, cell: Cell) -> bool {
        !self.frontier_mask.is_empty() && self.frontier_mask[self.raw.index(cell)]
    }

    /// World position of a cell center under the current pose.
    pub fn cell_to_world(&self, cell: Cell) -> Point2 {
        self.current_pose
            .transform_point(self.raw.cell_to_world_center(cell))
    }

    /// Signed raster coordinates of a world point under the current pose.
    #[inline]
    pub fn world_to_raster(&self, p: Point2) -> (i64, i64) {
        self.raw
            .world_to_raster(self.current_pose.inverse_transform_point(p))
    }

    /// Tight world box of the four raster corners under the current pose.
    pub fn bounding_box(&self) -> Aabb {
        bounding_box_at(&self.raw, &self.current_pose)
    }

    fn install_frontiers(&mut self, frontiers: LocalFrontierSet) {
        let mut mask = vec![false; self.raw.len()];
        for &c in frontiers.points() {
            mask[self.raw.index(c)] = true;
        }
        self.frontier_mask = mask;
        self.local_frontiers = Some(frontiers);
    }
}

/// World-frame AABB of `grid` when its parent frame sits at `pose`.
pub fn bounding_box_at(grid: &OccupancyGrid, pose: &Pose2D) -> Aabb {
    let corners = grid.corners().map(|c| pose.transform_point(c));
    Aabb::from_points(&corners)
}

/// Selects which raster of each submap a fusion reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Raw,
    Inflated,
}

#[derive(Debug, Clone, Default)]
pub struct SubmapGraph {
    submaps: Vec<Submap>,
    boxes: Vec<Aabb>,
    previous_boxes: Vec<Aabb>,
    global: BTreeMap<SubmapId, Vec<Cell>>,
    next_finish: u64,
}

impl SubmapGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.submaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.submaps.is_empty()
    }

    pub fn submaps(&self) -> &[Submap] {
        &self.submaps
    }

    pub fn submap(&self, id: SubmapId) -> Result<&Submap> {
        self.submaps.get(id.index()).ok_or(Error::UnknownSubmap(id))
    }

    pub fn submap_mut(&mut self, id: SubmapId) -> Result<&mut Submap> {
        self.submaps
            .get_mut(id.index())
            .ok_or(Error::UnknownSubmap(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = SubmapId> + '_ {
        self.submaps.iter().map(|s| s.id)
    }

    pub fn finished_ids(&self) -> impl Iterator<Item = SubmapId> + '_ {
        self.submaps
            .iter()
            .filter(|s| s.is_finished())
            .map(|s| s.id)
    }

    /// Adds an unfinished submap posed at `pose`.
    pub fn add_submap(&mut self, raw: OccupancyGrid, pose: Pose2D) -> SubmapId {
        let id = SubmapId(self.submaps.len() as u32);
        let inflated = raw.clone();
        let submap = Submap {
            id,
            raw,
            inflated,
            current_pose: pose,
            previous_pose: pose,
            cumulative_deviation: PoseDelta::ZERO,
            local_frontiers: None,
            frontier_mask: Vec::new(),
            finish_order: None,
        };
        let b = submap.bounding_box();
        self.boxes.push(b);
        self.previous_boxes.push(b);
        self.submaps.push(submap);
        id
    }

    /// Marks a submap finished: inflates its raster and detects its local
    /// frontiers once. If the seed cell is not Free after inflation the
    /// nearest Free cell within twice the inflation radius is used; when
    /// there is none the submap gets an empty frontier set.
    pub fn finish_submap(&mut self, id: SubmapId, params: &FinishParams) -> Result<()> {
        let order = self.next_finish;
        let s = self.submap_mut(id)?;
        if s.is_finished() {
            return Err(Error::SubmapFinished(id));
        }
        s.inflated = inflate(&s.raw, params.inflation_radius);
        let preferred = match params.seed {
            SeedPolicy::FrameOrigin => s.raw.world_to_raster(Point2::new(0.0, 0.0)),
            SeedPolicy::Cell(c) => (c.x as i64, c.y as i64),
        };
        let cells = match find_seed(&s.inflated, preferred, 2 * params.inflation_radius) {
            Some(seed) => detect_local_frontiers(&s.inflated, seed, params.connectivity)?,
            None => Vec::new(),
        };
        s.install_frontiers(LocalFrontierSet::new(id, cells));
        s.finish_order = Some(order);
        self.next_finish += 1;
        Ok(())
    }

    pub fn add_finished_submap(
        &mut self,
        raw: OccupancyGrid,
        pose: Pose2D,
        params: &FinishParams,
    ) -> Result<SubmapId> {
        let id = self.add_submap(raw, pose);
        self.finish_submap(id, params)?;
        Ok(id)
    }

    /// Adds a finished submap whose inflated raster and frontier set are
    /// already known (snapshot restore, hand-built tests).
    pub fn restore_finished_submap(
        &mut self,
        raw: OccupancyGrid,
        inflated: OccupancyGrid,
        pose: Pose2D,
        frontiers: Vec<Cell>,
    ) -> Result<SubmapId> {
        if raw.width() != inflated.width() || raw.height() != inflated.height() {
            return Err(Error::InvalidArgument(
                "raw and inflated rasters differ in size".into(),
            ));
        }
        if let Some(c) = frontiers
            .iter()
            .find(|c| !raw.contains(c.x as i64, c.y as i64))
        {
            return Err(Error::InvalidArgument(format!(
                "frontier cell ({}, {}) outside the raster",
                c.x, c.y
            )));
        }
        let id = self.add_submap(raw, pose);
        let order = self.next_finish;
        self.next_finish += 1;
        let s = &mut self.submaps[id.index()];
        s.inflated = inflated;
        s.install_frontiers(LocalFrontierSet::new(id, frontiers));
        s.finish_order = Some(order);
        Ok(id)
    }

    pub fn bounding_box(&self, id: SubmapId) -> Result<Aabb> {
        self.boxes
            .get(id.index())
            .copied()
            .ok_or(Error::UnknownSubmap(id))
    }

    /// Box before the most recent [`apply_corrections`](Self::apply_corrections).
    pub fn previous_bounding_box(&self, id: SubmapId) -> Result<Aabb> {
        self.previous_boxes
            .get(id.index())
            .copied()
            .ok_or(Error::UnknownSubmap(id))
    }

    /// Starts an optimization round: every submap's current pose becomes its
    /// previous pose, corrected submaps take their new pose, and boxes are
    /// recomputed.
    pub fn apply_corrections(&mut self, corrected: &BTreeMap<SubmapId, Pose2D>) -> Result<()> {
        if let Some(bad) = corrected.keys().find(|id| id.index() >= self.submaps.len()) {
            return Err(Error::UnknownSubmap(*bad));
        }
        for s in &mut self.submaps {
            s.previous_pose = s.current_pose;
            if let Some(p) = corrected.get(&s.id) {
                s.current_pose = *p;
            }
        }
        self.previous_boxes = std::mem::take(&mut self.boxes);
        self.boxes = self.submaps.iter().map(Submap::bounding_box).collect();
        Ok(())
    }

    /// Sets one pose without starting a round (setup and tests).
    pub fn set_current_pose(&mut self, id: SubmapId, pose: Pose2D) -> Result<()> {
        let s = self.submap_mut(id)?;
        s.current_pose = pose;
        let b = s.bounding_box();
        self.boxes[id.index()] = b;
        Ok(())
    }

    /// Recomputes every box from the current poses.
    pub fn refresh_boxes(&mut self) {
        self.boxes = self.submaps.iter().map(Submap::bounding_box).collect();
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    /// Other submaps whose current box overlaps `id`'s, in id order.
    pub fn intersecting_submaps(&self, id: SubmapId) -> Result<Vec<SubmapId>> {
        let b = self.bounding_box(id)?;
        Ok(self.intersecting_box(&b, Some(id)))
    }

    /// Submaps whose current box overlaps `aabb`.
    pub fn intersecting_box(&self, aabb: &Aabb, exclude: Option<SubmapId>) -> Vec<SubmapId> {
        self.boxes
            .iter()
            .enumerate()
            .filter(|(i, b)| Some(SubmapId(*i as u32)) != exclude && b.intersects(aabb))
            .map(|(i, _)| SubmapId(i as u32))
            .collect()
    }

    /// Local frontier points of `id` that survive against every intersecting
    /// finished submap. Read-only; see [`stabbing_query`](Self::stabbing_query).
    pub fn evaluate_stabbing(&self, id: SubmapId) -> Result<Vec<Cell>> {
        let s = self.submap(id)?;
        let frontiers = s.local_frontiers().ok_or(Error::SubmapNotFinished(id))?;
        let others: Vec<&Submap> = self
            .intersecting_submaps(id)?
            .into_iter()
            .map(|o| &self.submaps[o.index()])
            .filter(|o| o.is_finished())
            .collect();
        Ok(frontiers
            .points()
            .iter()
            .copied()
            .filter(|&c| {
                let w = s.cell_to_world(c);
                others.iter().all(|o| survives_in(o, w))
            })
            .collect())
    }

    /// Runs the stabbing query for `id` and stores the survivors as that
    /// submap's contribution to the global frontier. Returns the survivor count.
    pub fn stabbing_query(&mut self, id: SubmapId) -> Result<usize> {
        let survivors = self.evaluate_stabbing(id)?;
        let n = survivors.len();
        self.global.insert(id, survivors);
        Ok(n)
    }

    pub fn set_global_frontiers(&mut self, id: SubmapId, cells: Vec<Cell>) {
        self.global.insert(id, cells);
    }

    /// Surviving cells recorded for `id` (empty if never queried).
    pub fn global_frontiers_of(&self, id: SubmapId) -> &[Cell] {
        self.global.get(&id).map_or(&[], Vec::as_slice)
    }

    /// Current global frontier as `(submap, cell)` pairs in sorted order.
    pub fn global_frontiers(&self) -> impl Iterator<Item = (SubmapId, Cell)> + '_ {
        self.global
            .iter()
            .flat_map(|(&id, cells)| cells.iter().map(move |&c| (id, c)))
    }

    pub fn global_frontier_count(&self) -> usize {
        self.global.values().map(Vec::len).sum()
    }

    /// World positions of the global frontier under current poses.
    pub fn global_frontier_points(&self) -> Vec<Point2> {
        self.global_frontiers()
            .map(|(id, c)| self.submaps[id.index()].cell_to_world(c))
            .collect()
    }

    /// Total local frontier points over finished submaps.
    pub fn local_frontier_total(&self) -> usize {
        self.submaps.iter().map(Submap::frontier_count).sum()
    }

    /// Union of the boxes of all finished submaps.
    pub fn finished_extent(&self) -> Option<Aabb> {
        self.submaps
            .iter()
            .filter(|s| s.is_finished())
            .map(|s| self.boxes[s.id.index()])
            .reduce(|a, b| a.union(&b))
    }

    /// Joins all finished submaps into one world-aligned grid. Each cell takes
    /// the value of the most recently finished submap that observed it
    /// (label not Unknown) at that cell's center; unobserved cells stay Unknown.
    pub fn fuse_global_map(&self, layer: Layer) -> Option<OccupancyGrid> {
        let extent = self.finished_extent()?;
        let res = self
            .submaps
            .iter()
            .find(|s| s.is_finished())?
            .raw
            .resolution();
        // lattice snapping tolerates quotient rounding such as 0.15 / 0.05
        const SNAP: f64 = 1e-9;
        let x0 = (extent.min.x / res + SNAP).floor();
        let y0 = (extent.min.y / res + SNAP).floor();
        let w = ((extent.max.x / res - SNAP).ceil() - x0).max(1.0) as usize;
        let h = ((extent.max.y / res - SNAP).ceil() - y0).max(1.0) as usize;
        let origin = Pose2D::new(x0 * res, y0 * res, 0.0);
        let mut out = OccupancyGrid::new(w, h, res, origin);
        self.fuse_into(&mut out, layer);
        Some(out)
    }

    /// Paints finished submaps onto an existing world-aligned grid using the
    /// same recency rule as [`fuse_global_map`](Self::fuse_global_map).
    pub fn fuse_into(&self, out: &mut OccupancyGrid, layer: Layer) {
        let mut order: Vec<&Submap> = self.submaps.iter().filter(|s| s.is_finished()).collect();
        order.sort_by_key(|s| s.finish_order);
        for s in order {
            paint_submap(out, s, &self.boxes[s.id.index()], layer);
        }
    }
}

/// Survival of a world point against one other submap.
#[inline]
fn survives_in(other: &Submap, w: Point2) -> bool {
    let (x, y) = other.world_to_raster(w);
    match other.inflated.checked_cell(x, y) {
        None => true,
        Some(c) => other.inflated.label(c) == CellLabel::Unknown || other.is_local_frontier(c),
    }
}

fn paint_submap(out: &mut OccupancyGrid, s: &Submap, bbox: &Aabb, layer: Layer) {
    let src = match layer {
        Layer::Raw => &s.raw,
        Layer::Inflated => &s.inflated,
    };
    let res = out.resolution();
    let origin = out.origin();
    let (ox, oy) = (origin.x, origin.y);
    let xa = (((bbox.min.x - ox) / res).floor().max(0.0)) as usize;
    let ya = (((bbox.min.y - oy) / res).floor().max(0.0)) as usize;
    let xb = ((((bbox.max.x - ox) / res).ceil()) as usize).min(out.width());
    let yb = ((((bbox.max.y - oy) / res).ceil()) as usize).min(out.height());
    // world -> source raster is affine; evaluate it per cell center
    let frame = s.current_pose.compose(&src.origin());
    let (sin, cos) = frame.theta.sin_cos();
    let sres = src.resolution();
    for y in ya..yb {
        let wy = oy + (y as f64 + 0.5) * res;
        for x in xa..xb {
            let wx = ox + (x as f64 + 0.5) * res;
            let dx = wx - frame.x;
            let dy = wy - frame.y;
            let lx = cos * dx + sin * dy;
            let ly = -sin * dx + cos * dy;
            let sx = (lx / sres).floor() as i64;
            let sy = (ly / sres).floor() as i64;
            if let Some(c) = src.checked_cell(sx, sy) {
                let p = src.probability(c);
                if p != crate::grid::UNKNOWN_PROBABILITY {
                    let i = y * out.width() + x;
                    let cell = out.cell_at_index(i);
                    // probabilities from a validated grid are always in range
                    let _ = out.set_probability(cell, p);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn grid(w: usize, h: usize, label: CellLabel) -> OccupancyGrid {
        OccupancyGrid::filled(w, h, 0.05, Pose2D::identity(), label)
    }

    #[test]
    fn bounding_box_examples() {
        let g = grid(10, 10, CellLabel::Free);
        let b = bounding_box_at(&g, &Pose2D::identity());
        assert_eq!(
            (b.min, b.max),
            (Point2::new(0.0, 0.0), Point2::new(0.5, 0.5))
        );
        let b = bounding_box_at(&g, &Pose2D::new(1.0, 2.0, 0.0));
        assert_eq!(
            (b.min, b.max),
            (Point2::new(1.0, 2.0), Point2::new(1.5, 2.5))
        );
        let b = bounding_box_at(&g, &Pose2D::new(0.0, 0.0, FRAC_PI_4));
        assert!((b.min.x + 0.3536).abs() < 1e-4);
        assert!(b.min.y.abs() < 1e-4);
        assert!((b.max.x - 0.3536).abs() < 1e-4);
        assert!((b.max.y - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn intersection_rules() {
        let mut g = SubmapGraph::new();
        let a = g.add_submap(grid(10, 10, CellLabel::Free), Pose2D::identity());
        let b = g.add_submap(grid(10, 10, CellLabel::Free), Pose2D::new(5.0, 5.0, 0.0));
        assert!(g.intersecting_submaps(a).unwrap().is_empty());
        let c = g.add_submap(grid(10, 10, CellLabel::Free), Pose2D::identity());
        assert_eq!(g.intersecting_submaps(a).unwrap(), vec![c]);
        assert_eq!(g.intersecting_submaps(c).unwrap(), vec![a]);
        // shares exactly the corner (0.5, 0.5) with a and c
        let d = g.add_submap(grid(10, 10, CellLabel::Free), Pose2D::new(0.5, 0.5, 0.0));
        assert_eq!(g.intersecting_submaps(d).unwrap(), vec![a, c]);
        assert!(g.intersecting_submaps(a).unwrap().contains(&d));
        assert!(matches!(
            g.intersecting_submaps(SubmapId(99)),
            Err(Error::UnknownSubmap(_))
        ));
        let _ = b;
    }

    fn half_known(w: usize, h: usize, known_cols: usize) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(w, h, 0.05, Pose2D::identity());
        for c in g.clone().iter_cells() {
            if (c.x as usize) < known_cols {
                g.set_label(c, CellLabel::Free);
            }
        }
        g
    }

    fn params() -> FinishParams {
        FinishParams {
            inflation_radius: 0,
            connectivity: Connectivity::Eight,
            seed: SeedPolicy::Cell(Cell::new(0, 0)),
        }
    }

    #[test]
    fn single_submap_keeps_all_frontiers() {
        let mut g = SubmapGraph::new();
        let id = g
            .add_finished_submap(half_known(20, 20, 10), Pose2D::identity(), &params())
            .unwrap();
        let n = g.submap(id).unwrap().frontier_count();
        assert_eq!(n, 20);
        assert_eq!(g.stabbing_query(id).unwrap(), 20);
        assert_eq!(g.global_frontier_count(), 20);
    }

    #[test]
    fn occluded_frontier_is_dropped() {
        let mut g = SubmapGraph::new();
        let a = g
            .add_finished_submap(half_known(20, 20, 10), Pose2D::identity(), &params())
            .unwrap();
        // submap 2 sees a wall exactly where submap 1's frontier column lies
        let mut wall = grid(20, 20, CellLabel::Free);
        for y in 0..20 {
            wall.set_label(Cell::new(9, y), CellLabel::Occupied);
        }
        let b = g
            .add_finished_submap(wall, Pose2D::identity(), &params())
            .unwrap();
        assert_eq!(g.stabbing_query(a).unwrap(), 0);
        assert!(g.submap(b).unwrap().local_frontiers().unwrap().is_empty());
    }

    #[test]
    fn frontier_over_unknown_survives() {
        let mut g = SubmapGraph::new();
        let a = g
            .add_finished_submap(half_known(20, 20, 10), Pose2D::identity(), &params())
            .unwrap();
        // second submap, fully unknown except one free corner for its seed
        let mut other = OccupancyGrid::new(20, 20, 0.05, Pose2D::identity());
        other.set_label(Cell::new(0, 0), CellLabel::Free);
        g.add_finished_submap(other, Pose2D::new(0.0, 0.0, 0.0), &params())
            .unwrap();
        assert_eq!(g.stabbing_query(a).unwrap(), 20);
    }

    #[test]
    fn frontier_matching_other_frontier_survives() {
        let mut g = SubmapGraph::new();
        let a = g
            .add_finished_submap(half_known(20, 20, 10), Pose2D::identity(), &params())
            .unwrap();
        let b = g
            .add_finished_submap(half_known(20, 20, 10), Pose2D::identity(), &params())
            .unwrap();
        assert_eq!(g.stabbing_query(a).unwrap(), 20);
        assert_eq!(g.stabbing_query(b).unwrap(), 20);
    }

    #[test]
    fn unfinished_submap_cannot_be_queried() {
        let mut g = SubmapGraph::new();
        let id = g.add_submap(half_known(5, 5, 2), Pose2D::identity());
        assert!(matches!(
            g.stabbing_query(id),
            Err(Error::SubmapNotFinished(_))
        ));
        g.finish_submap(id, &params()).unwrap();
        assert!(matches!(
            g.finish_submap(id, &params()),
            Err(Error::SubmapFinished(_))
        ));
    }

    #[test]
    fn refresh_without_pose_change_is_noop() {
        let mut g = SubmapGraph::new();
        g.add_submap(grid(7, 9, CellLabel::Free), Pose2D::new(0.3, -1.0, 0.7));
        g.add_submap(grid(3, 4, CellLabel::Free), Pose2D::new(2.0, 1.0, -2.0));
        let before = g.boxes().to_vec();
        g.refresh_boxes();
        assert_eq!(g.boxes(), &before[..]);
        g.apply_corrections(&BTreeMap::new()).unwrap();
        assert_eq!(g.boxes(), &before[..]);
    }

    #[test]
    fn apply_corrections_shifts_previous_pose() {
        let mut g = SubmapGraph::new();
        let a = g.add_submap(grid(4, 4, CellLabel::Free), Pose2D::identity());
        let moved = Pose2D::new(0.1, 0.0, 0.0);
        g.apply_corrections(&BTreeMap::from([(a, moved)])).unwrap();
        let s = g.submap(a).unwrap();
        assert_eq!(s.previous_pose(), Pose2D::identity());
        assert_eq!(s.current_pose(), moved);
        assert!(g
            .apply_corrections(&BTreeMap::from([(SubmapId(5), moved)]))
            .is_err());
    }

    #[test]
    fn fusion_single_submap_matches_raster() {
        let mut g = SubmapGraph::new();
        let raw = OccupancyGrid::from_ascii(&["#..", "?.#"], 0.05, Pose2D::identity()).unwrap();
        g.add_finished_submap(raw.clone(), Pose2D::identity(), &params())
            .unwrap();
        let fused = g.fuse_global_map(Layer::Raw).unwrap();
        assert_eq!(fused.width(), 3);
        assert_eq!(fused.height(), 2);
        for c in raw.iter_cells() {
            assert_eq!(fused.label(c), raw.label(c));
        }
    }

    #[test]
    fn fusion_disjoint_submaps_leave_gap_unknown() {
        let mut g = SubmapGraph::new();
        g.add_finished_submap(grid(4, 4, CellLabel::Free), Pose2D::identity(), &params())
            .unwrap();
        g.add_finished_submap(
            grid(4, 4, CellLabel::Free),
            Pose2D::new(0.4, 0.0, 0.0),
            &params(),
        )
        .unwrap();
        let fused = g.fuse_global_map(Layer::Raw).unwrap();
        assert_eq!(fused.width(), 12);
        assert_eq!(fused.label(Cell::new(2, 1)), CellLabel::Free);
        assert_eq!(fused.label(Cell::new(5, 1)), CellLabel::Unknown);
        assert_eq!(fused.label(Cell::new(9, 1)), CellLabel::Free);
    }

    #[test]
    fn fusion_latest_finished_wins() {
        let mut g = SubmapGraph::new();
        g.add_finished_submap(grid(4, 4, CellLabel::Free), Pose2D::identity(), &params())
            .unwrap();
        let mut later = OccupancyGrid::new(4, 4, 0.05, Pose2D::identity());
        later.set_label(Cell::new(1, 1), CellLabel::Occupied);
        later.set_label(Cell::new(0, 0), CellLabel::Free);
        g.add_finished_submap(later, Pose2D::identity(), &params())
            .unwrap();
        let fused = g.fuse_global_map(Layer::Raw).unwrap();
        assert_eq!(fused.label(Cell::new(1, 1)), CellLabel::Occupied);
        // later submap's Unknown does not erase the earlier observation
        assert_eq!(fused.label(Cell::new(2, 2)), CellLabel::Free);
    }
}
