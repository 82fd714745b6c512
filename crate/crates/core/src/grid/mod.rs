//! Occupancy grids, the three-way cell labeling, obstacle inflation and the
//! SE(2) transforms that place grids in a parent frame.
//!
//! A grid stores one occupancy probability per cell, row-major with row 0 at
//! the bottom (smallest local `y`). Its `origin` is the pose of the corner of
//! cell `(0, 0)` in the parent frame, so the center of cell `(x, y)` sits at
//! `origin ∘ ((x + 0.5)·res, (y + 0.5)·res)`.
//!
//! An unobserved cell holds exactly `0.5`. Anything that writes a cell moves
//! it off that value, so the Unknown test is an exact float comparison.

mod pgm;
mod pose;

use serde::{Deserialize, Serialize};

pub use pgm::{read_grid, read_pgm, write_grid, write_pgm, GridHeader};
pub use pose::{normalize_angle, Point2, Pose2D, PoseDelta};

use crate::error::{Error, Result};

/// Default map resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.05;
/// Default inflation radius in cells (robot radius plus safety margin at 5 cm cells).
pub const DEFAULT_INFLATION_RADIUS: u32 = 8;

/// Prior occupancy of an unobserved cell.
pub const UNKNOWN_PROBABILITY: f32 = 0.5;
pub const FREE_PROBABILITY: f32 = 0.0;
pub const OCCUPIED_PROBABILITY: f32 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellLabel {
    Free,
    Occupied,
    Unknown,
}

impl CellLabel {
    /// Canonical probability used when a cell is written by label.
    pub fn probability(self) -> f32 {
        match self {
            CellLabel::Free => FREE_PROBABILITY,
            CellLabel::Occupied => OCCUPIED_PROBABILITY,
            CellLabel::Unknown => UNKNOWN_PROBABILITY,
        }
    }
}

/// Labels an occupancy probability: below the prior is Free, above is
/// Occupied, exactly the prior is Unknown.
pub fn label_cell(p: f64) -> Result<CellLabel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(if p < 0.5 {
        CellLabel::Free
    } else if p > 0.5 {
        CellLabel::Occupied
    } else {
        CellLabel::Unknown
    })
}

#[inline]
fn label_of(p: f32) -> CellLabel {
    if p < UNKNOWN_PROBABILITY {
        CellLabel::Free
    } else if p > UNKNOWN_PROBABILITY {
        CellLabel::Occupied
    } else {
        CellLabel::Unknown
    }
}

/// Column/row index of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl From<[u32; 2]> for Cell {
    fn from([x, y]: [u32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [u32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

/// Neighborhood used for grid traversal and adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

const OFFSETS_4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const OFFSETS_8: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &OFFSETS_4,
            Connectivity::Eight => &OFFSETS_8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2D,
    cells: Vec<f32>,
}

impl OccupancyGrid {
    /// A grid with every cell at the Unknown prior.
    pub fn new(width: usize, height: usize, resolution: f64, origin: Pose2D) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self {
            width,
            height,
            resolution,
            origin,
            cells: vec![UNKNOWN_PROBABILITY; width * height],
        }
    }

    pub fn filled(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        label: CellLabel,
    ) -> Self {
        let mut g = Self::new(width, height, resolution, origin);
        g.cells.fill(label.probability());
        g
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        cells: Vec<f32>,
    ) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidResolution(resolution));
        }
        if cells.len() != width * height {
            return Err(Error::GridShape {
                width,
                height,
                actual: cells.len(),
            });
        }
        if let Some(&bad) = cells.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ProbabilityOutOfRange(bad as f64));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// Builds a grid from rows of label characters, top row first:
    /// `.` Free, `#` Occupied, `?` Unknown.
    pub fn from_ascii(rows: &[&str], resolution: f64, origin: Pose2D) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut g = Self::new(width, height, resolution, origin);
        for (i, row) in rows.iter().enumerate() {
            let y = height - 1 - i;
            if row.chars().count() != width {
                return Err(Error::InvalidArgument(format!("row {i} has ragged width")));
            }
            for (x, ch) in row.chars().enumerate() {
                let label = match ch {
                    '.' => CellLabel::Free,
                    '#' => CellLabel::Occupied,
                    '?' => CellLabel::Unknown,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unexpected map character {other:?}"
                        )))
                    }
                };
                g.set_label(Cell::new(x as u32, y as u32), label);
            }
        }
        Ok(g)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2D {
        self.origin
    }

    pub fn cells(&self) -> &[f32] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width + cell.x as usize
    }

    #[inline]
    pub fn cell_at_index(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as u32, (index / self.width) as u32)
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Converts signed coordinates to a cell if they fall inside the raster.
    #[inline]
    pub fn checked_cell(&self, x: i64, y: i64) -> Option<Cell> {
        self.contains(x, y).then(|| Cell::new(x as u32, y as u32))
    }

    #[inline]
    pub fn probability(&self, cell: Cell) -> f32 {
        self.cells[self.index(cell)]
    }

    #[inline]
    pub fn label(&self, cell: Cell) -> CellLabel {
        label_of(self.cells[self.index(cell)])
    }

    #[inline]
    pub fn label_at_index(&self, index: usize) -> CellLabel {
        label_of(self.cells[index])
    }

    /// Label at signed coordinates, `None` off the raster.
    #[inline]
    pub fn label_at(&self, x: i64, y: i64) -> Option<CellLabel> {
        self.checked_cell(x, y).map(|c| self.label(c))
    }

    pub fn set_probability(&mut self, cell: Cell, p: f32) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p as f64));
        }
        let i = self.index(cell);
        self.cells[i] = p;
        Ok(())
    }

    #[inline]
    pub fn set_label(&mut self, cell: Cell, label: CellLabel) {
        let i = self.index(cell);
        self.cells[i] = label.probability();
    }

    /// Number of cells that are not Unknown.
    pub fn observed_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|&&p| p != UNKNOWN_PROBABILITY)
            .count()
    }

    pub fn count_label(&self, label: CellLabel) -> usize {
        self.cells.iter().filter(|&&p| label_of(p) == label).count()
    }

    /// Center of `cell` in the grid's parent frame.
    pub fn cell_to_world_center(&self, cell: Cell) -> Point2 {
        self.origin.transform_point(Point2::new(
            (cell.x as f64 + 0.5) * self.resolution,
            (cell.y as f64 + 0.5) * self.resolution,
        ))
    }

    /// Signed raster coordinates of a parent-frame point, before bounds checking.
    pub fn world_to_raster(&self, point: Point2) -> (i64, i64) {
        let local = self.origin.inverse_transform_point(point);
        (
            (local.x / self.resolution).floor() as i64,
            (local.y / self.resolution).floor() as i64,
        )
    }

    /// The cell containing a parent-frame point, or `None` when it falls outside the raster.
    pub fn world_to_cell(&self, point: Point2) -> Option<Cell> {
        let (x, y) = self.world_to_raster(point);
        self.checked_cell(x, y)
    }

    /// Parent-frame corners of the raster rectangle.
    pub fn corners(&self) -> [Point2; 4] {
        let w = self.width as f64 * self.resolution;
        let h = self.height as f64 * self.resolution;
        [
            Point2::new(0.0, 0.0),
            Point2::new(w, 0.0),
            Point2::new(w, h),
            Point2::new(0.0, h),
        ]
        .map(|p| self.origin.transform_point(p))
    }

    /// In-bounds neighbors of `cell`.
    pub fn neighbors(
        &self,
        cell: Cell,
        connectivity: Connectivity,
    ) -> impl Iterator<Item = Cell> + '_ {
        connectivity
            .offsets()
            .iter()
            .filter_map(move |&(dx, dy)| self.checked_cell(cell.x as i64 + dx, cell.y as i64 + dy))
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as u32)
            .flat_map(move |y| (0..self.width as u32).map(move |x| Cell::new(x, y)))
    }

    /// Copies the sub-rectangle `[x0, x0+w) × [y0, y0+h)`; the origin moves so
    /// cells keep their parent-frame position.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> OccupancyGrid {
        assert!(
            x0 + w <= self.width && y0 + h <= self.height,
            "crop out of range"
        );
        let mut cells = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let start = y * self.width + x0;
            cells.extend_from_slice(&self.cells[start..start + w]);
        }
        let shift = Pose2D::new(
            x0 as f64 * self.resolution,
            y0 as f64 * self.resolution,
            0.0,
        );
        OccupancyGrid {
            width: w,
            height: h,
            resolution: self.resolution,
            origin: self.origin.compose(&shift),
            cells,
        }
    }

    /// Smallest rectangle containing every observed cell, grown by `margin`
    /// cells and clipped to the raster. `None` when nothing is observed.
    pub fn observed_bounds(&self, margin: usize) -> Option<(usize, usize, usize, usize)> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        for (i, &p) in self.cells.iter().enumerate() {
            if p != UNKNOWN_PROBABILITY {
                let (x, y) = (i % self.width, i / self.width);
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
        if x0 == usize::MAX {
            return None;
        }
        let x0 = x0.saturating_sub(margin);
        let y0 = y0.saturating_sub(margin);
        let x1 = (x1 + margin).min(self.width - 1);
        let y1 = (y1 + margin).min(self.height - 1);
        Some((x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }
}

/// Grows obstacles by a Euclidean disc: every cell whose center lies within
/// `radius` cells of an Occupied cell center becomes Occupied (probability 1).
/// Cells outside every disc keep their value, including Unknown ones.
pub fn inflate(grid: &OccupancyGrid, radius: u32) -> OccupancyGrid {
    let (w, h) = (grid.width, grid.height);
    let mut out = grid.clone();
    if w == 0 || h == 0 {
        return out;
    }
    let r = radius as i64;
    let cap = radius + 1;
    // Per row, distance to the nearest Occupied cell in that same row.
    let mut row_dist = vec![cap; w * h];
    for y in 0..h {
        let row = &grid.cells[y * w..(y + 1) * w];
        let dist = &mut row_dist[y * w..(y + 1) * w];
        let mut last: Option<usize> = None;
        for x in 0..w {
            if label_of(row[x]) == CellLabel::Occupied {
                last = Some(x);
            }
            if let Some(l) = last {
                dist[x] = dist[x].min(((x - l) as u32).min(cap));
            }
        }
        last = None;
        for x in (0..w).rev() {
            if label_of(row[x]) == CellLabel::Occupied {
                last = Some(x);
            }
            if let Some(l) = last {
                dist[x] = dist[x].min(((l - x) as u32).min(cap));
            }
        }
    }
    let r2 = r * r;
    for y in 0..h as i64 {
        for x in 0..w {
            let hit = (-r..=r).any(|dy| {
                let yy = y + dy;
                if yy < 0 || yy >= h as i64 {
                    return false;
                }
                let d = row_dist[yy as usize * w + x] as i64;
                d <= r && d * d + dy * dy <= r2
            });
            if hit {
                out.cells[y as usize * w + x] = OCCUPIED_PROBABILITY;
            }
        }
    }
    out
}

/// Applies `pose` to a point (rotation, then translation).
pub fn transform_point(pose: &Pose2D, local: Point2) -> Point2 {
    pose.transform_point(local)
}

/// The cell of `grid` containing a point of its parent frame.
pub fn world_to_cell(grid: &OccupancyGrid, point: Point2) -> Option<Cell> {
    grid.world_to_cell(point)
}
