use image::{Rgb, RgbImage};

use super::Replayer;
use crate::error::{Error, Result};
use crate::grid::{CellLabel, OccupancyGrid, Point2};
use crate::sim::ExplorationLog;
use crate::submap_graph::{Layer, SubmapGraph};

const FREE: Rgb<u8> = Rgb([255, 255, 255]);
const OCCUPIED: Rgb<u8> = Rgb([0, 0, 0]);
const UNKNOWN: Rgb<u8> = Rgb([190, 190, 190]);
const FRONTIER: Rgb<u8> = Rgb([230, 0, 0]);
const MARKER: Rgb<u8> = Rgb([0, 60, 255]);
const TRAJECTORY: Rgb<u8> = Rgb([40, 110, 255]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Pixels per map cell.
    pub scale: u32,
    /// Tint the cells of submaps queried in the rendered round.
    pub tint_queried: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            scale: 2,
            tint_queried: true,
        }
    }
}

struct Canvas<'a> {
    img: RgbImage,
    map: &'a OccupancyGrid,
    scale: u32,
}

impl Canvas<'_> {
    /// Top-left pixel of the cell under `p`; the y axis points up in the map.
    fn pixel(&self, p: Point2) -> Option<(i64, i64)> {
        let c = self.map.world_to_cell(p)?;
        let s = self.scale as i64;
        Some((
            c.x as i64 * s,
            (self.map.height() as i64 - 1 - c.y as i64) * s,
        ))
    }

    fn put(&mut self, x: i64, y: i64, color: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, color);
        }
    }

    fn fill_cell(&mut self, p: Point2, color: Rgb<u8>) {
        if let Some((x, y)) = self.pixel(p) {
            for dy in 0..self.scale as i64 {
                for dx in 0..self.scale as i64 {
                    self.put(x + dx, y + dy, color);
                }
            }
        }
    }

    fn marker(&mut self, p: Point2, color: Rgb<u8>) {
        if let Some((x, y)) = self.pixel(p) {
            let c = self.scale as i64 / 2;
            for dy in -3..=3 {
                for dx in -3..=3 {
                    self.put(x + c + dx, y + c + dy, color);
                }
            }
        }
    }

    fn line(&mut self, a: Point2, b: Point2, color: Rgb<u8>) {
        let (Some(pa), Some(pb)) = (self.pixel(a), self.pixel(b)) else {
            return;
        };
        let c = self.scale as i64 / 2;
        let steps = (pb.0 - pa.0).abs().max((pb.1 - pa.1).abs()).max(1);
        for i in 0..=steps {
            let x = pa.0 + (pb.0 - pa.0) * i / steps;
            let y = pa.1 + (pb.1 - pa.1) * i / steps;
            self.put(x + c, y + c, color);
        }
    }
}

fn tint(base: Rgb<u8>) -> Rgb<u8> {
    let [r, g, b] = base.0;
    Rgb([
        (r as u16 / 2 + 127) as u8,
        (g as u16 * 2 / 5) as u8,
        (b as u16 * 2 / 5) as u8,
    ])
}

/// Draws the fused map as it stood at `round`: queried submaps tinted red,
/// global frontier points red, navigation points and the trajectory so far
/// in blue.
pub fn render_round(
    log: &ExplorationLog,
    source: &SubmapGraph,
    round: usize,
    opts: &RenderOptions,
) -> Result<RgbImage> {
    if round >= log.rounds.len() {
        return Err(Error::InvalidArgument(format!(
            "round {round} out of range; the log has {} rounds",
            log.rounds.len()
        )));
    }
    let mut replay = Replayer::new(log, source);
    for _ in 0..round {
        replay.advance()?;
    }
    let (rec, graph) = replay.advance()?.expect("round checked above");
    let graph: &SubmapGraph = graph;
    let map = graph
        .fuse_global_map(Layer::Raw)
        .expect("round inserts a submap");
    let scale = opts.scale.max(1);
    let mut cv = Canvas {
        img: RgbImage::new(map.width() as u32 * scale, map.height() as u32 * scale),
        map: &map,
        scale,
    };

    let mut colors: Vec<Rgb<u8>> = map
        .cells()
        .iter()
        .enumerate()
        .map(|(i, _)| match map.label_at_index(i) {
            CellLabel::Free => FREE,
            CellLabel::Occupied => OCCUPIED,
            CellLabel::Unknown => UNKNOWN,
        })
        .collect();
    if opts.tint_queried {
        let mut tinted = vec![false; map.len()];
        for &id in &rec.report.queried_submaps {
            let s = graph.submap(id)?;
            for cell in s.raw().iter_cells() {
                if s.raw().label(cell) == CellLabel::Unknown {
                    continue;
                }
                if let Some(c) = map.world_to_cell(s.cell_to_world(cell)) {
                    let i = map.index(c);
                    if !tinted[i] {
                        tinted[i] = true;
                        colors[i] = tint(colors[i]);
                    }
                }
            }
        }
    }
    for (i, &color) in colors.iter().enumerate() {
        let p = map.cell_to_world_center(map.cell_at_index(i));
        cv.fill_cell(p, color);
    }
    for (&id, cells) in &rec.global_frontiers {
        let s = graph.submap(id)?;
        for &c in cells {
            cv.fill_cell(s.cell_to_world(c), FRONTIER);
        }
    }
    let trajectory: Vec<Point2> = log.rounds[..=round]
        .iter()
        .flat_map(|r| r.trajectory.iter().copied())
        .collect();
    for w in trajectory.windows(2) {
        cv.line(w[0], w[1], TRAJECTORY);
    }
    for np in &rec.navigation_points {
        cv.marker(np.point, MARKER);
    }
    Ok(cv.img)
}
