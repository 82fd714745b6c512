//! Binary PGM (P5) serialization with a one-line JSON sidecar.
//!
//! Pixel values: 0 Occupied, 255 Free, 128 Unknown. Any other value is
//! rejected on load. Rows are written top row first (largest `y`), which is
//! how image viewers expect a map to look.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CellLabel, OccupancyGrid, Pose2D};
use crate::error::{Error, Result};

const PIXEL_OCCUPIED: u8 = 0;
const PIXEL_FREE: u8 = 255;
const PIXEL_UNKNOWN: u8 = 128;

/// Sidecar metadata stored next to a grid PGM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub resolution: f64,
    pub origin: Pose2D,
}

fn pixel(label: CellLabel) -> u8 {
    match label {
        CellLabel::Free => PIXEL_FREE,
        CellLabel::Occupied => PIXEL_OCCUPIED,
        CellLabel::Unknown => PIXEL_UNKNOWN,
    }
}

pub fn write_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let (w, h) = (grid.width(), grid.height());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for y in (0..h).rev() {
        for x in 0..w {
            out.push(pixel(grid.label_at_index(y * w + x)));
        }
    }
    out
}

/// Parsed P5 raster: width, height and the raw pixel bytes, top row first.
pub(crate) struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub(crate) fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidPgm("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(Error::InvalidPgm(format!(
            "expected magic P5, found {magic:?}"
        )));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse()
            .map_err(|_| Error::InvalidPgm(format!("bad {what} {t:?}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(Error::InvalidPgm(format!(
            "maxval must be 255, found {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    let data_start = pos + 1;
    let expected = width * height;
    if bytes.len() < data_start || bytes.len() - data_start != expected {
        return Err(Error::InvalidPgm(format!(
            "expected {expected} pixel bytes, found {}",
            bytes.len().saturating_sub(data_start)
        )));
    }
    Ok(PgmImage {
        width,
        height,
        pixels: bytes[data_start..].to_vec(),
    })
}

pub fn read_pgm(bytes: &[u8], header: GridHeader) -> Result<OccupancyGrid> {
    if !(header.resolution > 0.0) {
        return Err(Error::InvalidPgm(format!(
            "resolution must be positive, got {}",
            header.resolution
        )));
    }
    let img = parse_pgm(bytes)?;
    let (w, h) = (img.width, img.height);
    let mut cells = vec![0.5f32; w * h];
    for (i, &v) in img.pixels.iter().enumerate() {
        let label = match v {
            PIXEL_FREE => CellLabel::Free,
            PIXEL_OCCUPIED => CellLabel::Occupied,
            PIXEL_UNKNOWN => CellLabel::Unknown,
            other => {
                return Err(Error::InvalidPgm(format!(
                    "pixel value {other} at byte {i} is not 0, 128 or 255"
                )))
            }
        };
        let (x, row) = (i % w, i / w);
        cells[(h - 1 - row) * w + x] = label.probability();
    }
    OccupancyGrid::from_cells(w, h, header.resolution, header.origin, cells)
}

fn sidecar_path(pgm_path: &Path) -> PathBuf {
    pgm_path.with_extension("json")
}

/// Writes `<path>` (PGM) and `<path>.json` with the extension replaced (header).
pub fn write_grid(pgm_path: &Path, grid: &OccupancyGrid) -> Result<()> {
    fs::write(pgm_path, write_pgm(grid)).map_err(|e| Error::file(pgm_path, e))?;
    let header = GridHeader {
        resolution: grid.resolution(),
        origin: grid.origin(),
    };
    let mut line = serde_json::to_string(&header)?;
    line.push('\n');
    let side = sidecar_path(pgm_path);
    fs::write(&side, line).map_err(|e| Error::file(side, e))?;
    Ok(())
}

pub fn read_grid(pgm_path: &Path) -> Result<OccupancyGrid> {
    let bytes = fs::read(pgm_path).map_err(|e| Error::file(pgm_path, e))?;
    let side = sidecar_path(pgm_path);
    let text = fs::read_to_string(&side).map_err(|e| Error::file(&side, e))?;
    let header: GridHeader = serde_json::from_str(text.trim())?;
    read_pgm(&bytes, header)
}
