//! Directory snapshot of a submap graph: one PGM + JSON header per submap raw
//! raster and a `manifest.json` with poses, flags and frontier cell lists.
//! Inflated rasters are not stored; they are recomputed on load from the
//! recorded inflation radius.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Submap, SubmapGraph, SubmapId};
use crate::error::{Error, Result};
use crate::frontier::LocalFrontierSet;
use crate::grid::{inflate, read_grid, write_grid, Cell, Connectivity, Pose2D, PoseDelta};

pub const SNAPSHOT_FORMAT: &str = "submap-graph/1";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmapRecord {
    pub id: SubmapId,
    pub grid: String,
    pub current_pose: Pose2D,
    pub previous_pose: Pose2D,
    pub cumulative_deviation: PoseDelta,
    pub finished: bool,
    #[serde(default)]
    pub finish_order: Option<u64>,
    #[serde(default)]
    pub local_frontiers: Vec<Cell>,
    #[serde(default)]
    pub global_frontiers: Option<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotManifest {
    pub format: String,
    pub inflation_radius: u32,
    pub connectivity: Connectivity,
    pub submaps: Vec<SubmapRecord>,
}

pub fn save_snapshot(
    graph: &SubmapGraph,
    dir: &Path,
    inflation_radius: u32,
    connectivity: Connectivity,
) -> Result<SnapshotManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut records = Vec::with_capacity(graph.len());
    for s in graph.submaps() {
        let name = format!("submap_{:05}.pgm", s.id.0);
        write_grid(&dir.join(&name), s.raw())?;
        records.push(SubmapRecord {
            id: s.id,
            grid: name,
            current_pose: s.current_pose,
            previous_pose: s.previous_pose,
            cumulative_deviation: s.cumulative_deviation,
            finished: s.is_finished(),
            finish_order: s.finish_order,
            local_frontiers: s
                .local_frontiers()
                .map(|f| f.points().to_vec())
                .unwrap_or_default(),
            global_frontiers: graph.global.get(&s.id).cloned(),
        });
    }
    let manifest = SnapshotManifest {
        format: SNAPSHOT_FORMAT.to_string(),
        inflation_radius,
        connectivity,
        submaps: records,
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::file(path, e))?;
    Ok(manifest)
}

pub fn load_snapshot(dir: &Path) -> Result<(SubmapGraph, SnapshotManifest)> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
    let manifest: SnapshotManifest = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptLog(format!("{}: {e}", path.display())))?;
    if manifest.format != SNAPSHOT_FORMAT {
        return Err(Error::CorruptLog(format!(
            "unsupported snapshot format {:?}",
            manifest.format
        )));
    }
    let mut graph = SubmapGraph::new();
    for (i, rec) in manifest.submaps.iter().enumerate() {
        if rec.id.index() != i {
            return Err(Error::CorruptLog(format!(
                "submap ids must be dense and ordered; found {} at position {i}",
                rec.id
            )));
        }
        let raw = read_grid(&dir.join(&rec.grid))?;
        let id = graph.add_submap(raw, rec.current_pose);
        let s: &mut Submap = &mut graph.submaps[id.index()];
        s.previous_pose = rec.previous_pose;
        s.cumulative_deviation = rec.cumulative_deviation;
        if rec.finished {
            s.inflated = inflate(&s.raw, manifest.inflation_radius);
            if let Some(c) = rec
                .local_frontiers
                .iter()
                .find(|c| !s.raw.contains(c.x as i64, c.y as i64))
            {
                return Err(Error::CorruptLog(format!(
                    "submap {id}: frontier cell ({}, {}) outside raster",
                    c.x, c.y
                )));
            }
            s.install_frontiers(LocalFrontierSet::new(id, rec.local_frontiers.clone()));
            s.finish_order = Some(rec.finish_order.unwrap_or(i as u64));
        }
        if let Some(g) = &rec.global_frontiers {
            graph.global.insert(id, g.clone());
        }
    }
    graph.next_finish = graph
        .submaps
        .iter()
        .filter_map(|s| s.finish_order)
        .max()
        .map_or(0, |m| m + 1);
    graph.previous_boxes = graph
        .submaps
        .iter()
        .map(|s| super::bounding_box_at(&s.raw, &s.previous_pose))
        .collect();
    Ok((graph, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellLabel, OccupancyGrid};
    use crate::submap_graph::{FinishParams, SeedPolicy};

    #[test]
    fn snapshot_round_trip() {
        let mut g = SubmapGraph::new();
        let mut raw = OccupancyGrid::new(12, 10, 0.05, Pose2D::new(-0.2, -0.1, 0.0));
        for c in raw.clone().iter_cells() {
            if c.x < 6 {
                raw.set_label(
                    c,
                    if c.y == 0 {
                        CellLabel::Occupied
                    } else {
                        CellLabel::Free
                    },
                );
            }
        }
        let params = FinishParams {
            inflation_radius: 1,
            connectivity: Connectivity::Eight,
            seed: SeedPolicy::Cell(Cell::new(2, 5)),
        };
        let a = g
            .add_finished_submap(raw.clone(), Pose2D::new(1.0, 2.0, 0.3), &params)
            .unwrap();
        g.add_submap(raw, Pose2D::new(1.1, 2.0, 0.3));
        g.stabbing_query(a).unwrap();
        g.submap_mut(a)
            .unwrap()
            .set_cumulative_deviation(PoseDelta::new(0.01, -0.02, 1e-4));

        let dir = tempfile::tempdir().unwrap();
        let saved = save_snapshot(&g, dir.path(), 1, Connectivity::Eight).unwrap();
        let (back, manifest) = load_snapshot(dir.path()).unwrap();
        assert_eq!(saved, manifest);
        assert_eq!(back.len(), 2);
        let (s, t) = (g.submap(a).unwrap(), back.submap(a).unwrap());
        assert_eq!(s.inflated(), t.inflated());
        assert_eq!(s.local_frontiers(), t.local_frontiers());
        assert_eq!(s.cumulative_deviation(), t.cumulative_deviation());
        assert_eq!(s.current_pose(), t.current_pose());
        assert!(!back.submap(SubmapId(1)).unwrap().is_finished());
        assert_eq!(
            back.global_frontiers().collect::<Vec<_>>(),
            g.global_frontiers().collect::<Vec<_>>()
        );
    }

    #[test]
    fn missing_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_snapshot(dir.path()).is_err());
    }
}
