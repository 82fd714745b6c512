use serde::{Deserialize, Serialize};

use super::{event_of, frontier_set, Replayer};
use crate::error::Result;
use crate::frontier::find_seed;
use crate::grid::{inflate, Connectivity, Point2};
use crate::incremental::{run_update, update_dfd, DeviationConfig};
use crate::oracle;
use crate::sim::ExplorationLog;
use crate::submap_graph::{Layer, SubmapGraph, SubmapId};

/// Outcome of checking a recorded exploration against the brute-force
/// references. Every list names the failing submaps or rounds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleReport {
    pub submaps_checked: usize,
    /// Submaps whose stored local frontier differs from a fresh flood fill.
    pub local_mismatches: Vec<SubmapId>,
    pub rounds_checked: usize,
    /// Rounds where the pruned full recompute differs from all-pairs stabbing.
    pub stabbing_mismatches: Vec<u32>,
    /// Rounds where replaying the recorded strategy does not reproduce the
    /// logged report and frontier set.
    pub replay_mismatches: Vec<u32>,
    pub navigation_points_checked: usize,
    /// Logged navigation points with no 4-connected Free path from the robot.
    pub unreachable_navigation: Vec<(u32, Point2)>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.local_mismatches.is_empty()
            && self.stabbing_mismatches.is_empty()
            && self.replay_mismatches.is_empty()
            && self.unreachable_navigation.is_empty()
    }
}

pub fn oracle_check(
    log: &ExplorationLog,
    source: &SubmapGraph,
    inflation_radius: u32,
    connectivity: Connectivity,
    cfg: &DeviationConfig,
) -> Result<OracleReport> {
    let mut out = OracleReport::default();

    for s in source.submaps() {
        let Some(stored) = s.local_frontiers() else {
            continue;
        };
        out.submaps_checked += 1;
        let preferred = s.raw().world_to_raster(Point2::new(0.0, 0.0));
        let fresh = find_seed(s.inflated(), preferred, 2 * inflation_radius)
            .map(|seed| oracle::frontier_cells(s.inflated(), seed, connectivity))
            .unwrap_or_default();
        if fresh.as_slice() != stored.points() {
            out.local_mismatches.push(s.id());
        }
    }

    let mut recorded = Replayer::new(log, source);
    let mut baseline = Replayer::new(log, source);
    while let Some((rec, graph)) = recorded.advance()? {
        out.rounds_checked += 1;
        let report = run_update(rec.report.strategy, graph, &event_of(rec), cfg)?;
        let logged: super::FrontierSet = rec
            .global_frontiers
            .iter()
            .flat_map(|(&id, cells)| cells.iter().map(move |&c| (id, c)))
            .collect();
        if report.without_timing() != rec.report || frontier_set(graph) != logged {
            out.replay_mismatches.push(rec.round);
        }

        let fused = graph
            .fuse_global_map(Layer::Raw)
            .expect("round inserts a submap");
        let planning = inflate(&fused, inflation_radius);
        let (rx, ry) = planning.world_to_raster(rec.robot.translation());
        if let Some(start) = find_seed(&planning, (rx, ry), 2 * inflation_radius) {
            let reach = oracle::reachable_cells(&planning, start);
            for np in &rec.navigation_points {
                out.navigation_points_checked += 1;
                let ok = planning
                    .world_to_cell(np.point)
                    .is_some_and(|c| reach.contains(&(c.x, c.y)));
                if !ok {
                    out.unreachable_navigation.push((rec.round, np.point));
                }
            }
        } else {
            for np in &rec.navigation_points {
                out.navigation_points_checked += 1;
                out.unreachable_navigation.push((rec.round, np.point));
            }
        }

        let (brec, bgraph) = baseline
            .advance()?
            .expect("both replays have the same rounds");
        update_dfd(bgraph, &event_of(brec))?;
        if frontier_set(bgraph) != oracle::global_frontiers(bgraph) {
            out.stabbing_mismatches.push(brec.round);
        }
    }
    Ok(out)
}
