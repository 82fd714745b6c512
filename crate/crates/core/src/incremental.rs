//! Global-frontier maintenance after each optimization round.
//!
//! Three strategies decide which submaps get a fresh stabbing query:
//!
//! * **DFD** re-queries every finished submap. It is the reference result.
//! * **BFS** starts at the newest submap and walks box-overlap edges, but
//!   only through submaps whose pose moved by more than the threshold in this
//!   round. Drift that stays below the threshold each round is never seen.
//! * **Direct** keeps a per-submap cumulative deviation and triggers any
//!   submap whose accumulated change since its last query crosses the
//!   threshold, wherever it is in the map.
//!
//! Every queried set is finally widened by the submaps overlapping its
//! members, because a moved submap can change whether its neighbors'
//! frontier points are still covered. Submaps not queried keep their
//! previous surviving cells; those are stored in submap-local coordinates,
//! so the corrected pose re-anchors them without any rewrite.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Pose2D, PoseDelta};
use crate::submap_graph::{SubmapGraph, SubmapId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfd,
    Bfs,
    Direct,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Dfd, Strategy::Bfs, Strategy::Direct];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Dfd => "dfd",
            Strategy::Bfs => "bfs",
            Strategy::Direct => "direct",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfd" => Ok(Strategy::Dfd),
            "bfs" => Ok(Strategy::Bfs),
            "direct" => Ok(Strategy::Direct),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy {other:?} (expected dfd, bfs or direct)"
            ))),
        }
    }
}

/// Pose-change threshold. A translation above `epsilon` in x or y, or a
/// rotation above `epsilon / (arc_factor · lidar_range)`, counts as a
/// significant change. With the default `arc_factor` of 2π a full sensor
/// circumference of rotation maps to `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationConfig {
    pub epsilon: f64,
    pub lidar_range: f64,
    pub arc_factor: f64,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            lidar_range: 8.0,
            arc_factor: 2.0 * PI,
        }
    }
}

impl DeviationConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.lidar_range > 0.0) || !(self.arc_factor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon, lidar_range and arc_factor must be positive (got {}, {}, {})",
                self.epsilon, self.lidar_range, self.arc_factor
            )));
        }
        Ok(())
    }

    pub fn angular_threshold(&self) -> f64 {
        self.epsilon / (self.arc_factor * self.lidar_range)
    }

    /// True when any component of `delta` strictly exceeds its threshold.
    pub fn exceeds(&self, delta: &PoseDelta) -> bool {
        delta.dx.abs() > self.epsilon
            || delta.dy.abs() > self.epsilon
            || delta.dtheta.abs() > self.angular_threshold()
    }
}

/// Whether the change from `pp` to `cp` is significant.
pub fn deviation_exceeds(cp: &Pose2D, pp: &Pose2D, cfg: &DeviationConfig) -> bool {
    cfg.exceeds(&cp.delta_from(pp))
}

/// `cd + (cp − pp)` componentwise; the angle term is the wrapped per-round
/// difference, summed without wrapping.
pub fn accumulate_deviation(cd: &PoseDelta, cp: &Pose2D, pp: &Pose2D) -> PoseDelta {
    *cd + cp.delta_from(pp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationEvent {
    pub round: u32,
    pub corrected_poses: BTreeMap<SubmapId, Pose2D>,
    pub latest_submap: SubmapId,
}

impl OptimizationEvent {
    pub fn validate(&self, graph: &SubmapGraph) -> Result<()> {
        for id in self.corrected_poses.keys().chain([&self.latest_submap]) {
            graph.submap(*id)?;
        }
        Ok(())
    }
}

/// Validates the event and starts the round on `graph` (previous pose ← current, current ← corrected).
pub fn apply_event(graph: &mut SubmapGraph, event: &OptimizationEvent) -> Result<()> {
    event.validate(graph)?;
    graph.apply_corrections(&event.corrected_poses)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub strategy: Strategy,
    pub round: u32,
    /// Submaps that received a fresh stabbing query, sorted.
    pub queried_submaps: Vec<SubmapId>,
    /// Local frontier points pushed through the stabbing query.
    pub queried_points: usize,
    /// Submaps that crossed the threshold themselves (BFS, Direct), sorted.
    pub triggered_submaps: Vec<SubmapId>,
    /// Size of the global frontier after the update.
    pub frontier_count: usize,
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl UpdateReport {
    /// Report with timing stripped, for exact comparisons.
    pub fn without_timing(&self) -> UpdateReport {
        UpdateReport {
            elapsed_s: 0.0,
            ..self.clone()
        }
    }
}

fn require_finished(graph: &SubmapGraph, id: SubmapId) -> Result<()> {
    if !graph.submap(id)?.is_finished() {
        return Err(Error::SubmapNotFinished(id));
    }
    Ok(())
}

/// Seeds plus every finished submap overlapping a seed's current or
/// previous box.
fn widen(graph: &SubmapGraph, seeds: &BTreeSet<SubmapId>) -> Result<BTreeSet<SubmapId>> {
    let mut out = seeds.clone();
    for &s in seeds {
        out.extend(graph.intersecting_submaps(s)?);
        let prev = graph.previous_bounding_box(s)?;
        out.extend(graph.intersecting_box(&prev, Some(s)));
    }
    let mut finished = BTreeSet::new();
    for id in out {
        if graph.submap(id)?.is_finished() {
            finished.insert(id);
        }
    }
    Ok(finished)
}

fn query_all(
    graph: &mut SubmapGraph,
    strategy: Strategy,
    round: u32,
    queried: BTreeSet<SubmapId>,
    triggered: BTreeSet<SubmapId>,
    started: Instant,
) -> Result<UpdateReport> {
    let mut points = 0;
    for &id in &queried {
        points += graph.submap(id)?.frontier_count();
        graph.stabbing_query(id)?;
    }
    Ok(UpdateReport {
        strategy,
        round,
        queried_submaps: queried.into_iter().collect(),
        queried_points: points,
        triggered_submaps: triggered.into_iter().collect(),
        frontier_count: graph.global_frontier_count(),
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

/// Full recompute: every finished submap is queried.
pub fn update_dfd(graph: &mut SubmapGraph, event: &OptimizationEvent) -> Result<UpdateReport> {
    let started = Instant::now();
    let all: BTreeSet<SubmapId> = graph.finished_ids().collect();
    query_all(
        graph,
        Strategy::Dfd,
        event.round,
        all,
        BTreeSet::new(),
        started,
    )
}

/// Propagation from the newest submap through overlapping submaps whose
/// pose changed significantly in this round.
pub fn update_bfs(
    graph: &mut SubmapGraph,
    event: &OptimizationEvent,
    cfg: &DeviationConfig,
) -> Result<UpdateReport> {
    let started = Instant::now();
    let latest = event.latest_submap;
    require_finished(graph, latest)?;

    let mut selected = BTreeSet::from([latest]);
    let mut queue = VecDeque::from([latest]);
    while let Some(n) = queue.pop_front() {
        for s in graph.intersecting_submaps(n)? {
            if selected.contains(&s) {
                continue;
            }
            let sm = graph.submap(s)?;
            if !sm.is_finished() {
                continue;
            }
            if deviation_exceeds(&sm.current_pose(), &sm.previous_pose(), cfg) {
                selected.insert(s);
                queue.push_back(s);
            }
        }
    }
    let queried = widen(graph, &selected)?;
    let mut triggered = selected;
    triggered.remove(&latest);
    query_all(
        graph,
        Strategy::Bfs,
        event.round,
        queried,
        triggered,
        started,
    )
}

/// Cumulative-deviation trigger. The newest submap and its neighbors are
/// always queried so fresh frontiers enter the global set.
pub fn update_direct(
    graph: &mut SubmapGraph,
    event: &OptimizationEvent,
    cfg: &DeviationConfig,
) -> Result<UpdateReport> {
    let started = Instant::now();
    let latest = event.latest_submap;
    require_finished(graph, latest)?;

    let finished: Vec<SubmapId> = graph.finished_ids().collect();
    let mut triggered = BTreeSet::new();
    for &id in &finished {
        let s = graph.submap_mut(id)?;
        let cd = accumulate_deviation(
            &s.cumulative_deviation(),
            &s.current_pose(),
            &s.previous_pose(),
        );
        s.set_cumulative_deviation(cd);
        if cfg.exceeds(&cd) {
            triggered.insert(id);
        }
    }
    let mut seeds = triggered.clone();
    seeds.insert(latest);
    let queried = widen(graph, &seeds)?;
    let report = query_all(
        graph,
        Strategy::Direct,
        event.round,
        queried,
        triggered,
        started,
    )?;
    for &id in &report.triggered_submaps {
        graph
            .submap_mut(id)?
            .set_cumulative_deviation(PoseDelta::ZERO);
    }
    Ok(report)
}

pub fn run_update(
    strategy: Strategy,
    graph: &mut SubmapGraph,
    event: &OptimizationEvent,
    cfg: &DeviationConfig,
) -> Result<UpdateReport> {
    match strategy {
        Strategy::Dfd => update_dfd(graph, event),
        Strategy::Bfs => update_bfs(graph, event, cfg),
        Strategy::Direct => update_direct(graph, event, cfg),
    }
}

/// `1 − Σa / Σb`: the fraction of baseline work `b` that strategy `a` avoided.
pub fn performance_ratio(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::RoundCountMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let sb: usize = b.iter().sum();
    if sb == 0 {
        return Err(Error::ZeroBaseline);
    }
    let sa: usize = a.iter().sum();
    Ok(1.0 - sa as f64 / sb as f64)
}

/// One CSV row per strategy and round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub round: u32,
    pub strategy: Strategy,
    pub queried_submaps: usize,
    pub queried_points: usize,
    pub elapsed_s: f64,
    pub frontier_count: usize,
    pub mismatch_vs_dfd: usize,
}

impl ReportRow {
    pub fn new(report: &UpdateReport, mismatch_vs_dfd: usize) -> Self {
        Self {
            round: report.round,
            strategy: report.strategy,
            queried_submaps: report.queried_submaps.len(),
            queried_points: report.queried_points,
            elapsed_s: report.elapsed_s,
            frontier_count: report.frontier_count,
            mismatch_vs_dfd,
        }
    }
}

pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
