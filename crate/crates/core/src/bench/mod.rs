//! Replaying recorded explorations under each update strategy and scoring
//! them against the full-recompute baseline.
//!
//! A replay rebuilds the submap graph round by round from a snapshot (the
//! rasters and local frontiers) and the log (insertion poses and
//! corrections), so every strategy sees exactly the same pose sequence.

mod oracle_check;
mod render;

use std::collections::BTreeSet;
use std::io::Write;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::incremental::{
    apply_event, performance_ratio, run_update, DeviationConfig, OptimizationEvent, Strategy,
    UpdateReport,
};
use crate::sim::{ExplorationLog, RoundRecord};
use crate::submap_graph::{SubmapGraph, SubmapId};

pub use oracle_check::{oracle_check, OracleReport};
pub use render::{render_round, RenderOptions};

pub type FrontierSet = BTreeSet<(SubmapId, Cell)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRound {
    pub report: UpdateReport,
    pub global: FrontierSet,
    /// Local frontier points over all finished submaps this round.
    pub local_points: usize,
}

pub fn event_of(record: &RoundRecord) -> OptimizationEvent {
    OptimizationEvent {
        round: record.round,
        corrected_poses: record.corrected_poses.clone(),
        latest_submap: record.latest_submap,
    }
}

/// Steps a graph through a log one round at a time.
pub struct Replayer<'a> {
    log: &'a ExplorationLog,
    source: &'a SubmapGraph,
    graph: SubmapGraph,
    next: usize,
}

impl<'a> Replayer<'a> {
    pub fn new(log: &'a ExplorationLog, source: &'a SubmapGraph) -> Self {
        Self {
            log,
            source,
            graph: SubmapGraph::new(),
            next: 0,
        }
    }

    pub fn graph(&self) -> &SubmapGraph {
        &self.graph
    }

    /// Inserts the round's new submap and applies its correction, leaving
    /// the frontier update to the caller. Returns `None` past the last round.
    pub fn advance(&mut self) -> Result<Option<(&RoundRecord, &mut SubmapGraph)>> {
        let Some(rec) = self.log.rounds.get(self.next) else {
            return Ok(None);
        };
        let id = rec.latest_submap;
        if id.index() != self.graph.len() {
            return Err(Error::CorruptLog(format!(
                "round {} inserts {id} but the graph holds {} submaps",
                rec.round,
                self.graph.len()
            )));
        }
        let s = self
            .source
            .submap(id)
            .map_err(|_| Error::CorruptLog(format!("snapshot lacks submap {id}")))?;
        let frontiers = s
            .local_frontiers()
            .ok_or_else(|| Error::CorruptLog(format!("snapshot submap {id} is not finished")))?;
        self.graph.restore_finished_submap(
            s.raw().clone(),
            s.inflated().clone(),
            rec.submap_pose,
            frontiers.points().to_vec(),
        )?;
        apply_event(&mut self.graph, &event_of(rec))
            .map_err(|e| Error::CorruptLog(format!("round {}: {e}", rec.round)))?;
        self.next += 1;
        Ok(Some((rec, &mut self.graph)))
    }
}

pub fn frontier_set(graph: &SubmapGraph) -> FrontierSet {
    graph.global_frontiers().collect()
}

/// Re-runs one strategy over the whole log.
pub fn replay(
    log: &ExplorationLog,
    source: &SubmapGraph,
    strategy: Strategy,
    cfg: &DeviationConfig,
) -> Result<Vec<ReplayRound>> {
    let mut r = Replayer::new(log, source);
    let mut out = Vec::with_capacity(log.rounds.len());
    while let Some((rec, graph)) = r.advance()? {
        let report = run_update(strategy, graph, &event_of(rec), cfg)?;
        out.push(ReplayRound {
            report,
            global: frontier_set(graph),
            local_points: graph.local_frontier_total(),
        });
    }
    Ok(out)
}

/// Membership confusion counts of a strategy's global frontier against the
/// baseline's, over all local frontier points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn of(result: &FrontierSet, baseline: &FrontierSet, universe: usize) -> Self {
        let tp = result.intersection(baseline).count();
        let fp = result.len() - tp;
        let fn_ = baseline.len() - tp;
        Self {
            tp,
            fp,
            fn_,
            tn: universe.saturating_sub(tp + fp + fn_),
        }
    }

    pub fn mismatches(&self) -> usize {
        self.fp + self.fn_
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Undefined ratios (empty denominators) are reported as 1.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Mismatches as a fraction of all local frontier points.
    pub fn mismatch_rate(&self) -> f64 {
        1.0 - self.accuracy()
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;
    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// One CSV row of [`ComparisonMetrics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundComparison {
    pub epsilon: f64,
    pub round: u32,
    pub local_points: usize,
    pub dfd_points: usize,
    pub bfs_points: usize,
    pub direct_points: usize,
    pub bfs_mismatch: usize,
    pub direct_mismatch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub epsilon: f64,
    pub per_round: Vec<RoundComparison>,
    pub totals: RoundTotals,
    pub performance_bfs: f64,
    pub performance_direct: f64,
    pub bfs: Confusion,
    pub direct: Confusion,
    /// Largest per-round mismatch rate.
    pub max_mismatch_rate_bfs: f64,
    pub max_mismatch_rate_direct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundTotals {
    pub dfd_points: usize,
    pub bfs_points: usize,
    pub direct_points: usize,
    pub bfs_mismatch: usize,
    pub direct_mismatch: usize,
}

/// Replays DFD, BFS and Direct over the same log (in parallel) and scores
/// BFS and Direct against DFD.
pub fn compare(
    log: &ExplorationLog,
    source: &SubmapGraph,
    cfg: &DeviationConfig,
) -> Result<ComparisonMetrics> {
    cfg.validate()?;
    if log.rounds.is_empty() {
        return Err(Error::CorruptLog("log has no rounds".into()));
    }
    let [dfd, bfs, direct] = thread::scope(|s| {
        let handles = Strategy::ALL.map(|st| s.spawn(move || replay(log, source, st, cfg)));
        handles.map(|h| h.join().expect("replay thread panicked"))
    });
    let (dfd, bfs, direct) = (dfd?, bfs?, direct?);

    let mut per_round = Vec::with_capacity(dfd.len());
    let (mut cb, mut cd) = (Confusion::default(), Confusion::default());
    let (mut max_b, mut max_d) = (0.0f64, 0.0f64);
    let mut totals = RoundTotals::default();
    for ((d, b), x) in dfd.iter().zip(&bfs).zip(&direct) {
        let qb = Confusion::of(&b.global, &d.global, d.local_points);
        let qd = Confusion::of(&x.global, &d.global, d.local_points);
        max_b = max_b.max(qb.mismatch_rate());
        max_d = max_d.max(qd.mismatch_rate());
        cb = cb + qb;
        cd = cd + qd;
        let row = RoundComparison {
            epsilon: cfg.epsilon,
            round: d.report.round,
            local_points: d.local_points,
            dfd_points: d.report.queried_points,
            bfs_points: b.report.queried_points,
            direct_points: x.report.queried_points,
            bfs_mismatch: qb.mismatches(),
            direct_mismatch: qd.mismatches(),
        };
        totals.dfd_points += row.dfd_points;
        totals.bfs_points += row.bfs_points;
        totals.direct_points += row.direct_points;
        totals.bfs_mismatch += row.bfs_mismatch;
        totals.direct_mismatch += row.direct_mismatch;
        per_round.push(row);
    }
    let col = |f: fn(&RoundComparison) -> usize| per_round.iter().map(f).collect::<Vec<_>>();
    let dfd_pts = col(|r| r.dfd_points);
    Ok(ComparisonMetrics {
        epsilon: cfg.epsilon,
        performance_bfs: performance_ratio(&col(|r| r.bfs_points), &dfd_pts)?,
        performance_direct: performance_ratio(&col(|r| r.direct_points), &dfd_pts)?,
        per_round,
        totals,
        bfs: cb,
        direct: cd,
        max_mismatch_rate_bfs: max_b,
        max_mismatch_rate_direct: max_d,
    })
}

/// Per-round rows for every metrics set, in order.
pub fn write_comparison_csv<W: Write>(out: W, metrics: &[ComparisonMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        for row in &m.per_round {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow {
    epsilon: f64,
    strategy: &'static str,
    queried_points: usize,
    performance: f64,
    mismatches: usize,
    max_mismatch_rate: f64,
    accuracy: f64,
    precision: f64,
    recall: f64,
}

/// Aggregate rows: one per epsilon and strategy.
pub fn write_summary_csv<W: Write>(out: W, metrics: &[ComparisonMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(SummaryRow {
            epsilon: m.epsilon,
            strategy: Strategy::Dfd.name(),
            queried_points: m.totals.dfd_points,
            performance: 0.0,
            mismatches: 0,
            max_mismatch_rate: 0.0,
            accuracy: 1.0,
            precision: 1.0,
            recall: 1.0,
        })?;
        for (strategy, points, perf, c, max) in [
            (
                Strategy::Bfs,
                m.totals.bfs_points,
                m.performance_bfs,
                m.bfs,
                m.max_mismatch_rate_bfs,
            ),
            (
                Strategy::Direct,
                m.totals.direct_points,
                m.performance_direct,
                m.direct,
                m.max_mismatch_rate_direct,
            ),
        ] {
            w.serialize(SummaryRow {
                epsilon: m.epsilon,
                strategy: strategy.name(),
                queried_points: points,
                performance: perf,
                mismatches: c.mismatches(),
                max_mismatch_rate: max,
                accuracy: c.accuracy(),
                precision: c.precision(),
                recall: c.recall(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(cells: &[(u32, u32)]) -> FrontierSet {
        cells
            .iter()
            .map(|&(s, x)| (SubmapId(s), Cell::new(x, 0)))
            .collect()
    }

    #[test]
    fn confusion_counts() {
        let base = set(&[(0, 1), (0, 2), (1, 3)]);
        let got = set(&[(0, 1), (1, 3), (1, 4)]);
        let c = Confusion::of(&got, &base, 10);
        assert_eq!(
            c,
            Confusion {
                tp: 2,
                fp: 1,
                fn_: 1,
                tn: 6
            }
        );
        assert_eq!(c.mismatches(), 2);
        assert!((c.accuracy() - 0.8).abs() < 1e-12);
        assert!((c.precision() - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.recall() - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.mismatch_rate() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_sets_score_perfectly() {
        let c = Confusion::of(&FrontierSet::new(), &FrontierSet::new(), 0);
        assert_eq!(c.accuracy(), 1.0);
        assert_eq!(c.precision(), 1.0);
        assert_eq!(c.recall(), 1.0);
    }

    #[test]
    fn empty_log_cannot_be_compared() {
        let log = ExplorationLog::default();
        let g = SubmapGraph::new();
        assert!(compare(&log, &g, &DeviationConfig::default()).is_err());
    }
}
