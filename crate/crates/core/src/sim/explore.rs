//! The closed exploration loop: sense, build submaps, optimize, update the
//! global frontier, cluster, pick a goal, move.
//!
//! Pose bookkeeping: every submap frame is axis-aligned and sits on the world
//! raster lattice in truth, so a scan inserted at the exact truth-relative
//! pose produces cells that line up with the truth raster. The estimate of a
//! submap is `error ∘ truth_frame`, where `error` is the trajectory error at
//! the time the submap was started. Drift is injected once per submap, as a
//! perturbation of the estimated robot pose in the robot frame.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::motion::optimization_step;
use super::planner::{plan_path, reachable_mask};
use super::sensor::{mark_observed, raycast_scan, SubmapBuilder};
use super::world::World;
use crate::clustering::{
    mean_shift, prioritize, select_navigation_point, ConnectivityLabels, NavigationPoint,
};
use crate::error::{Error, Result};
use crate::frontier::find_seed;
use crate::grid::{
    inflate, normalize_angle, Cell, CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D,
};
use crate::incremental::{apply_event, run_update, UpdateReport};
use crate::submap_graph::{FinishParams, Layer, SeedPolicy, SubmapGraph, SubmapId};

/// Everything that happened in one optimization round, in the estimated
/// world frame unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub round: u32,
    /// Tick at which the round's submap received its last scan.
    pub tick: u64,
    pub latest_submap: SubmapId,
    /// Pose the new submap was inserted with, before this round's correction.
    pub submap_pose: Pose2D,
    pub loop_closure: bool,
    pub strength: f64,
    pub corrected_poses: BTreeMap<SubmapId, Pose2D>,
    pub report: UpdateReport,
    pub global_frontiers: BTreeMap<SubmapId, Vec<Cell>>,
    pub navigation_points: Vec<NavigationPoint>,
    pub target: Option<Point2>,
    /// Estimated robot pose when the round was planned.
    pub robot: Pose2D,
    /// Estimated robot position after each movement tick since the
    /// previous round.
    pub trajectory: Vec<Point2>,
    /// Truth cells observed by any scan so far.
    pub observed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExplorationLog {
    pub rounds: Vec<RoundRecord>,
}

impl ExplorationLog {
    /// One JSON record per line, in round order.
    pub fn to_ndjson(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for r in &self.rounds {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&self.to_ndjson()?)
            .map_err(|e| Error::file(path, e))?;
        w.flush().map_err(|e| Error::file(path, e))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::file(path, e))?;
        let mut rounds: Vec<RoundRecord> = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::file(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RoundRecord = serde_json::from_str(&line).map_err(|e| {
                Error::CorruptLog(format!("{} line {}: {e}", path.display(), i + 1))
            })?;
            if rec.round as usize != rounds.len() {
                return Err(Error::CorruptLog(format!(
                    "{} line {}: expected round {}, found {}",
                    path.display(),
                    i + 1,
                    rounds.len(),
                    rec.round
                )));
            }
            rounds.push(rec);
        }
        Ok(Self { rounds })
    }

    /// All movement-tick positions in order.
    pub fn trajectory(&self) -> Vec<Point2> {
        self.rounds
            .iter()
            .flat_map(|r| r.trajectory.iter().copied())
            .collect()
    }
}

/// Result of a finished exploration.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub log: ExplorationLog,
    pub graph: SubmapGraph,
    pub truth_poses: BTreeMap<SubmapId, Pose2D>,
    /// Truth-raster mask of observed cells.
    pub observed: Vec<bool>,
    /// Wall-clock seconds of each round's update step.
    pub update_seconds: Vec<f64>,
    pub ticks: u64,
    pub travel: f64,
    pub inflation_radius: u32,
}

impl Exploration {
    /// Fraction of truth Free cells reachable from the start that were observed.
    pub fn coverage(&self, world: &World) -> f64 {
        let reach = world.reachable_free();
        let total = reach.iter().filter(|&&b| b).count();
        let seen = reach
            .iter()
            .zip(&self.observed)
            .filter(|(&r, &o)| r && o)
            .count();
        seen as f64 / total.max(1) as f64
    }
}

/// Navigation points for one round: cluster the global frontier, split
/// clusters by connectivity on `planning`, keep the member nearest the robot
/// per component if the planner can reach it, then rank.
pub fn navigation_points(
    graph: &SubmapGraph,
    fused_raw: &OccupancyGrid,
    planning: &OccupancyGrid,
    robot: &Pose2D,
    robot_cell: Cell,
    blacklist: &[Point2],
    cfg: &SimConfig,
) -> Result<Vec<NavigationPoint>> {
    let radius2 = cfg.explore.blacklist_radius.powi(2);
    let points: Vec<Point2> = graph
        .global_frontier_points()
        .into_iter()
        .filter(|p| blacklist.iter().all(|b| b.distance_squared(p) > radius2))
        .collect();
    let clusters = mean_shift(&points, &cfg.clustering)?;
    let labels = ConnectivityLabels::compute(planning, Connectivity::Eight);
    let reach = reachable_mask(planning, robot_cell);
    let mut nav = Vec::new();
    let mut component = 0;
    for cluster in &clusters {
        for members in labels.split(planning, &cluster.members)? {
            let np = select_navigation_point(&members, component, robot)?;
            component += 1;
            let reachable = planning
                .world_to_cell(np.point)
                .is_some_and(|c| reach[planning.index(c)]);
            if reachable {
                nav.push(np);
            }
        }
    }
    prioritize(nav, robot, fused_raw, &cfg.priority)
}

fn snap_to_lattice(world: &World, pose: &Pose2D) -> Pose2D {
    let o = world.truth().origin();
    let res = world.truth().resolution();
    Pose2D::new(
        o.x + ((pose.x - o.x) / res).round() * res,
        o.y + ((pose.y - o.y) / res).round() * res,
        0.0,
    )
}

struct Active {
    builder: SubmapBuilder,
    frame: Pose2D,
}

/// Runs exploration until no reachable navigation point remains.
pub fn explore(world: &World, cfg: &SimConfig) -> Result<Exploration> {
    cfg.validate()?;
    let res = world.truth().resolution();
    let radius = cfg.inflation_radius(res);
    world.check_clearance(radius)?;
    let params = FinishParams {
        inflation_radius: radius,
        connectivity: cfg.submap.connectivity,
        seed: SeedPolicy::FrameOrigin,
    };
    let scans = cfg.submap.scans_per_submap;
    let half_extent = cfg.sensor.range + scans as f64 * res + 1.0;
    let deviation = cfg.deviation();
    let jitter = cfg.jitter();
    let closure_travel = cfg.optimization.loop_closure_travel;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.drift.rng_seed);
    let mut truth = world.start();
    let mut error = Pose2D::identity();
    let mut graph = SubmapGraph::new();
    let mut truth_poses = BTreeMap::new();
    let mut finish_travel: BTreeMap<SubmapId, f64> = BTreeMap::new();
    let mut observed = vec![false; world.truth().len()];
    let mut observed_count = 0usize;
    let mut active: Option<Active> = None;
    let mut path: VecDeque<Point2> = VecDeque::new();
    let mut target: Option<Point2> = None;
    let mut blacklist: Vec<Point2> = Vec::new();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut update_seconds = Vec::new();
    let mut trajectory: Vec<Point2> = Vec::new();
    let (mut travel, mut seg_dist, mut seg_rot) = (0.0f64, 0.0f64, 0.0f64);
    let mut last_closure = 0.0f64;
    let mut stalled = 0usize;
    let mut tick: u64 = 0;

    loop {
        if tick >= cfg.explore.max_ticks {
            return Err(Error::TickBudgetExceeded { ticks: tick });
        }
        if active.is_none() {
            if !graph.is_empty() {
                let d = cfg.drift.sample(seg_dist, seg_rot, &mut rng);
                error = error.compose(&truth).compose(&d).compose(&truth.inverse());
            }
            seg_dist = 0.0;
            seg_rot = 0.0;
            active = Some(Active {
                builder: SubmapBuilder::new(SubmapId(graph.len() as u32), res, half_extent, scans),
                frame: snap_to_lattice(world, &truth),
            });
        }

        let scan = raycast_scan(world, &truth, &cfg.sensor)?;
        mark_observed(world, &truth, &scan, &mut observed);
        let act = active.as_mut().expect("active submap");
        let local = act.frame.inverse().compose(&truth);
        let full = act.builder.integrate_scan(&local, &scan)?;

        if full {
            let Active { builder, frame } = active.take().expect("active submap");
            let submap_pose = error.compose(&frame);
            let id = builder.finish_into(&mut graph, submap_pose, &params)?;
            truth_poses.insert(id, frame);
            finish_travel.insert(id, travel);

            let here = error.compose(&truth).translation();
            let closure = travel - last_closure >= closure_travel
                && graph.finished_ids().any(|j| {
                    j != id
                        && travel - finish_travel[&j] >= closure_travel
                        && graph.bounding_box(j).is_ok_and(|b| b.contains(here))
                });
            if closure {
                last_closure = travel;
            }
            let strength = if closure {
                1.0
            } else {
                cfg.optimization.strength
            };
            let round = rounds.len() as u32;
            let event =
                optimization_step(&graph, &truth_poses, strength, &jitter, round, id, &mut rng)?;
            error = error.interpolate(&Pose2D::identity(), strength);
            apply_event(&mut graph, &event)?;
            let report = run_update(cfg.incremental.strategy, &mut graph, &event, &deviation)?;
            update_seconds.push(report.elapsed_s);

            let robot = error.compose(&truth);
            let fused = graph
                .fuse_global_map(Layer::Raw)
                .expect("a finished submap exists");
            let planning = inflate(&fused, radius);
            let (rx, ry) = planning.world_to_raster(robot.translation());
            let robot_cell = find_seed(&planning, (rx, ry), 2 * radius);
            let nav = match robot_cell {
                Some(cell) => {
                    navigation_points(&graph, &fused, &planning, &robot, cell, &blacklist, cfg)?
                }
                None => Vec::new(),
            };
            path.clear();
            target = None;
            if let Some(cell) = robot_cell {
                let start = planning.cell_to_world_center(cell);
                let from = Pose2D::new(start.x, start.y, robot.theta);
                for np in &nav {
                    if let Some(p) = plan_path(&planning, &from, np.point)? {
                        path = p.into();
                        target = Some(np.point);
                        break;
                    }
                }
            }

            let prev_observed = observed_count;
            observed_count = observed.iter().filter(|&&b| b).count();
            rounds.push(RoundRecord {
                round,
                tick,
                latest_submap: id,
                submap_pose,
                loop_closure: closure,
                strength,
                corrected_poses: event.corrected_poses,
                report: report.without_timing(),
                global_frontiers: graph
                    .finished_ids()
                    .map(|s| (s, graph.global_frontiers_of(s).to_vec()))
                    .filter(|(_, v)| !v.is_empty())
                    .collect(),
                navigation_points: nav.clone(),
                target,
                robot,
                trajectory: std::mem::take(&mut trajectory),
                observed_cells: observed_count,
            });

            if robot_cell.is_some() && nav.is_empty() {
                break;
            }
            stalled = if observed_count > prev_observed {
                0
            } else {
                stalled + 1
            };
            if stalled >= cfg.explore.no_progress_rounds {
                return Err(Error::NoProgress { rounds: stalled });
            }
        }

        // motion
        let est = error.compose(&truth);
        if path.is_empty() {
            truth = Pose2D::new(truth.x, truth.y, truth.theta + cfg.robot.rotation_step);
            seg_rot += cfg.robot.rotation_step;
        } else {
            let mut pos = est.translation();
            let mut remaining = res;
            while remaining > 1e-12 {
                let Some(&wp) = path.front() else { break };
                let d = pos.distance(&wp);
                if d <= remaining {
                    pos = wp;
                    remaining -= d;
                    path.pop_front();
                } else {
                    pos = Point2::new(
                        pos.x + (wp.x - pos.x) / d * remaining,
                        pos.y + (wp.y - pos.y) / d * remaining,
                    );
                    remaining = 0.0;
                }
            }
            let moved = res - remaining;
            let heading = if moved > 1e-12 {
                (pos.y - est.y).atan2(pos.x - est.x)
            } else {
                est.theta
            };
            let next_truth = error.inverse().compose(&Pose2D::new(pos.x, pos.y, heading));
            let free = world
                .truth()
                .world_to_cell(next_truth.translation())
                .is_some_and(|c| world.truth().label(c) == CellLabel::Free);
            if free {
                seg_rot += normalize_angle(next_truth.theta - truth.theta).abs();
                seg_dist += moved;
                travel += moved;
                truth = next_truth;
                if moved > 1e-12 {
                    trajectory.push(pos);
                }
            } else {
                path.clear();
            }
            if path.is_empty() {
                if let Some(t) = target.take() {
                    blacklist.push(t);
                }
            }
        }
        tick += 1;
    }

    Ok(Exploration {
        log: ExplorationLog { rounds },
        graph,
        truth_poses,
        observed,
        update_seconds,
        ticks: tick,
        travel,
        inflation_radius: radius,
    })
}
