mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use submap_frontiers::bench::{frontier_set, Confusion};
use submap_frontiers::clustering::{
    mean_shift, prioritize, MeanShiftConfig, NavigationPoint, PriorityConfig,
};
use submap_frontiers::frontier::detect_local_frontiers;
use submap_frontiers::grid::{CellLabel, Connectivity, OccupancyGrid, Point2, Pose2D};
use submap_frontiers::incremental::{
    apply_event, update_bfs, update_dfd, update_direct, DeviationConfig, OptimizationEvent,
};
use submap_frontiers::oracle;
use submap_frontiers::submap_graph::{SubmapGraph, SubmapId};

/// Random finished submaps with their global frontier established, as it
/// is after each submap's insertion round in a real run.
fn seeded_graph(rng: &mut ChaCha8Rng, max_submaps: usize) -> SubmapGraph {
    let mut g = common::random_graph(rng, max_submaps);
    let start = OptimizationEvent {
        round: 0,
        corrected_poses: BTreeMap::new(),
        latest_submap: SubmapId(g.len() as u32 - 1),
    };
    update_dfd(&mut g, &start).unwrap();
    g
}

/// Random corrections for a few rounds: each round nudges a random subset
/// of submaps by up to `scale` meters (and scale/4 radians).
fn events(
    rng: &mut ChaCha8Rng,
    graph: &SubmapGraph,
    rounds: u32,
    scale: f64,
) -> Vec<OptimizationEvent> {
    let n = graph.len() as u32;
    let mut poses: Vec<Pose2D> = graph.submaps().iter().map(|s| s.current_pose()).collect();
    (1..=rounds)
        .map(|round| {
            let mut corrected = BTreeMap::new();
            for i in 0..n {
                if rng.random_bool(0.4) {
                    let p = &mut poses[i as usize];
                    p.x += rng.random_range(-scale..scale);
                    p.y += rng.random_range(-scale..scale);
                    p.theta += rng.random_range(-scale..scale) / 4.0;
                    corrected.insert(SubmapId(i), *p);
                }
            }
            OptimizationEvent {
                round,
                corrected_poses: corrected,
                latest_submap: SubmapId(n - 1),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn local_frontiers_match_the_definition(seed in any::<u64>(), eight in any::<bool>()) {
        let mut rng = common::rng(seed);
        let g = common::random_grid(&mut rng, 40, 32, 0.05, Pose2D::identity());
        let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
        let free: Vec<_> = g.iter_cells().filter(|&c| g.label(c) == CellLabel::Free).collect();
        let start = free[rng.random_range(0..free.len())];
        let got = detect_local_frontiers(&g, start, conn).unwrap();
        prop_assert_eq!(&got, &oracle::frontier_cells(&g, start, conn));
        for c in got {
            prop_assert_eq!(g.label(c), CellLabel::Free);
            prop_assert!(g.neighbors(c, conn).any(|n| g.label(n) == CellLabel::Unknown));
        }
    }

    #[test]
    fn dfd_tracks_brute_force_through_corrections(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut g = seeded_graph(&mut rng, 8);
        for e in events(&mut rng, &g, 4, 0.3) {
            apply_event(&mut g, &e).unwrap();
            update_dfd(&mut g, &e).unwrap();
            prop_assert_eq!(frontier_set(&g), oracle::global_frontiers(&g));
        }
    }

    #[test]
    fn direct_with_tiny_threshold_equals_dfd(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let base = seeded_graph(&mut rng, 8);
        let (mut dfd, mut direct) = (base.clone(), base);
        let cfg = DeviationConfig::with_epsilon(1e-9);
        for e in events(&mut rng, &dfd, 5, 0.1) {
            apply_event(&mut dfd, &e).unwrap();
            apply_event(&mut direct, &e).unwrap();
            let a = update_dfd(&mut dfd, &e).unwrap();
            let b = update_direct(&mut direct, &e, &cfg).unwrap();
            prop_assert!(b.queried_points <= a.queried_points);
            prop_assert_eq!(frontier_set(&direct), frontier_set(&dfd));
        }
    }

    #[test]
    fn incremental_work_is_bounded_by_dfd(seed in any::<u64>(), eps in 0.001..0.3f64) {
        let mut rng = common::rng(seed);
        let base = seeded_graph(&mut rng, 10);
        let (mut dfd, mut bfs, mut direct) = (base.clone(), base.clone(), base);
        let cfg = DeviationConfig::with_epsilon(eps);
        for e in events(&mut rng, &dfd, 4, 0.1) {
            for g in [&mut dfd, &mut bfs, &mut direct] {
                apply_event(g, &e).unwrap();
            }
            let a = update_dfd(&mut dfd, &e).unwrap();
            let b = update_bfs(&mut bfs, &e, &cfg).unwrap();
            let d = update_direct(&mut direct, &e, &cfg).unwrap();
            prop_assert!(b.queried_points <= a.queried_points);
            prop_assert!(d.queried_points <= a.queried_points);
            prop_assert!(b.queried_submaps.contains(&e.latest_submap));
            prop_assert!(d.queried_submaps.contains(&e.latest_submap));
            // every global point is a local frontier point of its submap
            for g in [&bfs, &direct] {
                for (id, c) in frontier_set(g) {
                    prop_assert!(g.submap(id).unwrap().is_local_frontier(c));
                }
            }
        }
    }

    #[test]
    fn mean_shift_partitions_its_input(
        pts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..80),
        bw in 0.3..3.0f64,
    ) {
        let points: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let cfg = MeanShiftConfig { bandwidth: bw, ..MeanShiftConfig::default() };
        let clusters = mean_shift(&points, &cfg).unwrap();
        let mut members: Vec<(u64, u64)> = clusters
            .iter()
            .flat_map(|c| c.members.iter().map(|p| (p.x.to_bits(), p.y.to_bits())))
            .collect();
        let mut input: Vec<(u64, u64)> = points.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
        members.sort_unstable();
        input.sort_unstable();
        prop_assert_eq!(members, input);
        for (i, a) in clusters.iter().enumerate() {
            prop_assert!(!a.members.is_empty());
            for b in &clusters[i + 1..] {
                prop_assert!(a.mode.distance(&b.mode) >= bw / 2.0);
            }
        }
    }

    #[test]
    fn prioritize_sorts_a_permutation(
        pts in prop::collection::vec((0.0..3.0f64, 0.0..3.0f64), 0..30),
        rx in 0.0..3.0f64,
        ry in 0.0..3.0f64,
    ) {
        let map = OccupancyGrid::new(60, 60, 0.05, Pose2D::identity());
        let input: Vec<NavigationPoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| NavigationPoint {
                point: Point2::new(x, y),
                component: i,
                component_size: 1,
                score: 0.0,
            })
            .collect();
        let robot = Pose2D::new(rx, ry, 0.0);
        let out = prioritize(input.clone(), &robot, &map, &PriorityConfig::default()).unwrap();
        let mut ids: Vec<usize> = out.iter().map(|n| n.component).collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..input.len()).collect::<Vec<_>>());
        prop_assert!(out.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn confusion_counts_cover_the_universe(
        base in prop::collection::btree_set(0u32..50, 0..30),
        got in prop::collection::btree_set(0u32..50, 0..30),
    ) {
        let to_set = |s: &std::collections::BTreeSet<u32>| {
            s.iter().map(|&x| (SubmapId(0), submap_frontiers::grid::Cell::new(x, 0))).collect()
        };
        let c = Confusion::of(&to_set(&got), &to_set(&base), 50);
        prop_assert_eq!(c.total(), 50);
        prop_assert_eq!(c.mismatches(), got.symmetric_difference(&base).count());
        prop_assert!((c.mismatch_rate() - c.mismatches() as f64 / 50.0).abs() < 1e-12);
    }
}
