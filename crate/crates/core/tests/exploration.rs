use std::collections::BTreeSet;

use submap_frontiers::bench::{
    frontier_set, oracle_check, render_round, replay, RenderOptions, Replayer,
};
use submap_frontiers::incremental::{update_dfd, Strategy};
use submap_frontiers::sim::{builtin, explore, ExplorationLog, SimConfig};
use submap_frontiers::submap_graph::{load_snapshot, save_snapshot, Layer};

#[test]
fn sealed_room_gets_no_navigation_point() {
    let world = builtin("two-rooms").unwrap();
    let run = explore(&world, &SimConfig::default()).unwrap();
    // the second room starts past the dividing wall at x = 6.1 m
    for rec in &run.log.rounds {
        for np in &rec.navigation_points {
            assert!(np.point.x < 6.1, "round {}: {:?}", rec.round, np.point);
        }
    }
    assert!(run.coverage(&world) < 0.6);
}

#[test]
fn closed_room_finishes_after_one_round() {
    let world = builtin("closed-room").unwrap();
    let run = explore(&world, &SimConfig::default()).unwrap();
    assert_eq!(run.log.rounds.len(), 1);
    assert!(run.log.rounds[0].navigation_points.is_empty());
    assert!(run.coverage(&world) > 0.99);
}

#[test]
fn replay_reproduces_the_logged_rounds() {
    let world = builtin("loop").unwrap();
    let cfg = SimConfig::default();
    let run = explore(&world, &cfg).unwrap();
    let rounds = replay(
        &run.log,
        &run.graph,
        cfg.incremental.strategy,
        &cfg.deviation(),
    )
    .unwrap();
    for (rec, r) in run.log.rounds.iter().zip(&rounds) {
        assert_eq!(r.report.without_timing(), rec.report);
        let logged: BTreeSet<_> = rec
            .global_frontiers
            .iter()
            .flat_map(|(&id, cells)| cells.iter().map(move |&c| (id, c)))
            .collect();
        assert_eq!(r.global, logged, "round {}", rec.round);
    }
    let report = oracle_check(
        &run.log,
        &run.graph,
        run.inflation_radius,
        cfg.submap.connectivity,
        &cfg.deviation(),
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.rounds_checked, run.log.rounds.len());
}

#[test]
fn log_and_snapshot_round_trip_through_disk() {
    let world = builtin("corridor").unwrap();
    let cfg = SimConfig::default();
    let run = explore(&world, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("log.ndjson");
    run.log.write(&log_path).unwrap();
    save_snapshot(
        &run.graph,
        &dir.path().join("snap"),
        run.inflation_radius,
        cfg.submap.connectivity,
    )
    .unwrap();
    let log = ExplorationLog::read(&log_path).unwrap();
    assert_eq!(log, run.log);
    let (graph, _) = load_snapshot(&dir.path().join("snap")).unwrap();
    let a = replay(&log, &graph, Strategy::Dfd, &cfg.deviation()).unwrap();
    let b = replay(&run.log, &run.graph, Strategy::Dfd, &cfg.deviation()).unwrap();
    assert_eq!(a.last().unwrap().global, b.last().unwrap().global);
}

#[test]
fn loop_closure_widens_the_query() {
    let world = builtin("two-loop").unwrap();
    let cfg = SimConfig::default();
    let run = explore(&world, &cfg).unwrap();
    let closure = run
        .log
        .rounds
        .iter()
        .find(|r| r.loop_closure)
        .expect("the two-loop world closes a loop");
    assert_eq!(closure.strength, 1.0);
    let ordinary: Vec<usize> = run
        .log
        .rounds
        .iter()
        .filter(|r| !r.loop_closure && r.round > 0)
        .map(|r| r.report.queried_submaps.len())
        .collect();
    let typical = ordinary.iter().sum::<usize>() as f64 / ordinary.len() as f64;
    assert!(
        closure.report.queried_submaps.len() as f64 > 2.0 * typical,
        "closure queried {} submaps, ordinary rounds {typical:.1}",
        closure.report.queried_submaps.len()
    );
    // the closure query reaches back to submaps finished long before
    let oldest = closure.report.queried_submaps[0];
    assert!(oldest.0 + 10 < closure.latest_submap.0);
}

#[test]
fn rendering_tracks_the_log() {
    let world = builtin("corridor").unwrap();
    let run = explore(&world, &SimConfig::default()).unwrap();
    let opts = RenderOptions {
        scale: 1,
        tint_queried: true,
    };
    let mut rep = Replayer::new(&run.log, &run.graph);
    let (_, first) = rep.advance().unwrap().unwrap();
    let fused = first.fuse_global_map(Layer::Raw).unwrap();
    let img = render_round(&run.log, &run.graph, 0, &opts).unwrap();
    assert_eq!(
        (img.width() as usize, img.height() as usize),
        (fused.width(), fused.height())
    );
    let last = run.log.rounds.len() - 1;
    assert!(render_round(&run.log, &run.graph, last + 1, &opts).is_err());

    // one trajectory vertex per movement tick, each one resolution step apart
    let traj = run.log.trajectory();
    assert!(!traj.is_empty());
    for w in traj.windows(2) {
        assert!(w[0].distance(&w[1]) <= 0.05 * 2f64.sqrt() + 1e-9);
    }
}

#[test]
fn dfd_replay_matches_the_brute_force_global_frontier() {
    let world = builtin("loop").unwrap();
    let run = explore(&world, &SimConfig::default()).unwrap();
    let mut rep = Replayer::new(&run.log, &run.graph);
    while let Some((rec, graph)) = rep.advance().unwrap() {
        let event = submap_frontiers::bench::event_of(rec);
        update_dfd(graph, &event).unwrap();
        assert_eq!(
            frontier_set(graph),
            submap_frontiers::oracle::global_frontiers(graph)
        );
    }
}
