use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use submap_frontiers::bench::{
    compare, oracle_check, render_round, replay, write_comparison_csv, write_summary_csv,
    RenderOptions,
};
use submap_frontiers::grid::write_grid;
use submap_frontiers::incremental::{write_report_csv, ReportRow, Strategy};
use submap_frontiers::sim::{builtin, explore, ExplorationLog, SimConfig, World, BUILTIN_WORLDS};
use submap_frontiers::submap_graph::{load_snapshot, save_snapshot, Layer, SubmapGraph};
use submap_frontiers::{Error, Result};

const LOG: &str = "log.ndjson";
const SNAPSHOT: &str = "snapshot";
const CONFIG: &str = "config.toml";

#[derive(Parser)]
#[command(
    name = "frontier-bench",
    version,
    about = "Run, replay and score frontier explorations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore a world and write the log, snapshot, map and per-round CSV.
    Explore {
        /// Built-in world name or path to a PGM world with a JSON sidecar.
        #[arg(long)]
        world: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the drift RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the update strategy (dfd, bfs, direct).
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Replay a run under every strategy and score BFS and Direct against DFD.
    Compare {
        run: PathBuf,
        /// Deviation threshold in meters; repeatable. Defaults to 0.01, 0.05, 0.20.
        #[arg(long = "epsilon")]
        epsilons: Vec<f64>,
        /// Output directory for comparison.csv and summary.csv (default: the run).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the fused map of one round to PNG.
    Render {
        run: PathBuf,
        #[arg(long)]
        round: usize,
        #[arg(long)]
        out: PathBuf,
        /// Pixels per cell.
        #[arg(long, default_value_t = 2)]
        scale: u32,
    },
    /// Check a run against the brute-force references.
    OracleCheck { run: PathBuf },
    /// Write a built-in world as PGM plus JSON sidecar.
    World {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct RunSummary<'a> {
    world: &'a str,
    rounds: usize,
    ticks: u64,
    travel_m: f64,
    coverage: f64,
    loop_closures: usize,
}

fn load_world(arg: &str) -> Result<World> {
    match builtin(arg) {
        Some(w) => Ok(w),
        None if Path::new(arg).exists() => World::load(Path::new(arg)),
        None => Err(Error::InvalidArgument(format!(
            "world {arg:?} is neither a file nor one of {}",
            BUILTIN_WORLDS.join(", ")
        ))),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

struct Run {
    log: ExplorationLog,
    graph: SubmapGraph,
    config: SimConfig,
    inflation_radius: u32,
    connectivity: submap_frontiers::grid::Connectivity,
}

fn load_run(dir: &Path) -> Result<Run> {
    let log = ExplorationLog::read(&dir.join(LOG))?;
    let (graph, manifest) = load_snapshot(&dir.join(SNAPSHOT))?;
    let config = SimConfig::load(&dir.join(CONFIG))?;
    Ok(Run {
        log,
        graph,
        config,
        inflation_radius: manifest.inflation_radius,
        connectivity: manifest.connectivity,
    })
}

fn cmd_explore(
    world: &str,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    strategy: Option<Strategy>,
) -> Result<()> {
    let w = load_world(world)?;
    let mut cfg = match config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.drift.rng_seed = s;
    }
    if let Some(s) = strategy {
        cfg.incremental.strategy = s;
    }
    cfg.validate()?;
    create_dir(out)?;
    let run = explore(&w, &cfg)?;

    run.log.write(&out.join(LOG))?;
    save_snapshot(
        &run.graph,
        &out.join(SNAPSHOT),
        run.inflation_radius,
        cfg.submap.connectivity,
    )?;
    write(&out.join(CONFIG), cfg.to_toml())?;

    let fused = run
        .graph
        .fuse_global_map(Layer::Raw)
        .expect("explore finishes a submap");
    write_grid(&out.join("map.pgm"), &fused)?;
    let last = run.log.rounds.len() - 1;
    let opts = RenderOptions {
        scale: 2,
        tint_queried: false,
    };
    let png = out.join("map.png");
    render_round(&run.log, &run.graph, last, &opts)?.save(&png)?;

    let dfd = replay(&run.log, &run.graph, Strategy::Dfd, &cfg.deviation())?;
    let rows: Vec<ReportRow> = run
        .log
        .rounds
        .iter()
        .zip(&dfd)
        .zip(&run.update_seconds)
        .map(|((rec, base), &secs)| {
            let logged: submap_frontiers::bench::FrontierSet = rec
                .global_frontiers
                .iter()
                .flat_map(|(&id, cells)| cells.iter().map(move |&c| (id, c)))
                .collect();
            let mut report = rec.report.clone();
            report.elapsed_s = secs;
            ReportRow::new(&report, logged.symmetric_difference(&base.global).count())
        })
        .collect();
    let csv_path = out.join("rounds.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::File {
        path: csv_path.clone(),
        source: e,
    })?;
    write_report_csv(file, &rows)?;

    let summary = RunSummary {
        world,
        rounds: run.log.rounds.len(),
        ticks: run.ticks,
        travel_m: run.travel,
        coverage: run.coverage(&w),
        loop_closures: run.log.rounds.iter().filter(|r| r.loop_closure).count(),
    };
    write(
        &out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{} rounds, {} ticks, coverage {:.4}; wrote {}",
        summary.rounds,
        summary.ticks,
        summary.coverage,
        out.display()
    );
    Ok(())
}

fn cmd_compare(run_dir: &Path, epsilons: &[f64], out: Option<&Path>) -> Result<()> {
    let run = load_run(run_dir)?;
    let epsilons = if epsilons.is_empty() {
        vec![0.01, 0.05, 0.20]
    } else {
        epsilons.to_vec()
    };
    let mut metrics = Vec::with_capacity(epsilons.len());
    for eps in epsilons {
        let mut cfg = run.config.deviation();
        cfg.epsilon = eps;
        let m = compare(&run.log, &run.graph, &cfg)?;
        println!(
            "epsilon {eps}: performance bfs {:.4} direct {:.4}; mismatches bfs {} direct {}",
            m.performance_bfs,
            m.performance_direct,
            m.totals.bfs_mismatch,
            m.totals.direct_mismatch
        );
        metrics.push(m);
    }
    let out = out.unwrap_or(run_dir);
    create_dir(out)?;
    for (name, f) in [
        (
            "comparison.csv",
            write_comparison_csv as fn(fs::File, &[_]) -> Result<()>,
        ),
        ("summary.csv", write_summary_csv),
    ] {
        let path = out.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::File {
            path: path.clone(),
            source: e,
        })?;
        f(file, &metrics)?;
    }
    Ok(())
}

fn cmd_render(run_dir: &Path, round: usize, out: &Path, scale: u32) -> Result<()> {
    let log = ExplorationLog::read(&run_dir.join(LOG))?;
    let (graph, _) = load_snapshot(&run_dir.join(SNAPSHOT))?;
    let opts = RenderOptions {
        scale,
        ..RenderOptions::default()
    };
    render_round(&log, &graph, round, &opts)?.save(out)?;
    Ok(())
}

fn cmd_oracle_check(run_dir: &Path) -> Result<bool> {
    let run = load_run(run_dir)?;
    let report = oracle_check(
        &run.log,
        &run.graph,
        run.inflation_radius,
        run.connectivity,
        &run.config.deviation(),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed())
}

fn cmd_world(name: &str, out: &Path) -> Result<()> {
    let w = builtin(name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown world {name:?}; choose one of {}",
            BUILTIN_WORLDS.join(", ")
        ))
    })?;
    w.save(out)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Explore {
            world,
            config,
            out,
            seed,
            strategy,
        } => cmd_explore(&world, config.as_deref(), &out, seed, strategy).map(|_| true),
        Command::Compare { run, epsilons, out } => {
            cmd_compare(&run, &epsilons, out.as_deref()).map(|_| true)
        }
        Command::Render {
            run,
            round,
            out,
            scale,
        } => cmd_render(&run, round, &out, scale).map(|_| true),
        Command::OracleCheck { run } => cmd_oracle_check(&run),
        Command::World { name, out } => cmd_world(&name, &out).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: oracle check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
