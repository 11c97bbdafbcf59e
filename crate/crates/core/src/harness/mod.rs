//! Pipelines behind the command-line tool: each command reads a
//! [`RunConfig`], writes its artifacts into the output directory and
//! records them, with checksums, in `manifest.json`.
//!
//! Exit status contract (see [`Error::exit_code`]): 0 success, 1 invalid
//! configuration or input, 2 I/O failure, 3 the planner found no path.

mod config;
mod manifest;
pub mod render;

pub use config::{
    Command, EvalSettings, MapSettings, PlanSettings, ReplaySettings, RunConfig, ScenarioRef, OUT_DIR_ENV,
};
pub use manifest::{FileDigest, RunManifest, SEEDED_MODULES};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{
    evaluation_seeds, run_evaluation, run_training, write_curve_csv, write_trace_csv, CurveRow, EvalPolicy,
    EvalReport, TraceRow, TrainOptions,
};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lidar::STATE_DIM;
use crate::mapping::{estimate_rotation, extract_corners, load_map, save_map, survey, MapSidecar};
use crate::nn::{load_checkpoint_for, save_checkpoint};
use crate::planner::{
    inverse_transform_point, plan_rrt, transform_path, write_path_csv, TransformConfig, TransformMode,
};
use crate::seed::derive_seed;
use crate::world::{DoneReason, N_ACTIONS};

use manifest::ManifestBuilder;

/// Validate the config and make sure the output directory exists and
/// accepts files.
fn begin(command: Command, cfg: &RunConfig) -> Result<ManifestBuilder> {
    cfg.validate()?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(ManifestBuilder::start(command, cfg))
}

fn require_file(path: &Path, field: &str, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{} not found{hint}", path.display())))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

/// Dispatch a command with no progress reporting.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunManifest> {
    match command {
        Command::Map => cmd_map(cfg),
        Command::Plan => cmd_plan(cfg),
        Command::Train => cmd_train(cfg, None),
        Command::Eval => cmd_eval(cfg),
        Command::Replay => cmd_replay(cfg),
    }
}

/// Survey the scenario from the configured poses and export `map.pgm`,
/// its `map.json` sidecar and the surveyed `scenario.json`.
pub fn cmd_map(cfg: &RunConfig) -> Result<RunManifest> {
    let mut m = begin(Command::Map, cfg)?;
    if let ScenarioRef::File(p) = &cfg.scenario {
        m.input(p)?;
    }
    let world = cfg.scenario.world(cfg.seed)?;
    let poses = cfg.map.survey_poses(&world);
    let s = survey(&world, &poses, &cfg.map.survey_options())?;
    let sidecar = MapSidecar {
        image: "map.pgm".into(),
        resolution: s.grid.resolution,
        origin: s.grid.origin,
        width: s.grid.width,
        height: s.grid.height,
        corners: extract_corners(&s.grid).ok(),
        rotation: estimate_rotation(&s.grid, cfg.map.rotation_weights).ok().map(|r| r.theta),
        world_bounds: Some([world.x_min, world.x_max, world.y_min, world.y_max]),
    };
    let pgm = cfg.out("map.pgm");
    save_map(&s.grid, &pgm, &sidecar)?;
    let scenario = cfg.out("scenario.json");
    world.save_json(&scenario)?;
    for p in [&pgm, &pgm.with_extension("json"), &scenario] {
        m.artifact(p)?;
    }
    m.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub found: bool,
    pub iterations: usize,
    pub tree_nodes: usize,
    pub mode: TransformMode,
    /// Rotation handed to the transform, radians.
    pub theta: f64,
    pub start_world: Vec2,
    pub goal_world: Vec2,
    pub start_pixel: Vec2,
    pub goal_pixel: Vec2,
    pub waypoints: usize,
    /// Length of the world-frame path in meters.
    pub length: f64,
}

/// Plan from start to goal on the stored map and write `path.csv`,
/// `tree.json` and `plan.json`. When the iteration budget runs out the tree
/// and manifest are still written and [`Error::NoPath`] is returned.
pub fn cmd_plan(cfg: &RunConfig) -> Result<RunManifest> {
    let mut m = begin(Command::Plan, cfg)?;
    let map_path = cfg.plan.map.clone().unwrap_or_else(|| cfg.out("map.pgm"));
    require_file(&map_path, "plan.map", "; run `map` first")?;
    m.input(&map_path)?;
    m.input(&map_path.with_extension("json"))?;
    if let ScenarioRef::File(p) = &cfg.scenario {
        m.input(p)?;
    }
    let (grid, sidecar) = load_map(&map_path)?;
    let world = cfg.scenario.world(cfg.seed)?;
    let start_world = cfg.plan.start.unwrap_or(world.start);
    let goal_world = cfg.plan.goal.unwrap_or(world.goal);

    let corners = sidecar
        .corners
        .ok_or_else(|| Error::config("plan.map", "map sidecar has no corners"))?;
    let [x_min_g, x_max_g, y_min_g, y_max_g] =
        sidecar
            .world_bounds
            .unwrap_or([world.x_min, world.x_max, world.y_min, world.y_max]);
    let tcfg = TransformConfig {
        corners,
        x_min_g,
        x_max_g,
        y_min_g,
        y_max_g,
        // The sidecar stores how far the walls are turned; undo it.
        theta: -sidecar.rotation.unwrap_or(0.0),
        mode: cfg.plan.transform,
    };
    tcfg.validate()?;
    let to_pixel = |w: Vec2| match tcfg.mode {
        TransformMode::Affine => inverse_transform_point(w, &tcfg),
        TransformMode::Literal => Ok(grid.world_to_pixel(w)),
    };
    let (start_pixel, goal_pixel) = (to_pixel(start_world)?, to_pixel(goal_world)?);

    let rrt = cfg.plan.rrt(derive_seed(cfg.seed, "mission-planner"));
    let result = plan_rrt(&grid, start_pixel, goal_pixel, &rrt)?;
    let tree_path = cfg.out("tree.json");
    result.tree.write_json(&tree_path)?;
    m.artifact(&tree_path)?;

    let mut summary = PlanSummary {
        found: result.path.is_some(),
        iterations: result.iterations,
        tree_nodes: result.tree.nodes.len(),
        mode: tcfg.mode,
        theta: tcfg.theta,
        start_world,
        goal_world,
        start_pixel,
        goal_pixel,
        waypoints: 0,
        length: 0.0,
    };
    let csv = cfg.out("path.csv");
    if let Some(px) = &result.path {
        let wp = transform_path(px, &tcfg)?;
        summary.waypoints = wp.0.len();
        summary.length = wp.0.windows(2).map(|w| w[0].distance(w[1])).sum();
        write_path_csv(&csv, px, &wp)?;
        m.artifact(&csv)?;
    } else if csv.exists() {
        // never leave a previous run's path next to a failed plan
        std::fs::remove_file(&csv).map_err(|e| Error::io(&csv, e))?;
    }
    let plan_json = cfg.out("plan.json");
    write_json(&plan_json, &summary)?;
    m.artifact(&plan_json)?;
    let manifest = m.finish()?;
    if summary.found {
        Ok(manifest)
    } else {
        Err(Error::NoPath {
            iterations: result.iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub episodes: usize,
    pub env_steps: u64,
    pub buffer_len: usize,
    pub reset_collisions: usize,
    pub final_rolling_avg: Option<f64>,
}

/// Train from scratch and write `policy.ckpt`, `curve.csv` and
/// `train.json`. If training diverges, the last good weights go to
/// `aborted.ckpt` and the error is returned.
pub fn cmd_train(cfg: &RunConfig, on_episode: Option<&mut dyn FnMut(&CurveRow)>) -> Result<RunManifest> {
    let mut m = begin(Command::Train, cfg)?;
    if let ScenarioRef::File(p) = &cfg.scenario {
        m.input(p)?;
    }
    let source = cfg.scenario.source()?;
    let out = run_training(
        &cfg.agent,
        &source,
        cfg.seed,
        TrainOptions {
            abort_checkpoint: Some(cfg.out("aborted.ckpt")),
            on_episode,
        },
    )?;
    let ckpt = cfg.out("policy.ckpt");
    let meta = serde_json::json!({
        "seed": cfg.seed,
        "episodes": out.curve.len(),
        "env_steps": out.env_steps,
    });
    save_checkpoint(&out.policy, &out.optimizer, meta, &ckpt)?;
    let curve = cfg.out("curve.csv");
    write_curve_csv(&curve, &out.curve)?;
    let summary_path = cfg.out("train.json");
    write_json(
        &summary_path,
        &TrainSummary {
            episodes: out.curve.len(),
            env_steps: out.env_steps,
            buffer_len: out.buffer_len,
            reset_collisions: out.reset_collisions,
            final_rolling_avg: out.curve.last().map(|r| r.rolling_avg),
        },
    )?;
    for p in [&ckpt, &curve, &summary_path] {
        m.artifact(p)?;
    }
    m.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub index: usize,
    pub seed: u64,
    pub target: Vec2,
    pub reason: DoneReason,
    pub steps: u32,
    pub score: f64,
    /// Trace file, relative to the summary.
    pub trace: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub scenario: ScenarioRef,
    pub checkpoint: PathBuf,
    pub success_rate: f64,
    pub collisions: usize,
    pub step_limits: usize,
    pub out_of_bounds: usize,
    pub baseline_success_rate: Option<f64>,
    pub episodes: Vec<EpisodeSummary>,
}

/// Fly the stored policy greedily on `eval.episodes` seeded scenarios and
/// write one trace per episode plus `eval.json`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<RunManifest> {
    let mut m = begin(Command::Eval, cfg)?;
    let ckpt = cfg.eval.checkpoint.clone().unwrap_or_else(|| cfg.out("policy.ckpt"));
    require_file(&ckpt, "eval.checkpoint", "; run `train` first")?;
    m.input(&ckpt)?;
    if let ScenarioRef::File(p) = &cfg.scenario {
        m.input(p)?;
    }
    let (net, _, _) = load_checkpoint_for(&ckpt, STATE_DIM, N_ACTIONS)?;
    let source = cfg.scenario.source()?;
    let seeds = evaluation_seeds(cfg.seed, cfg.eval.episodes);
    let report = run_evaluation(EvalPolicy::Greedy(&net), &cfg.agent, &source, &seeds, cfg.eval.jobs)?;
    let baseline = if cfg.eval.baseline {
        Some(run_evaluation(EvalPolicy::Random, &cfg.agent, &source, &seeds, cfg.eval.jobs)?)
    } else {
        None
    };

    let traces = cfg.out("traces");
    std::fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    let mut episodes = Vec::with_capacity(report.episodes.len());
    for (index, e) in report.episodes.iter().enumerate() {
        let rel = PathBuf::from("traces").join(format!("episode_{index:03}.csv"));
        let path = cfg.out_dir.join(&rel);
        write_trace_csv(&path, &e.trace)?;
        m.artifact(&path)?;
        episodes.push(EpisodeSummary {
            index,
            seed: e.seed,
            target: e.target,
            reason: e.reason,
            steps: e.steps,
            score: e.score,
            trace: rel,
        });
    }
    let summary = EvalSummary {
        scenario: cfg.scenario.clone(),
        checkpoint: ckpt,
        success_rate: report.success_rate(),
        collisions: report.count(DoneReason::Collision),
        step_limits: report.count(DoneReason::StepLimit),
        out_of_bounds: report.count(DoneReason::OutOfBounds),
        baseline_success_rate: baseline.as_ref().map(EvalReport::success_rate),
        episodes,
    };
    let path = cfg.out("eval.json");
    write_json(&path, &summary)?;
    m.artifact(&path)?;
    m.finish()
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Render one evaluated episode as `replay_NNN.ppm`: obstacles in grey,
/// the flown path in red, start in green and the target (with its arrival
/// radius) in blue.
pub fn cmd_replay(cfg: &RunConfig) -> Result<RunManifest> {
    let mut m = begin(Command::Replay, cfg)?;
    let eval_path = cfg.replay.eval.clone().unwrap_or_else(|| cfg.out("eval.json"));
    require_file(&eval_path, "replay.eval", "; run `eval` first")?;
    m.input(&eval_path)?;
    let text = std::fs::read_to_string(&eval_path).map_err(|e| Error::io(&eval_path, e))?;
    let summary: EvalSummary = serde_json::from_str(&text)?;
    let ep = summary.episodes.get(cfg.replay.episode).ok_or_else(|| {
        Error::config(
            "replay.episode",
            format!("{} has {} episodes", eval_path.display(), summary.episodes.len()),
        )
    })?;
    let trace_path = eval_path.parent().unwrap_or(Path::new(".")).join(&ep.trace);
    require_file(&trace_path, "replay.eval", "")?;
    m.input(&trace_path)?;
    let rows = read_trace_csv(&trace_path)?;
    let world = summary.scenario.source()?.world(ep.seed);

    let mut canvas = render::Canvas::for_world(&world, cfg.replay.pixels_per_meter)?;
    canvas.fill_obstacles(&world);
    canvas.ring(ep.target, cfg.agent.episode.target_radius, render::TARGET);
    canvas.disk(ep.target, 0.3, render::TARGET);
    let path: Vec<Vec2> = rows.iter().map(|r| Vec2::new(r.x, r.y)).collect();
    canvas.polyline(&path, render::PATH);
    canvas.disk(world.start, 0.3, render::START);
    let out = cfg.out(&format!("replay_{:03}.ppm", ep.index));
    canvas.save_ppm(&out)?;
    m.artifact(&out)?;
    m.finish()
}
