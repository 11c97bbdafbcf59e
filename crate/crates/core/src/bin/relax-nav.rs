use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relax_nav::geom::Vec2;
use relax_nav::harness::{self, RunConfig, RunManifest, ScenarioRef, OUT_DIR_ENV};
use relax_nav::planner::{TransformMode, UnknownPolicy};
use relax_nav::world::ScenarioTemplate;
use relax_nav::{Error, Result};

/// Mapping, planning and obstacle-handler training for a 2D-LiDAR drone.
///
/// Settings are layered: built-in defaults, then `--config`, then
/// RELAX_NAV_OUT for the output directory, then command-line flags.
/// Exit status: 0 ok, 1 bad config or input, 2 I/O error, 3 no path.
#[derive(Parser)]
#[command(name = "relax-nav", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Survey a scenario and export map.pgm with its JSON sidecar.
    Map {
        #[command(flatten)]
        common: Common,
        /// Cell size in meters.
        #[arg(long)]
        resolution: Option<f64>,
        /// Spacing of the automatic survey pose grid in meters.
        #[arg(long)]
        spacing: Option<f64>,
        /// Survey pose `x,y,heading`; repeat for several.
        #[arg(long = "pose", value_parser = parse_pose, allow_hyphen_values = true)]
        poses: Vec<[f64; 3]>,
    },
    /// Plan an RRT path on a stored map and convert it to world coordinates.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<PathBuf>,
        /// World coordinates `x,y`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Option<Vec2>,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        goal: Option<Vec2>,
        #[arg(long)]
        iterations: Option<usize>,
        /// `affine` or `literal`.
        #[arg(long, value_parser = parse_mode)]
        transform: Option<TransformMode>,
        /// Let the tree cross unobserved cells.
        #[arg(long)]
        unknown_free: bool,
    },
    /// Train the obstacle handler from scratch.
    Train {
        #[command(flatten)]
        common: Common,
        /// Number of training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Suppress per-episode progress on stderr.
        #[arg(long)]
        quiet: bool,
        /// Bootstrap from the next state even on terminal transitions.
        #[arg(long)]
        no_terminal_mask: bool,
    },
    /// Evaluate a checkpoint greedily on seeded scenarios.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        jobs: Option<usize>,
        /// Skip the random-action baseline.
        #[arg(long)]
        no_baseline: bool,
    },
    /// Render an evaluated episode as a PPM path overlay.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Evaluation summary (defaults to eval.json in the output directory).
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        episode: Option<usize>,
        #[arg(long)]
        pixels_per_meter: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Run config JSON, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "template")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: farmland, corridor or empty.
    #[arg(long)]
    template: Option<ScenarioTemplate>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers"))
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    parse_floats::<2>(s).map(|[x, y]| Vec2::new(x, y))
}

fn parse_pose(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_floats::<3>(s)
}

fn parse_mode(s: &str) -> std::result::Result<TransformMode, String> {
    match s {
        "affine" => Ok(TransformMode::Affine),
        "literal" => Ok(TransformMode::Literal),
        _ => Err("expected affine or literal".into()),
    }
}

fn base_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.out_dir = dir.into();
    }
    if let Some(p) = &c.scenario {
        cfg.scenario = ScenarioRef::File(p.clone());
    }
    if let Some(t) = c.template {
        cfg.scenario = ScenarioRef::Template(t);
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn execute(cmd: Cmd) -> Result<RunManifest> {
    match cmd {
        Cmd::Map {
            common,
            resolution,
            spacing,
            poses,
        } => {
            let mut cfg = base_config(&common)?;
            cfg.map.resolution = resolution.unwrap_or(cfg.map.resolution);
            cfg.map.pose_spacing = spacing.unwrap_or(cfg.map.pose_spacing);
            if !poses.is_empty() {
                cfg.map.poses = Some(poses);
            }
            harness::cmd_map(&cfg)
        }
        Cmd::Plan {
            common,
            map,
            start,
            goal,
            iterations,
            transform,
            unknown_free,
        } => {
            let mut cfg = base_config(&common)?;
            let p = &mut cfg.plan;
            p.map = map.or(p.map.take());
            p.start = start.or(p.start);
            p.goal = goal.or(p.goal);
            p.num_iterations = iterations.unwrap_or(p.num_iterations);
            p.transform = transform.unwrap_or(p.transform);
            if unknown_free {
                p.unknown = UnknownPolicy::Free;
            }
            harness::cmd_plan(&cfg)
        }
        Cmd::Train {
            common,
            episodes,
            quiet,
            no_terminal_mask,
        } => {
            let mut cfg = base_config(&common)?;
            cfg.agent.episode.n_eps = episodes.unwrap_or(cfg.agent.episode.n_eps);
            cfg.agent.episode.terminal_mask &= !no_terminal_mask;
            let mut progress = |r: &relax_nav::agent::CurveRow| {
                eprintln!(
                    "episode {:>4}  score {:>10.2}  avg {:>10.2}  eps {:.3}  buffer {}",
                    r.episode, r.score, r.rolling_avg, r.epsilon, r.buffer_size
                );
            };
            harness::cmd_train(&cfg, if quiet { None } else { Some(&mut progress) })
        }
        Cmd::Eval {
            common,
            checkpoint,
            episodes,
            jobs,
            no_baseline,
        } => {
            let mut cfg = base_config(&common)?;
            let e = &mut cfg.eval;
            e.checkpoint = checkpoint.or(e.checkpoint.take());
            e.episodes = episodes.unwrap_or(e.episodes);
            e.jobs = jobs.unwrap_or(e.jobs);
            e.baseline &= !no_baseline;
            harness::cmd_eval(&cfg)
        }
        Cmd::Replay {
            common,
            eval,
            episode,
            pixels_per_meter,
        } => {
            let mut cfg = base_config(&common)?;
            let r = &mut cfg.replay;
            r.eval = eval.or(r.eval.take());
            r.episode = episode.unwrap_or(r.episode);
            r.pixels_per_meter = pixels_per_meter.unwrap_or(r.pixels_per_meter);
            harness::cmd_replay(&cfg)
        }
    }
}

fn report(m: &RunManifest) {
    println!("{} finished in {:.2} s (seed {})", m.command, m.wall_seconds, m.seed);
    for a in &m.artifacts {
        println!("  {}  {}", &a.sha256[..12], a.path.display());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let planning = matches!(cli.command, Cmd::Plan { .. });
    match execute(cli.command) {
        Ok(m) => {
            report(&m);
            ExitCode::SUCCESS
        }
        Err(e) => {
            if planning && matches!(e, Error::NoPath { .. }) {
                eprintln!("{e}; the search tree was still written");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
