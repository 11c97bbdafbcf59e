use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, ScenarioSource};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mapping::{PoseEstimate, SurveyOptions};
use crate::planner::{RrtConfig, TransformMode, UnknownPolicy};
use crate::world::{spawn_scenario, ScenarioTemplate, WorldConfig};

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "RELAX_NAV_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Map,
    Plan,
    Train,
    Eval,
    Replay,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Command::Map => "map",
            Command::Plan => "plan",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Replay => "replay",
        })
    }
}

/// Where the world comes from: `{"template": "farmland"}` or
/// `{"file": "scenario.json"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioRef {
    Template(ScenarioTemplate),
    File(PathBuf),
}

impl Default for ScenarioRef {
    fn default() -> Self {
        ScenarioRef::Template(ScenarioTemplate::Farmland)
    }
}

impl ScenarioRef {
    /// The single world used by `map` and `plan`. Templates are spawned
    /// with the master seed.
    pub fn world(&self, seed: u64) -> Result<WorldConfig> {
        match self {
            ScenarioRef::Template(t) => Ok(spawn_scenario(seed, *t)),
            ScenarioRef::File(p) => load_scenario(p),
        }
    }

    /// Episode worlds for `train` and `eval`: a template spawns a fresh
    /// layout per episode, a file is reused as is.
    pub fn source(&self) -> Result<ScenarioSource> {
        match self {
            ScenarioRef::Template(t) => Ok(ScenarioSource::Template(*t)),
            ScenarioRef::File(p) => Ok(ScenarioSource::Fixed(load_scenario(p)?)),
        }
    }
}

fn load_scenario(path: &Path) -> Result<WorldConfig> {
    if !path.is_file() {
        return Err(Error::config("scenario", format!("{} does not exist", path.display())));
    }
    WorldConfig::load_json(path).map_err(|e| match e {
        Error::Json(j) => config_error(path, j),
        e => e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSettings {
    /// Meters per cell.
    pub resolution: f64,
    pub margin: f64,
    /// Explicit survey poses `[x, y, heading]`; when absent a regular grid
    /// of poses `pose_spacing` apart is used.
    pub poses: Option<Vec<[f64; 3]>>,
    pub pose_spacing: f64,
    pub match_poses: bool,
    pub rotation_weights: [f64; 3],
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            margin: 1.0,
            poses: None,
            pose_spacing: 6.0,
            match_poses: false,
            rotation_weights: crate::mapping::EQUAL_WEIGHTS,
        }
    }
}

impl MapSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) {
            return Err(Error::config("map.resolution", "must be positive"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::config("map.margin", "must be non-negative"));
        }
        if !(self.pose_spacing > 0.0) {
            return Err(Error::config("map.pose_spacing", "must be positive"));
        }
        if matches!(&self.poses, Some(p) if p.is_empty()) {
            return Err(Error::config("map.poses", "must not be empty"));
        }
        Ok(())
    }

    pub fn survey_options(&self) -> SurveyOptions {
        SurveyOptions {
            resolution: self.resolution,
            margin: self.margin,
            match_poses: self.match_poses,
            ..SurveyOptions::default()
        }
    }

    pub fn survey_poses(&self, world: &WorldConfig) -> Vec<PoseEstimate> {
        match &self.poses {
            Some(p) => p.iter().map(|&[x, y, t]| PoseEstimate::new(x, y, t)).collect(),
            None => crate::mapping::survey_grid(world, self.pose_spacing),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSettings {
    /// Map image to plan on; defaults to `map.pgm` in the output directory.
    pub map: Option<PathBuf>,
    /// World coordinates; default to the scenario's start and goal.
    pub start: Option<Vec2>,
    pub goal: Option<Vec2>,
    pub num_iterations: usize,
    /// Pixels.
    pub step_size: f64,
    /// Pixels.
    pub test_range: f64,
    pub goal_bias: f64,
    pub unknown: UnknownPolicy,
    pub transform: TransformMode,
}

impl Default for PlanSettings {
    fn default() -> Self {
        let r = RrtConfig::default();
        Self {
            map: None,
            start: None,
            goal: None,
            num_iterations: r.num_iterations,
            step_size: r.step_size,
            test_range: r.test_range,
            goal_bias: r.goal_bias,
            unknown: r.unknown,
            transform: TransformMode::default(),
        }
    }
}

impl PlanSettings {
    pub fn rrt(&self, rng_seed: u64) -> RrtConfig {
        RrtConfig {
            num_iterations: self.num_iterations,
            step_size: self.step_size,
            test_range: self.test_range,
            rng_seed,
            goal_bias: self.goal_bias,
            unknown: self.unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub episodes: usize,
    pub jobs: usize,
    /// Defaults to `policy.ckpt` in the output directory.
    pub checkpoint: Option<PathBuf>,
    /// Also run the uniform random policy on the same seeds.
    pub baseline: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: 50,
            jobs: 1,
            checkpoint: None,
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySettings {
    /// Evaluation summary to read; defaults to `eval.json` in the output
    /// directory.
    pub eval: Option<PathBuf>,
    pub episode: usize,
    pub pixels_per_meter: f64,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        Self {
            eval: None,
            episode: 0,
            pixels_per_meter: 10.0,
        }
    }
}

/// Full description of a run. Every field has a default, so a config file
/// only needs the values it changes; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioRef,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub agent: AgentConfig,
    pub map: MapSettings,
    pub plan: PlanSettings,
    pub eval: EvalSettings,
    pub replay: ReplaySettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioRef::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            agent: AgentConfig::default(),
            map: MapSettings::default(),
            plan: PlanSettings::default(),
            eval: EvalSettings::default(),
            replay: ReplaySettings::default(),
        }
    }
}

impl RunConfig {
    /// Parse a config file. A run manifest is accepted too, in which case
    /// its config snapshot is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_error(path, e))?;
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("artifacts") && m.contains_key("config") => {
                m.remove("config").expect("checked above")
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| config_error(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.map.validate()?;
        self.plan.rrt(0).validate()?;
        if self.eval.episodes == 0 {
            return Err(Error::config("eval.episodes", "must be positive"));
        }
        if self.eval.jobs == 0 {
            return Err(Error::config("eval.jobs", "must be positive"));
        }
        if !(self.replay.pixels_per_meter > 0.0) {
            return Err(Error::config("replay.pixels_per_meter", "must be positive"));
        }
        Ok(())
    }

    /// `name` inside the output directory.
    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn config_error(path: &Path, e: serde_json::Error) -> Error {
    Error::config(path.display().to_string(), e.to_string())
}
