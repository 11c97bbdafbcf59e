//! Obstacle handler: a dueling double DQN that flies the drone toward a
//! target using the filtered LiDAR sectors, plus the episode machinery
//! around it.

mod dqn;
mod env;
mod eval;
mod policy;
mod replay;
mod reset;
mod reward;
mod train;

pub use dqn::{double_dqn_target, sync_target, train_step};
pub use env::{lagged_reset, sample_target, NavEnv, ResetOutcome, SensorNoise, StepOutcome};
pub use eval::{
    evaluation_seeds, run_evaluation, write_trace_csv, EvalEpisode, EvalPolicy, EvalReport, TraceRow,
    EVAL_MIN_TARGET_DISTANCE,
};
pub use policy::{select_action, EpsilonSchedule};
pub use replay::{ReplayBuffer, Transition, DEFAULT_CAPACITY};
pub use reset::{reset_sequence, ResetConfig, ResetDriver, ResetExit, ResetReport, StagingRule};
pub use reward::{
    check_done, compute_reward, done_reason, EpisodeConfig, COLLISION_REWARD, MOVING_AWAY_REWARD, STEP_LIMIT_REWARD,
    TARGET_REWARD,
};
pub use train::{read_curve_csv, run_training, write_curve_csv, CurveRow, TrainOptions, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lidar::{FilterConfig, N_SECTORS, STATE_DIM};
use crate::nn::{DuelingNet, Topology};
use crate::world::{spawn_scenario, ScenarioTemplate, WorldConfig};

/// Everything that shapes training and evaluation besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub episode: EpisodeConfig,
    pub reset: ResetConfig,
    pub noise: SensorNoise,
    pub topology: Topology,
    /// Meters that map to one network input unit for the target offset.
    pub position_scale: f64,
    /// Q value represented by one unit of raw network output.
    pub output_scale: f64,
    /// Episodes in the learning curve's rolling average.
    pub rolling_window: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            reset: ResetConfig::default(),
            noise: SensorNoise::default(),
            topology: Topology::default(),
            position_scale: 10.0,
            output_scale: 1000.0,
            rolling_window: 100,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        self.reset.validate()?;
        self.topology.validate()?;
        if self.topology.input != STATE_DIM {
            return Err(crate::Error::config("topology.input", format!("must be {STATE_DIM}")));
        }
        if !(self.position_scale > 0.0) || !(self.output_scale > 0.0) {
            return Err(crate::Error::config("position_scale/output_scale", "must be positive"));
        }
        if self.rolling_window == 0 {
            return Err(crate::Error::config("rolling_window", "must be positive"));
        }
        Ok(())
    }

    /// Fresh network with this configuration's fixed input and output
    /// scaling.
    pub fn network(&self, seed: u64) -> Result<DuelingNet> {
        let det = FilterConfig::default().det_range;
        let mut scale = vec![1.0 / self.position_scale; 3];
        scale.extend(std::iter::repeat(1.0 / det).take(N_SECTORS));
        DuelingNet::new(self.topology.clone(), seed)?.with_scaling(scale, self.output_scale)
    }
}

/// Where episode worlds come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    /// A fresh layout from the template for every episode.
    Template(ScenarioTemplate),
    /// The same world every episode.
    Fixed(WorldConfig),
}

impl ScenarioSource {
    pub fn world(&self, seed: u64) -> WorldConfig {
        match self {
            ScenarioSource::Template(t) => spawn_scenario(seed, *t),
            ScenarioSource::Fixed(w) => w.clone(),
        }
    }
}
