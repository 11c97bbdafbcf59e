use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{save_checkpoint, Adam, AdamConfig, DuelingNet};
use crate::seed::{derive_seed, module_rng};

use super::dqn::{sync_target, train_step};
use super::env::{lagged_reset, sample_target, NavEnv};
use super::policy::{select_action, EpsilonSchedule};
use super::replay::{ReplayBuffer, Transition};
use super::{AgentConfig, ScenarioSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub score: f64,
    pub rolling_avg: f64,
    pub epsilon: f64,
    pub buffer_size: usize,
}

#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Where to write the last good state if training diverges.
    pub abort_checkpoint: Option<PathBuf>,
    /// Called after every episode.
    pub on_episode: Option<&'a mut dyn FnMut(&CurveRow)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: DuelingNet,
    pub target: DuelingNet,
    pub optimizer: Adam,
    pub curve: Vec<CurveRow>,
    pub buffer_len: usize,
    pub env_steps: u64,
    /// Collision events summed over all post-episode resets.
    pub reset_collisions: usize,
}

/// Train a fresh agent. Every random choice (worlds, targets, sensor noise,
/// initial weights, exploration, replay sampling) is derived from
/// `master_seed`, so two runs with the same inputs are bit-identical.
pub fn run_training(
    cfg: &AgentConfig,
    scenario: &ScenarioSource,
    master_seed: u64,
    mut opts: TrainOptions<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let ec = &cfg.episode;
    let mut world_rng = module_rng(master_seed, "sim-world");
    let mut noise_rng = module_rng(master_seed, "lidar-sensor");
    let mut agent_rng = module_rng(master_seed, "rl-agent");
    let mut policy = cfg.network(derive_seed(master_seed, "neural-core"))?;
    let mut target = policy.clone();
    let mut opt = Adam::new(
        AdamConfig {
            learning_rate: ec.learning_rate,
            ..AdamConfig::default()
        },
        policy.n_params(),
    );
    let mut buffer = ReplayBuffer::new(ec.memory_size, derive_seed(master_seed, "replay-buffer"))?;
    let mut sched = EpsilonSchedule {
        eps_max: ec.eps_max,
        eps_min: ec.eps_min,
        decay: ec.eps_decay,
        t: 0,
    };
    let mut curve: Vec<CurveRow> = Vec::with_capacity(ec.n_eps);
    let mut env_steps = 0u64;
    let mut reset_collisions = 0;

    for episode in 0..ec.n_eps {
        let world = scenario.world(world_rng.gen());
        let goal = sample_target(&world, ec, 0.0, &mut world_rng);
        let mut env = NavEnv::new(world, ec.clone(), goal, cfg.noise, noise_rng.gen())?;
        let mut score = 0.0;
        while !env.is_done() {
            let s = env.state();
            let a = select_action(&policy, &s, &mut sched, &mut agent_rng)?;
            let out = env.step(a)?;
            score += out.reward;
            buffer.push(Transition::new(s, a, out.reward, out.state, out.done)?);
            env_steps += 1;
            if buffer.len() >= ec.batch_size {
                sync_target(&policy, &mut target, env_steps, ec.f_u);
                let batch = buffer.sample(ec.batch_size)?;
                match train_step(&mut policy, &target, &mut opt, &batch, ec.gamma, ec.terminal_mask) {
                    Ok(_) => {}
                    Err(Error::NonFiniteLoss { loss, .. }) | Err(Error::NonFiniteGradient { value: loss, .. }) => {
                        if let Some(path) = &opts.abort_checkpoint {
                            let meta = serde_json::json!({ "episode": episode, "env_steps": env_steps, "aborted": true });
                            save_checkpoint(&policy, &opt, meta, path)?;
                        }
                        return Err(Error::NonFiniteLoss {
                            loss,
                            episode,
                            step: env_steps,
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        reset_collisions += lagged_reset(&env.world, &env.pose(), &cfg.reset)?.collisions;

        let window = curve.len().min(cfg.rolling_window - 1);
        let recent = curve[curve.len() - window..].iter().map(|r| r.score).sum::<f64>() + score;
        let row = CurveRow {
            episode,
            score,
            rolling_avg: recent / (window + 1) as f64,
            epsilon: sched.value(),
            buffer_size: buffer.len(),
        };
        if let Some(cb) = opts.on_episode.as_mut() {
            cb(&row);
        }
        curve.push(row);
    }
    Ok(TrainOutcome {
        policy,
        target,
        optimizer: opt,
        curve,
        buffer_len: buffer.len(),
        env_steps,
        reset_collisions,
    })
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
