use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::nn::{argmax, DuelingNet};
use crate::seed::derive_seed;
use crate::world::DoneReason;

use super::env::{sample_target, NavEnv};
use super::{AgentConfig, ScenarioSource};

/// Evaluation targets are at least this far from home, so that a short
/// random walk rarely stumbles into one.
pub const EVAL_MIN_TARGET_DISTANCE: f64 = 8.0;

#[derive(Debug, Clone, Copy)]
pub enum EvalPolicy<'a> {
    Greedy(&'a DuelingNet),
    /// Uniform random actions; the baseline.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u32,
    pub x: f64,
    pub y: f64,
    /// Empty on the starting row.
    pub action: Option<usize>,
    pub reward: f64,
    pub done_reason: DoneReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub seed: u64,
    pub target: Vec2,
    pub reason: DoneReason,
    pub steps: u32,
    pub score: f64,
    pub trace: Vec<TraceRow>,
}

impl EvalEpisode {
    pub fn success(&self) -> bool {
        self.reason == DoneReason::Target
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EvalEpisode>,
}

impl EvalReport {
    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().filter(|e| e.success()).count() as f64 / self.episodes.len() as f64
    }

    pub fn count(&self, reason: DoneReason) -> usize {
        self.episodes.iter().filter(|e| e.reason == reason).count()
    }
}

/// `n` scenario seeds derived from the master seed.
pub fn evaluation_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, "evaluation"));
    (0..n).map(|_| rng.gen()).collect()
}

fn run_episode(policy: EvalPolicy<'_>, cfg: &AgentConfig, scenario: &ScenarioSource, seed: u64) -> Result<EvalEpisode> {
    let world = scenario.world(seed);
    let mut target_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "target"));
    let target = sample_target(&world, &cfg.episode, EVAL_MIN_TARGET_DISTANCE, &mut target_rng);
    let mut env = NavEnv::new(world, cfg.episode.clone(), target, cfg.noise, derive_seed(seed, "lidar-sensor"))?;
    let mut action_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "random-policy"));
    let p = env.pose().actual;
    let mut trace = vec![TraceRow {
        step: 0,
        x: p.x,
        y: p.y,
        action: None,
        reward: 0.0,
        done_reason: if env.is_done() { DoneReason::Target } else { DoneReason::None },
    }];
    let mut reason = trace[0].done_reason;
    let mut score = 0.0;
    while !env.is_done() {
        let a = match policy {
            EvalPolicy::Greedy(net) => argmax(&net.forward(env.state().as_slice())?),
            EvalPolicy::Random => action_rng.gen_range(0..crate::world::N_ACTIONS),
        };
        let out = env.step(a)?;
        score += out.reward;
        reason = out.reason;
        let p = env.pose().actual;
        trace.push(TraceRow {
            step: env.steps(),
            x: p.x,
            y: p.y,
            action: Some(a),
            reward: out.reward,
            done_reason: out.reason,
        });
    }
    Ok(EvalEpisode {
        seed,
        target,
        reason,
        steps: env.steps(),
        score,
        trace,
    })
}

/// Run one episode per seed with exploration switched off. `jobs > 1`
/// spreads episodes over threads; results do not depend on it.
pub fn run_evaluation(
    policy: EvalPolicy<'_>,
    cfg: &AgentConfig,
    scenario: &ScenarioSource,
    seeds: &[u64],
    jobs: usize,
) -> Result<EvalReport> {
    cfg.validate()?;
    let episodes = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config("jobs", e.to_string()))?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| run_episode(policy, cfg, scenario, s))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        seeds
            .iter()
            .map(|&s| run_episode(policy, cfg, scenario, s))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(EvalReport { episodes })
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
