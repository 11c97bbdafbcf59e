use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lidar::AgentState;
use crate::nn::{argmax, DuelingNet};

/// Linear per-step decay: `eps(t) = max(eps_min, eps_max - decay * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps_max: f64,
    pub eps_min: f64,
    pub decay: f64,
    pub t: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            eps_max: 1.0,
            eps_min: 0.01,
            decay: 1e-4,
            t: 0,
        }
    }
}

impl EpsilonSchedule {
    /// Always-greedy schedule for evaluation.
    pub fn greedy() -> Self {
        Self {
            eps_max: 0.0,
            eps_min: 0.0,
            decay: 0.0,
            t: 0,
        }
    }

    pub fn value_at(&self, t: u64) -> f64 {
        (self.eps_max - self.decay * t as f64).max(self.eps_min)
    }

    pub fn value(&self) -> f64 {
        self.value_at(self.t)
    }
}

/// Epsilon-greedy choice; advances the schedule by one step.
pub fn select_action(
    net: &DuelingNet,
    state: &AgentState,
    sched: &mut EpsilonSchedule,
    rng: &mut impl Rng,
) -> Result<usize> {
    let eps = sched.value();
    sched.t += 1;
    if eps > 0.0 && rng.gen::<f64>() < eps {
        return Ok(rng.gen_range(0..net.n_actions()));
    }
    Ok(argmax(&net.forward(state.as_slice())?))
}
