use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lidar::SectorDistances;
use crate::world::{DoneReason, DronePose, DEFAULT_ALTITUDE};

pub const TARGET_REWARD: f64 = 3000.0;
pub const COLLISION_REWARD: f64 = -2000.0;
pub const STEP_LIMIT_REWARD: f64 = -1000.0;
pub const MOVING_AWAY_REWARD: f64 = -50.0;

/// Training regimen and episode rules. Every field can be overridden from
/// JSON; missing fields keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub n_eps: usize,
    pub n_step: u32,
    pub memory_size: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub f_u: u64,
    pub learning_rate: f64,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub target_radius: f64,
    pub limit_x: f64,
    pub limit_y: f64,
    pub col_threshold: f64,
    /// Targets are drawn uniformly from `[-target_range, target_range]^2`.
    pub target_range: f64,
    /// ... excluding this disk around the start.
    pub target_exclusion: f64,
    pub target_z: f64,
    /// Zero the bootstrap term on terminal transitions.
    pub terminal_mask: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_eps: 500,
            n_step: 50,
            memory_size: 1_000_000,
            batch_size: 96,
            gamma: 0.99,
            f_u: 1000,
            learning_rate: 5e-4,
            eps_max: 1.0,
            eps_min: 0.01,
            eps_decay: 1e-4,
            target_radius: 3.0,
            limit_x: 18.0,
            limit_y: 18.0,
            col_threshold: 0.5,
            target_range: 12.0,
            target_exclusion: 3.0,
            target_z: DEFAULT_ALTITUDE,
            terminal_mask: true,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 10] = [
            ("n_eps", self.n_eps as f64),
            ("n_step", self.n_step as f64),
            ("memory_size", self.memory_size as f64),
            ("batch_size", self.batch_size as f64),
            ("f_u", self.f_u as f64),
            ("learning_rate", self.learning_rate),
            ("target_radius", self.target_radius),
            ("limit_x", self.limit_x),
            ("limit_y", self.limit_y),
            ("col_threshold", self.col_threshold),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must be within [0, 1]"));
        }
        if !(self.eps_min >= 0.0 && self.eps_min <= self.eps_max && self.eps_max <= 1.0) {
            return Err(Error::config("eps_min", "need 0 <= eps_min <= eps_max <= 1"));
        }
        if !(self.eps_decay >= 0.0) {
            return Err(Error::config("eps_decay", "must be non-negative"));
        }
        if self.target_radius >= self.limit_x.min(self.limit_y) {
            return Err(Error::config("target_radius", "must be smaller than both limits"));
        }
        if self.batch_size > self.memory_size {
            return Err(Error::config("batch_size", "cannot exceed memory_size"));
        }
        if !(self.target_range > 0.0) || self.target_exclusion >= self.target_range * std::f64::consts::SQRT_2 {
            return Err(Error::config("target_range", "leaves no room for targets"));
        }
        Ok(())
    }
}

/// Step reward: the case term (target, collision, step limit, moving away,
/// in that precedence) minus `d_current^2 / 100`.
pub fn compute_reward(d_current: f64, d_last: f64, step_count: u32, collision: bool, cfg: &EpisodeConfig) -> f64 {
    let case = if d_current <= cfg.target_radius {
        TARGET_REWARD
    } else if collision {
        COLLISION_REWARD
    } else if step_count >= cfg.n_step {
        STEP_LIMIT_REWARD
    } else if d_current > d_last {
        MOVING_AWAY_REWARD
    } else {
        0.0
    };
    case - d_current * d_current / 100.0
}

/// Resolve the termination flags; precedence target > collision > bounds >
/// step limit.
pub fn done_reason(target: bool, collision: bool, bounds: bool, timeout: bool) -> DoneReason {
    if target {
        DoneReason::Target
    } else if collision {
        DoneReason::Collision
    } else if bounds {
        DoneReason::OutOfBounds
    } else if timeout {
        DoneReason::StepLimit
    } else {
        DoneReason::None
    }
}

pub fn check_done(
    dists: &SectorDistances,
    pose: &DronePose,
    d_current: f64,
    counter: u32,
    cfg: &EpisodeConfig,
) -> (bool, DoneReason) {
    let p = pose.reported;
    let reason = done_reason(
        d_current <= cfg.target_radius,
        dists.0.iter().any(|&d| d <= cfg.col_threshold),
        p.x.abs() > cfg.limit_x.abs() || p.y.abs() > cfg.limit_y.abs(),
        counter >= cfg.n_step,
    );
    (reason != DoneReason::None, reason)
}
