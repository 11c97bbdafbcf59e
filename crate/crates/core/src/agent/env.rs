use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lidar::{
    build_state, pool_sectors, AgentState, FilterConfig, FilterState, Lidar, MotionReading, NoiseModel,
    SectorDistances,
};
use crate::world::{self, nearest_obstacle_distance, DoneReason, DronePose, LaggedReset, Position3, WorldConfig};

use super::reset::{reset_sequence, ResetConfig, ResetReport};
use super::reward::{compute_reward, done_reason, EpisodeConfig};

/// Attitude and velocity model used to decide when the scan is corrupted.
/// Most decision steps are taken from a near-level hover; occasionally a
/// gust tilts the airframe past the filter's attitude gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    pub enabled: bool,
    /// Std. dev. of roll and pitch while hovering, radians.
    pub tilt_sigma: f64,
    pub gust_probability: f64,
    /// Range of roll/pitch magnitude during a gust, radians.
    pub gust_tilt: (f64, f64),
    /// Std. dev. of residual linear velocity at decision time, m/s.
    pub velocity_sigma: f64,
    /// Tilt at which the spike probability saturates, radians.
    pub full_disturbance_tilt: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            enabled: true,
            tilt_sigma: 0.004,
            gust_probability: 0.03,
            gust_tilt: (0.12, 0.3),
            velocity_sigma: 0.05,
            full_disturbance_tilt: 0.3,
        }
    }
}

impl SensorNoise {
    pub fn off() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (MotionReading, NoiseModel) {
        if !self.enabled {
            return (MotionReading::default(), NoiseModel::Off);
        }
        let hover = Normal::new(0.0, self.tilt_sigma).expect("finite sigma");
        let vel = Normal::new(0.0, self.velocity_sigma).expect("finite sigma");
        let (roll, pitch) = if rng.gen_bool(self.gust_probability) {
            let (lo, hi) = self.gust_tilt;
            let sign = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            (sign(rng) * rng.gen_range(lo..hi), sign(rng) * rng.gen_range(lo..hi))
        } else {
            (hover.sample(rng), hover.sample(rng))
        };
        let motion = MotionReading {
            linear_velocity: vel.sample(rng).abs(),
            roll,
            pitch,
        };
        let tilt = roll.abs().max(pitch.abs());
        (motion, NoiseModel::spikes(tilt / self.full_disturbance_tilt))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: AgentState,
    pub reward: f64,
    pub done: bool,
    pub reason: DoneReason,
    /// Ground-truth contact: the move passed within the collision threshold
    /// of an obstacle.
    pub contact: bool,
}

/// One navigation episode in a world: the drone flies from home toward a
/// target, seeing the world only through the filtered LiDAR sectors.
#[derive(Debug, Clone)]
pub struct NavEnv {
    pub world: WorldConfig,
    pub cfg: EpisodeConfig,
    pub lidar: Lidar,
    pub filter_config: FilterConfig,
    pub noise: SensorNoise,
    pose: DronePose,
    target: Position3,
    filter: FilterState,
    counter: u32,
    d_last: f64,
    state: AgentState,
    done: bool,
    rng: ChaCha8Rng,
}

impl NavEnv {
    /// Place the drone at the world's home position and take the first
    /// reading. Episodes that start inside the target radius are finished
    /// before any step is taken.
    pub fn new(world: WorldConfig, cfg: EpisodeConfig, target: Vec2, noise: SensorNoise, seed: u64) -> Result<Self> {
        world.validate()?;
        cfg.validate()?;
        let home = world.home();
        let target = Position3::new(target.x, target.y, cfg.target_z);
        let filter_config = FilterConfig::default();
        let mut env = Self {
            pose: DronePose::at(home.x, home.y, home.z),
            target,
            filter: FilterState::new(filter_config),
            counter: 0,
            d_last: home.distance(target),
            state: AgentState([0.0; crate::lidar::STATE_DIM]),
            done: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
            world,
            cfg,
            lidar: Lidar::default(),
            filter_config,
            noise,
        };
        let filtered = env.sense()?;
        env.state = build_state(env.pose.reported, env.target, &filtered);
        env.done = env.d_last <= env.cfg.target_radius;
        Ok(env)
    }

    pub fn state(&self) -> AgentState {
        self.state
    }

    pub fn pose(&self) -> DronePose {
        self.pose
    }

    pub fn target(&self) -> Position3 {
        self.target
    }

    pub fn steps(&self) -> u32 {
        self.counter
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn distance_to_target(&self) -> f64 {
        self.pose.reported.distance(self.target)
    }

    fn sense(&mut self) -> Result<SectorDistances> {
        let (motion, noise) = self.noise.sample(&mut self.rng);
        let seed = self.rng.gen();
        let scan = self.lidar.cast_scan(&self.world, &self.pose, &noise, seed)?;
        let pooled = pool_sectors(&scan, self.filter_config.det_range);
        self.filter.request();
        Ok(self.filter.update(&pooled, &motion))
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::config("episode", "step called after the episode finished"));
        }
        let prev = self.pose;
        self.pose = world::step(&prev, action, &self.world)?;
        self.counter += 1;
        let contact =
            self.world
                .segment_clearance_violated(prev.planar(), self.pose.planar(), self.cfg.col_threshold);
        let filtered = if self.world.contains(self.pose.planar()) {
            self.sense()?
        } else {
            SectorDistances(self.filter.last_output)
        };
        self.state = build_state(self.pose.reported, self.target, &filtered);
        let d = self.distance_to_target();
        let p = self.pose.reported;
        let lidar_collision = filtered.0.iter().any(|&x| x <= self.cfg.col_threshold);
        let collision = lidar_collision || contact;
        let reason = done_reason(
            d <= self.cfg.target_radius,
            collision,
            p.x.abs() > self.cfg.limit_x.abs() || p.y.abs() > self.cfg.limit_y.abs(),
            self.counter >= self.cfg.n_step,
        );
        let reward = compute_reward(d, self.d_last, self.counter, collision, &self.cfg);
        self.d_last = d;
        self.done = reason != DoneReason::None;
        Ok(StepOutcome {
            state: self.state,
            reward,
            done: self.done,
            reason,
            contact,
        })
    }
}

/// Targets drawn uniformly from the configured square, outside the start
/// exclusion disk and at least `min_distance` from home, with room around
/// them for the drone.
pub fn sample_target(world: &WorldConfig, cfg: &EpisodeConfig, min_distance: f64, rng: &mut impl Rng) -> Vec2 {
    let home = world.home().planar();
    let r = cfg.target_range;
    let min_d = min_distance.max(cfg.target_exclusion);
    let mut fallback = home + Vec2::new(r, r);
    for _ in 0..10_000 {
        let p = Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if p.distance(home) <= min_d || !world.contains(p) {
            continue;
        }
        fallback = p;
        if nearest_obstacle_distance(&DronePose::at(p.x, p.y, world.altitude), world) > 1.5 {
            return p;
        }
    }
    fallback
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetOutcome {
    pub report: ResetReport,
    /// Moves during the reset that came within the collision threshold of
    /// an obstacle.
    pub collisions: usize,
    pub final_pose: DronePose,
}

/// Teleport home from `pose` with reset lag, run the reset procedure and
/// let the vehicle settle.
pub fn lagged_reset(world: &WorldConfig, pose: &DronePose, cfg: &ResetConfig) -> Result<ResetOutcome> {
    let mut driver = LaggedReset::begin_reset(world, pose);
    let report = reset_sequence(&mut driver, cfg)?;
    driver.settle(1000);
    Ok(ResetOutcome {
        report,
        collisions: driver.collision_events(),
        final_pose: driver.pose(),
    })
}
