//! Deterministic 2D world: bounds, static and movable obstacles, drone
//! kinematics at a fixed altitude, and an emulation of the lagging pose
//! estimate that follows a simulator teleport.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{OrientedBox, Vec2};

/// Range reported when nothing is in sight.
pub const NO_OBSTACLE_DISTANCE: f64 = f64::MAX;

pub const DEFAULT_ALTITUDE: f64 = 4.4;

/// Planar action vectors, one meter per axis per decision step.
pub const ACTIONS: [[i8; 3]; 8] = [
    [1, -1, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [-1, 1, 0],
    [-1, 0, 0],
    [-1, -1, 0],
    [0, -1, 0],
];

pub const N_ACTIONS: usize = ACTIONS.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(u8);

impl Action {
    pub fn new(index: usize) -> Result<Self> {
        if index < N_ACTIONS {
            Ok(Action(index as u8))
        } else {
            Err(Error::InvalidAction(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn displacement(self) -> Vec2 {
        let a = ACTIONS[self.index()];
        Vec2::new(a[0] as f64, a[1] as f64)
    }

    /// Heading of the displacement in radians, world frame (x forward, y left).
    pub fn heading(self) -> f64 {
        let d = self.displacement();
        d.y.atan2(d.x)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..N_ACTIONS as u8).map(Action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn planar(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(self, o: Position3) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    /// Axis-aligned block.
    Rectangle { center: Vec2, half_extents: Vec2 },
    /// Thin movable bar between two endpoints.
    Bar { a: Vec2, b: Vec2, thickness: f64 },
}

impl Obstacle {
    pub fn shape(&self) -> OrientedBox {
        match *self {
            Obstacle::Rectangle {
                center,
                half_extents,
            } => OrientedBox {
                center,
                half: half_extents,
                angle: 0.0,
            },
            Obstacle::Bar { a, b, thickness } => {
                let d = b - a;
                OrientedBox {
                    center: (a + b) * 0.5,
                    half: Vec2::new(d.norm() * 0.5, thickness * 0.5),
                    angle: d.y.atan2(d.x),
                }
            }
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        match *self {
            Obstacle::Rectangle { half_extents, .. } => {
                if !(half_extents.x > 0.0 && half_extents.y > 0.0) {
                    return Err(Error::config(
                        format!("obstacles[{i}].half_extents"),
                        "must be positive",
                    ));
                }
            }
            Obstacle::Bar { a, b, thickness } => {
                if !(thickness > 0.0) {
                    return Err(Error::config(
                        format!("obstacles[{i}].thickness"),
                        "must be positive",
                    ));
                }
                if a.distance(b) == 0.0 {
                    return Err(Error::config(
                        format!("obstacles[{i}]"),
                        "bar endpoints must be distinct",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_altitude")]
    pub altitude: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default = "default_col_threshold")]
    pub col_threshold: f64,
    #[serde(default = "default_true")]
    pub reset_lag_enabled: bool,
    #[serde(default = "default_lag_step")]
    pub reset_lag_step: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Where every episode begins and where resets return the drone.
    #[serde(default)]
    pub start: Vec2,
    /// Nominal mission goal of the scenario (house to tower in the farmland).
    #[serde(default)]
    pub goal: Vec2,
}

fn default_altitude() -> f64 {
    DEFAULT_ALTITUDE
}
fn default_col_threshold() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_lag_step() -> f64 {
    1.0
}

impl WorldConfig {
    pub fn empty(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            altitude: DEFAULT_ALTITUDE,
            obstacles: Vec::new(),
            col_threshold: default_col_threshold(),
            reset_lag_enabled: true,
            reset_lag_step: default_lag_step(),
            rng_seed: 0,
            start: Vec2::ZERO,
            goal: Vec2::ZERO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(Error::config("x_min", "must be below x_max"));
        }
        if !(self.y_min < self.y_max) {
            return Err(Error::config("y_min", "must be below y_max"));
        }
        if !(self.col_threshold > 0.0) {
            return Err(Error::config("col_threshold", "must be positive"));
        }
        if !(self.altitude > 0.0) {
            return Err(Error::config("altitude", "must be positive"));
        }
        if !(self.reset_lag_step >= 0.0) {
            return Err(Error::config("reset_lag_step", "must be non-negative"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate(i)?;
        }
        Ok(())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn home(&self) -> Position3 {
        Position3::new(self.start.x, self.start.y, self.altitude)
    }

    pub fn shapes(&self) -> impl Iterator<Item = OrientedBox> + '_ {
        self.obstacles.iter().map(Obstacle::shape)
    }

    /// Ground-truth contact test for a straight move: true if any point of
    /// the segment comes within `clearance` of an obstacle.
    pub fn segment_clearance_violated(&self, a: Vec2, b: Vec2, clearance: f64) -> bool {
        let len = a.distance(b);
        let n = (len / 0.05).ceil().max(1.0) as usize;
        (0..=n).any(|k| {
            let p = a + (b - a) * (k as f64 / n as f64);
            self.shapes().any(|s| s.distance(p) <= clearance)
        })
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let w: WorldConfig = serde_json::from_str(&text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// True pose of the drone and the pose the control layer believes it has.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DronePose {
    pub actual: Position3,
    pub reported: Position3,
}

impl DronePose {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        let p = Position3::new(x, y, z);
        Self {
            actual: p,
            reported: p,
        }
    }

    pub fn planar(&self) -> Vec2 {
        self.actual.planar()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    None,
    Target,
    OutOfBounds,
    StepLimit,
    Collision,
}

impl fmt::Display for DoneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DoneReason::None => "none",
            DoneReason::Target => "target",
            DoneReason::OutOfBounds => "out_of_bounds",
            DoneReason::StepLimit => "step_limit",
            DoneReason::Collision => "collision",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for DoneReason {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => DoneReason::None,
            "target" => DoneReason::Target,
            "out_of_bounds" => DoneReason::OutOfBounds,
            "step_limit" => DoneReason::StepLimit,
            "collision" => DoneReason::Collision,
            other => {
                return Err(Error::Parse {
                    what: "done reason",
                    reason: other.to_string(),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStatus {
    pub step_counter: u32,
    pub done: bool,
    pub done_reason: DoneReason,
}

impl EpisodeStatus {
    pub fn running(step_counter: u32) -> Self {
        Self {
            step_counter,
            done: false,
            done_reason: DoneReason::None,
        }
    }

    pub fn finished(step_counter: u32, reason: DoneReason) -> Self {
        debug_assert!(reason != DoneReason::None);
        Self {
            step_counter,
            done: true,
            done_reason: reason,
        }
    }
}

/// Apply one discrete action. Altitude is held; bounds are not enforced here.
pub fn step(pose: &DronePose, action_index: usize, _world: &WorldConfig) -> Result<DronePose> {
    let d = Action::new(action_index)?.displacement();
    let mv = |p: Position3| Position3::new(p.x + d.x, p.y + d.y, p.z);
    Ok(DronePose {
        actual: mv(pose.actual),
        reported: mv(pose.reported),
    })
}

/// Distance from the drone to the closest obstacle surface. World bounds
/// are not obstacles. Returns [`NO_OBSTACLE_DISTANCE`] for an empty world.
pub fn nearest_obstacle_distance(pose: &DronePose, world: &WorldConfig) -> f64 {
    let p = pose.planar();
    world
        .shapes()
        .map(|s| s.distance(p))
        .fold(NO_OBSTACLE_DISTANCE, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTemplate {
    Farmland,
    Corridor,
    Empty,
}

impl std::str::FromStr for ScenarioTemplate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "farmland" => Ok(Self::Farmland),
            "corridor" => Ok(Self::Corridor),
            "empty" => Ok(Self::Empty),
            other => Err(Error::config(
                "template",
                format!("unknown template {other:?}; expected farmland, corridor or empty"),
            )),
        }
    }
}

pub const FARMLAND_HALF_SIZE: f64 = 20.0;
pub const BAR_THICKNESS: f64 = 0.3;
/// No bar may come closer than this to the start or goal of a scenario.
pub const SPAWN_CLEARANCE: f64 = 2.5;

pub fn spawn_scenario(seed: u64, template: ScenarioTemplate) -> WorldConfig {
    let h = FARMLAND_HALF_SIZE;
    let mut world = WorldConfig::empty(-h, h, -h, h);
    world.rng_seed = seed;
    match template {
        ScenarioTemplate::Empty => {}
        ScenarioTemplate::Farmland => spawn_farmland(&mut world, seed),
        ScenarioTemplate::Corridor => spawn_corridor(&mut world, seed),
    }
    world
}

fn spawn_farmland(world: &mut WorldConfig, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    world.start = Vec2::ZERO;
    world.goal = Vec2::new(12.0, 12.0);
    // house, tower and a shed
    world.obstacles = vec![
        Obstacle::Rectangle {
            center: Vec2::new(-15.0, -14.5),
            half_extents: Vec2::new(2.5, 2.0),
        },
        Obstacle::Rectangle {
            center: Vec2::new(15.5, 15.5),
            half_extents: Vec2::new(1.0, 1.0),
        },
        Obstacle::Rectangle {
            center: Vec2::new(-15.0, 13.0),
            half_extents: Vec2::new(1.5, 1.0),
        },
    ];
    let n_bars = rng.gen_range(4..=8);
    let landmarks: Vec<OrientedBox> = world.shapes().collect();
    let mut placed = 0;
    let mut attempts = 0;
    while placed < n_bars && attempts < 1000 {
        attempts += 1;
        let center = Vec2::new(rng.gen_range(-14.0..14.0), rng.gen_range(-14.0..14.0));
        let length = rng.gen_range(4.0..8.0);
        let angle = if rng.gen_bool(0.7) {
            if rng.gen_bool(0.5) {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            }
        } else {
            rng.gen_range(0.0..std::f64::consts::PI)
        };
        let half = Vec2::from_angle(angle) * (length * 0.5);
        let bar = Obstacle::Bar {
            a: center - half,
            b: center + half,
            thickness: BAR_THICKNESS,
        };
        let shape = bar.shape();
        let clear_of_endpoints = shape.distance(world.start) > SPAWN_CLEARANCE
            && shape.distance(world.goal) > SPAWN_CLEARANCE;
        let clear_of_landmarks = landmarks
            .iter()
            .all(|l| l.corners().iter().all(|c| shape.distance(*c) > 1.0) && l.distance(center) > 1.0);
        if clear_of_endpoints && clear_of_landmarks {
            world.obstacles.push(bar);
            placed += 1;
        }
    }
}

fn spawn_corridor(world: &mut WorldConfig, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    world.y_min = -4.0;
    world.y_max = 4.0;
    world.start = Vec2::ZERO;
    world.goal = Vec2::new(16.0, 0.0);
    // baffles alternate between the two walls and leave a gap of at least 3 m
    let mut x = rng.gen_range(3.5..5.0);
    let mut from_left = rng.gen_bool(0.5);
    while x < 14.0 {
        let reach = rng.gen_range(2.5..4.5);
        let (wall, tip) = if from_left {
            (world.y_max, world.y_max - reach)
        } else {
            (world.y_min, world.y_min + reach)
        };
        world.obstacles.push(Obstacle::Bar {
            a: Vec2::new(x, wall),
            b: Vec2::new(x, tip),
            thickness: BAR_THICKNESS,
        });
        from_left = !from_left;
        x += rng.gen_range(3.5..5.5);
    }
}

/// Pose source after a teleport to the start position: the true pose jumps
/// home at once while the reported pose slides there by a fixed step per
/// axis per tick. A move commanded while the estimate lags is tracked
/// against the stale estimate, so every tick the vehicle creeps by
/// `gain * (setpoint - reported)`, capped at `drift_limit`. Without a
/// command the vehicle holds still at home.
#[derive(Debug, Clone)]
pub struct LaggedReset<'w> {
    world: &'w WorldConfig,
    actual: Position3,
    reported: Position3,
    home: Position3,
    setpoint: Option<Position3>,
    lag_step: f64,
    lagging: bool,
    /// Proportional gain of the position controller, per tick.
    pub gain: f64,
    /// Maximum drift per tick while the estimate lags.
    pub drift_limit: f64,
    /// Seconds per tick.
    pub tick: f64,
    time: f64,
    collisions: usize,
    trail: Vec<Position3>,
}

impl<'w> LaggedReset<'w> {
    /// Teleport the drone home. No move is pending until one is commanded.
    pub fn begin_reset(world: &'w WorldConfig, pose: &DronePose) -> Self {
        let home = world.home();
        let lagging = world.reset_lag_enabled && pose.reported.distance(home) > 0.0;
        Self {
            world,
            actual: home,
            reported: pose.reported,
            home,
            setpoint: None,
            lag_step: world.reset_lag_step,
            lagging,
            gain: 0.05,
            drift_limit: 0.1,
            tick: 0.5,
            time: 0.0,
            collisions: 0,
            trail: vec![home],
        }
    }

    /// Advance one tick and return the pose the control layer now sees.
    pub fn poll_reported_pose(&mut self) -> DronePose {
        self.time += self.tick;
        if !self.world.reset_lag_enabled {
            self.lagging = false;
            self.reported = self.actual;
        }
        if self.lagging {
            let setpoint = self.setpoint.unwrap_or(self.reported);
            let err = (setpoint.planar() - self.reported.planar()) * self.gain;
            let n = err.norm();
            let drift = if n > self.drift_limit {
                err * (self.drift_limit / n)
            } else {
                err
            };
            let next = Position3::new(self.actual.x + drift.x, self.actual.y + drift.y, self.actual.z);
            self.move_actual(next);
            let s = self.lag_step;
            let approach = |r: f64, h: f64| if (h - r).abs() <= s { h } else { r + s * (h - r).signum() };
            self.reported = Position3::new(
                approach(self.reported.x, self.home.x),
                approach(self.reported.y, self.home.y),
                approach(self.reported.z, self.home.z),
            );
            if self.reported == self.home {
                self.lagging = false;
            }
        } else {
            self.reported = self.actual;
        }
        self.pose()
    }

    /// Command the vehicle to fly to `target`. Once the estimate has caught
    /// up the move is flown closed-loop in a straight line.
    pub fn command_move(&mut self, target: Position3) {
        self.setpoint = Some(target);
        if !self.lagging {
            self.move_actual(target);
            self.reported = self.actual;
        }
    }

    /// Poll until the estimate has converged (bounded by `max_ticks`), then
    /// fly to the current setpoint.
    pub fn settle(&mut self, max_ticks: usize) {
        for _ in 0..max_ticks {
            if !self.lagging {
                break;
            }
            self.poll_reported_pose();
        }
        if let (false, Some(target)) = (self.lagging, self.setpoint) {
            self.command_move(target);
        }
    }

    fn move_actual(&mut self, next: Position3) {
        if self
            .world
            .segment_clearance_violated(self.actual.planar(), next.planar(), self.world.col_threshold)
        {
            self.collisions += 1;
        }
        self.actual = next;
        self.trail.push(next);
    }

    pub fn pose(&self) -> DronePose {
        DronePose {
            actual: self.actual,
            reported: self.reported,
        }
    }

    pub fn is_converged(&self) -> bool {
        !self.lagging
    }

    pub fn elapsed(&self) -> f64 {
        self.time
    }

    pub fn home(&self) -> Position3 {
        self.home
    }

    /// Number of ticks on which the true vehicle came within the collision
    /// threshold of an obstacle.
    pub fn collision_events(&self) -> usize {
        self.collisions
    }

    pub fn trail(&self) -> &[Position3] {
        &self.trail
    }
}
