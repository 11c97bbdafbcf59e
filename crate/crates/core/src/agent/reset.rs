use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{LaggedReset, Position3};

/// How a far coordinate is pulled toward home when staging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagingRule {
    /// `x <- sign(x) * (|x| - offset)`: the staging point stays on the same
    /// side of home as the drone.
    #[default]
    SignPreserving,
    /// `x <- |x| - offset`, which mirrors negative coordinates.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResetConfig {
    pub a_thr: f64,
    pub b_thr: f64,
    pub offset_a: f64,
    pub offset_b: f64,
    pub soft_timeout: f64,
    pub hard_timeout: f64,
    /// Arms the soft timeout. Nothing in the reset loop sets it, so the
    /// soft timeout only applies when configured up front.
    pub stop_flag: bool,
    /// Distance from home at which the loop stops waiting.
    pub arrive_radius: f64,
    pub staging: StagingRule,
}

impl Default for ResetConfig {
    fn default() -> Self {
        Self {
            a_thr: 3.0,
            b_thr: 6.0,
            offset_a: 2.0,
            offset_b: 4.0,
            soft_timeout: 20.0,
            hard_timeout: 60.0,
            stop_flag: false,
            arrive_radius: 1.0,
            staging: StagingRule::SignPreserving,
        }
    }
}

impl ResetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_thr > self.a_thr && self.a_thr > 0.0) {
            return Err(Error::config("a_thr/b_thr", "need b_thr > a_thr > 0"));
        }
        if !(self.offset_b > self.offset_a && self.offset_a > 0.0) {
            return Err(Error::config("offset_a/offset_b", "need offset_b > offset_a > 0"));
        }
        if !(self.soft_timeout > 0.0 && self.hard_timeout > 0.0) {
            return Err(Error::config("timeouts", "must be positive"));
        }
        Ok(())
    }

    fn shrink(&self, v: f64, offset: f64) -> f64 {
        match self.staging {
            StagingRule::SignPreserving => v.signum() * (v.abs() - offset),
            StagingRule::Literal => v.abs() - offset,
        }
    }
}

/// What the reset loop needs from the vehicle.
pub trait ResetDriver {
    /// Position currently reported to the control layer.
    fn reported(&self) -> Position3;
    fn home(&self) -> Position3;
    fn command_move(&mut self, target: Position3);
    /// Let one control period pass.
    fn tick(&mut self);
    /// Seconds since the reset was issued.
    fn elapsed(&self) -> f64;
}

impl ResetDriver for LaggedReset<'_> {
    fn reported(&self) -> Position3 {
        self.pose().reported
    }

    fn home(&self) -> Position3 {
        LaggedReset::home(self)
    }

    fn command_move(&mut self, target: Position3) {
        LaggedReset::command_move(self, target);
    }

    fn tick(&mut self) {
        self.poll_reported_pose();
    }

    fn elapsed(&self) -> f64 {
        LaggedReset::elapsed(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetExit {
    Arrived,
    SoftTimeout,
    HardTimeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetReport {
    pub exit: ResetExit,
    /// Staging points sent, in order.
    pub staging: Vec<Position3>,
    pub ticks: usize,
    pub elapsed: f64,
}

/// Wait for the reported pose to come home after a teleport, steering
/// toward one intermediate staging point while it lags, then fly home.
pub fn reset_sequence(driver: &mut impl ResetDriver, cfg: &ResetConfig) -> Result<ResetReport> {
    cfg.validate()?;
    let home = driver.home();
    let first = driver.reported();
    let (mut x_t, mut y_t) = (first.x, first.y);
    let mut modified = true;
    let mut start: Option<Position3> = None;
    let mut staging = Vec::new();
    let mut ticks = 0;
    let exit = loop {
        let c = driver.reported();
        if c.distance(home) <= cfg.arrive_radius {
            break ResetExit::Arrived;
        }
        if (x_t != c.x || y_t != c.y) && modified {
            if x_t.abs() >= cfg.a_thr {
                let off = if x_t.abs() >= cfg.b_thr { cfg.offset_b } else { cfg.offset_a };
                x_t = cfg.shrink(x_t, off);
                modified = false;
            } else {
                x_t = c.x;
            }
            if y_t.abs() >= cfg.a_thr {
                let off = if y_t.abs() >= cfg.b_thr { cfg.offset_b } else { cfg.offset_a };
                y_t = cfg.shrink(y_t, off);
                modified = false;
            } else {
                y_t = c.y;
            }
            start = Some(Position3::new(x_t, y_t, home.z));
        }
        if let Some(s) = start {
            driver.command_move(s);
            if staging.last() != Some(&s) {
                staging.push(s);
            }
        }
        let t = driver.elapsed();
        if t > cfg.soft_timeout && cfg.stop_flag {
            break ResetExit::SoftTimeout;
        } else if t > cfg.hard_timeout {
            break ResetExit::HardTimeout;
        }
        driver.tick();
        ticks += 1;
    };
    driver.command_move(home);
    Ok(ResetReport {
        exit,
        staging,
        ticks,
        elapsed: driver.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{DronePose, WorldConfig};

    /// Reported pose frozen in place.
    struct Stuck {
        at: Position3,
        time: f64,
        moves: Vec<Position3>,
    }

    impl ResetDriver for Stuck {
        fn reported(&self) -> Position3 {
            self.at
        }
        fn home(&self) -> Position3 {
            Position3::new(0.0, 0.0, 4.4)
        }
        fn command_move(&mut self, t: Position3) {
            self.moves.push(t);
        }
        fn tick(&mut self) {
            self.time += 0.5;
        }
        fn elapsed(&self) -> f64 {
            self.time
        }
    }

    #[test]
    fn already_home_exits_at_once() {
        let w = WorldConfig::empty(-20.0, 20.0, -20.0, 20.0);
        let mut r = LaggedReset::begin_reset(&w, &DronePose::at(0.5, 0.3, 4.4));
        let rep = reset_sequence(&mut r, &ResetConfig::default()).unwrap();
        assert_eq!(rep.exit, ResetExit::Arrived);
        assert_eq!(rep.ticks, 0);
        assert!(rep.staging.is_empty());
    }

    #[test]
    fn staging_arithmetic() {
        let w = WorldConfig::empty(-20.0, 20.0, -20.0, 20.0);
        let mut r = LaggedReset::begin_reset(&w, &DronePose::at(7.0, 4.0, 4.4));
        let rep = reset_sequence(&mut r, &ResetConfig::default()).unwrap();
        assert_eq!(rep.staging, vec![Position3::new(3.0, 2.0, 4.4)]);
        assert_eq!(rep.exit, ResetExit::Arrived);
        let mut r = LaggedReset::begin_reset(&w, &DronePose::at(-7.0, 1.0, 4.4));
        let rep = reset_sequence(&mut r, &ResetConfig::default()).unwrap();
        // y is below a_thr and snaps to the reported value at that tick
        assert_eq!(rep.staging, vec![Position3::new(-3.0, 0.0, 4.4)]);
    }

    #[test]
    fn stuck_stream_hits_hard_timeout() {
        let mut d = Stuck {
            at: Position3::new(9.0, 9.0, 4.4),
            time: 0.0,
            moves: Vec::new(),
        };
        let rep = reset_sequence(&mut d, &ResetConfig::default()).unwrap();
        assert_eq!(rep.exit, ResetExit::HardTimeout);
        assert!(rep.elapsed > 60.0 && rep.elapsed <= 60.5);
        assert!(rep.staging.is_empty());
        assert_eq!(*d.moves.last().unwrap(), Position3::new(0.0, 0.0, 4.4));
        let cfg = ResetConfig {
            stop_flag: true,
            ..ResetConfig::default()
        };
        d.time = 0.0;
        assert_eq!(reset_sequence(&mut d, &cfg).unwrap().exit, ResetExit::SoftTimeout);
    }
}
