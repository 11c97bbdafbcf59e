//! Simulated single-plane 360 degree LiDAR.
//!
//! A scan is 360 ranges indexed by bearing degree in the body frame
//! (x forward, y left, counter-clockwise). The 360 beams are reduced to 8
//! sector minima aligned with the action set, passed through a jump filter
//! that suppresses spurious short returns caused by attitude disturbance,
//! and concatenated with the direction to the target into the agent state.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::world::{Action, DronePose, Position3, WorldConfig, N_ACTIONS};

pub const N_BEAMS: usize = 360;
pub const N_SECTORS: usize = 8;
pub const BEAMS_PER_SECTOR: usize = N_BEAMS / N_SECTORS;
pub const STATE_DIM: usize = 3 + N_SECTORS;

/// Returns closer than this are reported as this value.
pub const MIN_RANGE: f64 = 1e-3;

/// Jumps at least this large between consecutive pooled readings cannot be
/// produced by a single action (the largest move is sqrt 2).
pub const JUMP_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScan {
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl RawScan {
    pub fn uniform(range: f64, max_range: f64) -> Self {
        Self {
            ranges: vec![range.min(max_range); N_BEAMS],
            max_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranges.len() != N_BEAMS {
            return Err(Error::DimensionMismatch {
                expected: N_BEAMS,
                got: self.ranges.len(),
            });
        }
        if let Some(r) = self
            .ranges
            .iter()
            .find(|r| !(**r > 0.0 && **r <= self.max_range))
        {
            return Err(Error::Parse {
                what: "scan",
                reason: format!("range {r} outside (0, {}]", self.max_range),
            });
        }
        Ok(())
    }

    /// True when no beam returned a hit.
    pub fn is_degenerate(&self) -> bool {
        self.ranges.iter().all(|r| *r >= self.max_range)
    }
}

/// Spurious-return model: while the airframe is tilted the scan plane
/// clips the ground or nearby structure and individual beams report a
/// short, random range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    Off,
    AttitudeSpikes {
        /// Per-beam spike probability at full disturbance.
        p_noise: f64,
        /// Disturbance magnitude in [0, 1]; scales `p_noise`.
        disturbance: f64,
        short_min: f64,
        short_max: f64,
    },
}

impl NoiseModel {
    pub fn spikes(disturbance: f64) -> Self {
        NoiseModel::AttitudeSpikes {
            p_noise: 0.02,
            disturbance: disturbance.clamp(0.0, 1.0),
            short_min: 0.2,
            short_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lidar {
    pub max_range: f64,
}

impl Default for Lidar {
    fn default() -> Self {
        Self { max_range: 12.0 }
    }
}

impl Lidar {
    pub fn new(max_range: f64) -> Self {
        Self { max_range }
    }

    pub fn cast_scan(&self, world: &WorldConfig, pose: &DronePose, noise: &NoiseModel, seed: u64) -> Result<RawScan> {
        self.cast_from(world, pose.planar(), 0.0, noise, seed)
    }

    /// Cast all beams from `origin` with the body x axis at `heading`.
    pub fn cast_from(
        &self,
        world: &WorldConfig,
        origin: Vec2,
        heading: f64,
        noise: &NoiseModel,
        seed: u64,
    ) -> Result<RawScan> {
        if !world.contains(origin) {
            return Err(Error::PoseOutOfBounds {
                x: origin.x,
                y: origin.y,
                what: "world bounds",
            });
        }
        let shapes: Vec<_> = world.shapes().collect();
        let mut ranges = Vec::with_capacity(N_BEAMS);
        for deg in 0..N_BEAMS {
            let dir = Vec2::from_angle(heading + (deg as f64).to_radians());
            let mut r = bounds_exit(world, origin, dir);
            for s in &shapes {
                if let Some(t) = s.ray_hit(origin, dir) {
                    r = r.min(t);
                }
            }
            ranges.push(r.clamp(MIN_RANGE, self.max_range));
        }
        if let NoiseModel::AttitudeSpikes {
            p_noise,
            disturbance,
            short_min,
            short_max,
        } = *noise
        {
            let p = (p_noise * disturbance).clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for r in ranges.iter_mut() {
                // draw both numbers for every beam so the stream layout is fixed
                let hit = rng.gen::<f64>() < p;
                let short = rng.gen_range(short_min..short_max);
                if hit {
                    *r = r.min(short.max(MIN_RANGE));
                }
            }
        }
        Ok(RawScan {
            ranges,
            max_range: self.max_range,
        })
    }
}

fn bounds_exit(world: &WorldConfig, o: Vec2, d: Vec2) -> f64 {
    let mut t = f64::INFINITY;
    if d.x > 0.0 {
        t = t.min((world.x_max - o.x) / d.x);
    } else if d.x < 0.0 {
        t = t.min((world.x_min - o.x) / d.x);
    }
    if d.y > 0.0 {
        t = t.min((world.y_max - o.y) / d.y);
    } else if d.y < 0.0 {
        t = t.min((world.y_min - o.y) / d.y);
    }
    t.max(0.0)
}

/// Bearing (degrees) at the middle of sector `i`: the heading of action `i`.
pub fn sector_center_deg(i: usize) -> f64 {
    let h = Action::new(i).expect("sector index").heading().to_degrees();
    h.rem_euclid(360.0)
}

/// Sector owning the beam at integer bearing `deg`. Sectors are the
/// half-open arcs [center - 22.5, center + 22.5).
pub fn sector_of_beam(deg: usize) -> usize {
    (0..N_SECTORS)
        .find(|&i| {
            let off = (deg as f64 - sector_center_deg(i) + 22.5).rem_euclid(360.0);
            off < 45.0
        })
        .expect("sectors partition the circle")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorDistances(pub [f64; N_SECTORS]);

impl SectorDistances {
    pub fn uniform(d: f64) -> Self {
        SectorDistances([d; N_SECTORS])
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Thresholded min-pooling of the scan into the 8 action-aligned sectors.
pub fn pool_sectors(scan: &RawScan, det_range: f64) -> SectorDistances {
    let mut out = [det_range; N_SECTORS];
    for (deg, r) in scan.ranges.iter().enumerate() {
        let s = sector_of_beam(deg);
        out[s] = out[s].min(*r);
    }
    SectorDistances(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionReading {
    pub linear_velocity: f64,
    pub roll: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub det_range: f64,
    pub vl_thr: f64,
    pub r_thr: f64,
    pub p_thr: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            det_range: 6.0,
            vl_thr: 0.3,
            r_thr: 0.1,
            p_thr: 0.1,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.det_range > 0.0) {
            return Err(Error::config("det_range", "must be positive"));
        }
        if !(self.vl_thr >= 0.0 && self.r_thr >= 0.0 && self.p_thr >= 0.0) {
            return Err(Error::config("filter thresholds", "must be non-negative"));
        }
        Ok(())
    }

    /// Motion quiet enough for a trustworthy reading.
    pub fn motion_ok(&self, m: &MotionReading) -> bool {
        m.linear_velocity.abs() <= self.vl_thr && m.roll.abs() <= self.r_thr && m.pitch.abs() <= self.p_thr
    }
}

/// Per-episode state of the jump filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub config: FilterConfig,
    /// Pooled reading from the previous accepted update; `None` before the
    /// first reading of the episode.
    pub lidar_data_t: Option<[f64; N_SECTORS]>,
    pub index_list: [u32; N_SECTORS],
    pub detect_flag: bool,
    /// Output of the previous accepted update, returned while gated.
    pub last_output: [f64; N_SECTORS],
}

impl FilterState {
    pub fn new(config: FilterConfig) -> Self {
        Self {
            config,
            lidar_data_t: None,
            index_list: [0; N_SECTORS],
            detect_flag: true,
            last_output: [config.det_range; N_SECTORS],
        }
    }

    /// Arm the filter for the next reading (set after every executed action).
    pub fn request(&mut self) {
        self.detect_flag = true;
    }

    pub fn update(&mut self, pooled: &SectorDistances, motion: &MotionReading) -> SectorDistances {
        if !(self.detect_flag && self.config.motion_ok(motion)) {
            return SectorDistances(self.last_output);
        }
        let mut out = pooled.0;
        if let Some(prev) = self.lidar_data_t {
            let det = self.config.det_range;
            let d_r = (0.5 * det).round();
            let give_back = (det - d_r - 1.0).round() as i64;
            for i in 0..N_SECTORS {
                if prev[i] - pooled.0[i] >= JUMP_THRESHOLD {
                    self.index_list[i] += 1;
                    if self.index_list[i] as f64 >= d_r {
                        out[i] = det - d_r + 1.0;
                        self.index_list[i] = (self.index_list[i] as i64 - give_back).max(0) as u32;
                    } else {
                        out[i] = prev[i] - 1.0;
                    }
                } else if self.index_list[i] > 0 {
                    self.index_list[i] -= 1;
                }
            }
        }
        self.lidar_data_t = Some(pooled.0);
        self.last_output = out;
        self.detect_flag = false;
        SectorDistances(out)
    }
}

/// Functional form of [`FilterState::update`].
pub fn filter_scan(
    fs: &FilterState,
    pooled: &SectorDistances,
    motion: &MotionReading,
) -> (SectorDistances, FilterState) {
    let mut next = fs.clone();
    let out = next.update(pooled, motion);
    (out, next)
}

/// `[x_d, y_d, z_d, dist_0 .. dist_7]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState(pub [f64; STATE_DIM]);

impl AgentState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn direction(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn sectors(&self) -> SectorDistances {
        let mut s = [0.0; N_SECTORS];
        s.copy_from_slice(&self.0[3..]);
        SectorDistances(s)
    }
}

pub fn build_state(current: Position3, target: Position3, filtered: &SectorDistances) -> AgentState {
    let mut s = [0.0; STATE_DIM];
    s[0] = target.x - current.x;
    s[1] = target.y - current.y;
    s[2] = target.z - current.z;
    s[3..].copy_from_slice(&filtered.0);
    AgentState(s)
}

const _: () = assert!(N_SECTORS == N_ACTIONS);

/// CSV writer for scan dumps: `timestamp,r0,...,r359`.
pub struct ScanDump<W: Write> {
    out: csv::Writer<W>,
}

impl ScanDump<std::fs::File> {
    pub fn create(path: &Path) -> Result<Self> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        ScanDump::new(f)
    }
}

impl<W: Write> ScanDump<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["timestamp".to_string()];
        header.extend((0..N_BEAMS).map(|i| format!("r{i}")));
        out.write_record(&header)?;
        Ok(Self { out })
    }

    pub fn push(&mut self, timestamp: f64, scan: &RawScan) -> Result<()> {
        let mut row = vec![timestamp.to_string()];
        row.extend(scan.ranges.iter().map(|r| r.to_string()));
        self.out.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("scan dump", e))?;
        self.out
            .into_inner()
            .map_err(|e| Error::io("scan dump", e.into_error()))
    }
}

/// CSV writer for filter traces: per-sector input, output and counters.
pub struct FilterTrace<W: Write> {
    out: csv::Writer<W>,
    step: usize,
}

impl<W: Write> FilterTrace<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["step".to_string()];
        header.extend((0..N_SECTORS).map(|i| format!("before_{i}")));
        header.extend((0..N_SECTORS).map(|i| format!("after_{i}")));
        header.extend((0..N_SECTORS).map(|i| format!("index_{i}")));
        out.write_record(&header)?;
        Ok(Self { out, step: 0 })
    }

    pub fn push(&mut self, before: &SectorDistances, after: &SectorDistances, fs: &FilterState) -> Result<()> {
        let mut row = vec![self.step.to_string()];
        row.extend(before.0.iter().map(|v| v.to_string()));
        row.extend(after.0.iter().map(|v| v.to_string()));
        row.extend(fs.index_list.iter().map(|v| v.to_string()));
        self.out.write_record(&row)?;
        self.step += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("filter trace", e))?;
        self.out
            .into_inner()
            .map_err(|e| Error::io("filter trace", e.into_error()))
    }
}
