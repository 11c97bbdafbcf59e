use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{normalize_angle, Vec2};
use crate::lidar::RawScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogOddsParams {
    pub hit: f64,
    pub miss: f64,
    pub min: f64,
    pub max: f64,
    pub occupied_above: f64,
    pub free_below: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self {
            hit: 0.85,
            miss: -0.4,
            min: -4.0,
            max: 4.0,
            occupied_above: 1.0,
            free_below: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Free,
    Unknown,
    Occupied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PoseEstimate {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Log-odds occupancy grid. Cell `(ix, iy)` is centered on the world point
/// `origin + resolution * (ix, iy)`; pixel coordinates are continuous cell
/// indices, so integer pixels are cell centers. `iy` grows with world y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<f64>,
    pub params: LogOddsParams,
}

impl OccupancyGrid {
    pub fn new(resolution: f64, origin: Vec2, width: usize, height: usize) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::config("resolution", "must be positive"));
        }
        if width == 0 || height == 0 {
            return Err(Error::config("width/height", "grid must be non-empty"));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            cells: vec![0.0; width * height],
            params: LogOddsParams::default(),
        })
    }

    /// Grid covering the world rectangle `[x0, x1] x [y0, y1]`.
    pub fn covering(x0: f64, x1: f64, y0: f64, y1: f64, resolution: f64) -> Result<Self> {
        let w = ((x1 - x0) / resolution).round() as usize + 1;
        let h = ((y1 - y0) / resolution).round() as usize + 1;
        Self::new(resolution, Vec2::new(x0, y0), w, h)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.cells[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let i = self.index(ix, iy);
        self.cells[i] = v.clamp(self.params.min, self.params.max);
    }

    pub fn add(&mut self, ix: usize, iy: usize, dv: f64) {
        let i = self.index(ix, iy);
        self.cells[i] = (self.cells[i] + dv).clamp(self.params.min, self.params.max);
    }

    pub fn world_to_pixel(&self, p: Vec2) -> Vec2 {
        (p - self.origin) * (1.0 / self.resolution)
    }

    pub fn pixel_to_world(&self, p: Vec2) -> Vec2 {
        self.origin + p * self.resolution
    }

    /// Cell containing the world point, or `None` outside the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let q = self.world_to_pixel(p);
        let (ix, iy) = (q.x.round() as i64, q.y.round() as i64);
        self.in_bounds(ix, iy).then_some((ix as usize, iy as usize))
    }

    pub fn classify_value(&self, v: f64) -> CellClass {
        if v > self.params.occupied_above {
            CellClass::Occupied
        } else if v < self.params.free_below {
            CellClass::Free
        } else {
            CellClass::Unknown
        }
    }

    pub fn class(&self, ix: usize, iy: usize) -> CellClass {
        self.classify_value(self.get(ix, iy))
    }

    /// Class of the cell under an arbitrary pixel coordinate; outside the
    /// grid counts as occupied.
    pub fn class_at_pixel(&self, p: Vec2) -> CellClass {
        let (ix, iy) = (p.x.round() as i64, p.y.round() as i64);
        if self.in_bounds(ix, iy) {
            self.class(ix as usize, iy as usize)
        } else {
            CellClass::Occupied
        }
    }

    /// Occupancy probability of a log-odds value.
    pub fn probability(v: f64) -> f64 {
        1.0 / (1.0 + (-v).exp())
    }

    pub fn occupied_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 0..self.height {
            for ix in 0..self.width {
                if self.class(ix, iy) == CellClass::Occupied {
                    out.push((ix, iy));
                }
            }
        }
        out
    }

    pub fn count_class(&self, c: CellClass) -> usize {
        self.cells.iter().filter(|v| self.classify_value(**v) == c).count()
    }

    /// Fold one scan into the map. Cells strictly between the sensor cell and
    /// the beam end receive the miss update; the end cell receives the hit
    /// update unless the beam ran out at max range. The sensor's own cell is
    /// set to certainly free: the vehicle is standing in it.
    pub fn integrate_scan(&mut self, pose: &PoseEstimate, scan: &RawScan) -> Result<()> {
        let start = self.cell_of(pose.position()).ok_or(Error::PoseOutOfBounds {
            x: pose.x,
            y: pose.y,
            what: "grid",
        })?;
        self.set(start.0, start.1, self.params.min);
        let start = (start.0 as i64, start.1 as i64);
        for (deg, &r) in scan.ranges.iter().enumerate() {
            let bearing = pose.theta + (deg as f64).to_radians();
            let end_w = pose.position() + Vec2::from_angle(bearing) * r;
            let end_p = self.world_to_pixel(end_w);
            let end = (end_p.x.round() as i64, end_p.y.round() as i64);
            let hit = r < scan.max_range;
            let cells = bresenham(start, end);
            let last = cells.len() - 1;
            for (k, &(cx, cy)) in cells.iter().enumerate() {
                if k == 0 || !self.in_bounds(cx, cy) {
                    continue;
                }
                if k == last {
                    if hit {
                        self.add(cx as usize, cy as usize, self.params.hit);
                    } else if end != start {
                        self.add(cx as usize, cy as usize, self.params.miss);
                    }
                } else {
                    self.add(cx as usize, cy as usize, self.params.miss);
                }
            }
        }
        Ok(())
    }
}

/// Integer cells on the discrete line from `a` to `b`, both included.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if x == b.0 && y == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
