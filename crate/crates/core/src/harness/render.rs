//! Path overlays rendered as binary PPM images.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mapping::bresenham;
use crate::world::WorldConfig;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [255, 255, 255];
pub const OBSTACLE: Rgb = [90, 90, 90];
pub const PATH: Rgb = [220, 20, 20];
pub const START: Rgb = [20, 160, 40];
pub const TARGET: Rgb = [30, 60, 220];

/// RGB raster over the world rectangle; row 0 is the top (largest y).
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pixels: Vec<Rgb>,
    x_min: f64,
    y_max: f64,
    scale: f64,
}

impl Canvas {
    pub fn for_world(world: &WorldConfig, pixels_per_meter: f64) -> Result<Self> {
        if !(pixels_per_meter > 0.0) {
            return Err(Error::config("pixels_per_meter", "must be positive"));
        }
        let width = ((world.x_max - world.x_min) * pixels_per_meter).ceil() as usize;
        let height = ((world.y_max - world.y_min) * pixels_per_meter).ceil() as usize;
        if width == 0 || height == 0 || width * height > 1 << 26 {
            return Err(Error::config("pixels_per_meter", format!("image would be {width}x{height}")));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
            x_min: world.x_min,
            y_max: world.y_max,
            scale: pixels_per_meter,
        })
    }

    fn to_pixel(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.x_min) * self.scale).floor() as i64,
            ((self.y_max - p.y) * self.scale).floor() as i64,
        )
    }

    fn center_of(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            self.x_min + (col as f64 + 0.5) / self.scale,
            self.y_max - (row as f64 + 0.5) / self.scale,
        )
    }

    pub fn get(&self, col: usize, row: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    fn put(&mut self, (c, r): (i64, i64), color: Rgb) {
        if c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height {
            self.pixels[r as usize * self.width + c as usize] = color;
        }
    }

    pub fn fill_obstacles(&mut self, world: &WorldConfig) {
        let shapes: Vec<_> = world.shapes().collect();
        for row in 0..self.height {
            for col in 0..self.width {
                let p = self.center_of(col, row);
                if shapes.iter().any(|s| s.contains(p)) {
                    self.pixels[row * self.width + col] = OBSTACLE;
                }
            }
        }
    }

    pub fn polyline(&mut self, points: &[Vec2], color: Rgb) {
        for w in points.windows(2) {
            for c in bresenham(self.to_pixel(w[0]), self.to_pixel(w[1])) {
                self.put(c, color);
            }
        }
        if let [only] = points {
            self.put(self.to_pixel(*only), color);
        }
    }

    /// Filled disk of radius `r` meters.
    pub fn disk(&mut self, center: Vec2, r: f64, color: Rgb) {
        let (c0, r0) = self.to_pixel(center);
        let rp = (r * self.scale).ceil() as i64;
        for dr in -rp..=rp {
            for dc in -rp..=rp {
                let (c, row) = (c0 + dc, r0 + dr);
                if c < 0 || row < 0 {
                    continue;
                }
                if self.center_of(c as usize, row as usize).distance(center) <= r {
                    self.put((c, row), color);
                }
            }
        }
    }

    /// Circle outline of radius `r` meters.
    pub fn ring(&mut self, center: Vec2, r: f64, color: Rgb) {
        let n = ((r * self.scale * 8.0).ceil() as usize).max(16);
        let pts: Vec<Vec2> = (0..=n)
            .map(|k| center + Vec2::from_angle(std::f64::consts::TAU * k as f64 / n as f64) * r)
            .collect();
        self.polyline(&pts, color);
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().flatten());
        out
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_ppm()).map_err(|e| Error::io(path, e))
    }
}
