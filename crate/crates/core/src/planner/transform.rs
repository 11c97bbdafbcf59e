use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mapping::MapCorners;

use super::rrt::{PixelPath, WorldPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformMode {
    /// `x = (r cos t + x_r) * sx`, `y = (r sin t + y_r) * sy` where
    /// `(x_r, y_r)` is the pixel rotated by `t` and `r` its norm.
    Literal,
    /// Rotate about the lower-left map corner, scale per axis, then offset
    /// to the world minimum.
    #[default]
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub corners: MapCorners,
    pub x_min_g: f64,
    pub x_max_g: f64,
    pub y_min_g: f64,
    pub y_max_g: f64,
    /// Rotation applied to pixel coordinates, radians.
    pub theta: f64,
    pub mode: TransformMode,
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max_g > self.x_min_g) {
            return Err(Error::config("x_max_g", "must exceed x_min_g"));
        }
        if !(self.y_max_g > self.y_min_g) {
            return Err(Error::config("y_max_g", "must exceed y_min_g"));
        }
        if !self.theta.is_finite() {
            return Err(Error::config("theta", "must be finite"));
        }
        let (w, h) = self.edge_lengths();
        if !(w > 0.0) || !(h > 0.0) {
            return Err(Error::DegenerateTransform("map corner edge has zero length"));
        }
        Ok(())
    }

    /// `(|UR - UL|, |UR - LR|)` in pixels.
    pub fn edge_lengths(&self) -> (f64, f64) {
        let c = &self.corners;
        (
            c.upper_right.distance(c.upper_left),
            c.upper_right.distance(c.lower_right),
        )
    }

    /// Meters per pixel along each axis.
    pub fn ratios(&self) -> (f64, f64) {
        let (w, h) = self.edge_lengths();
        ((self.x_max_g - self.x_min_g) / w, (self.y_max_g - self.y_min_g) / h)
    }
}

pub fn transform_point(p: Vec2, cfg: &TransformConfig) -> Result<Vec2> {
    cfg.validate()?;
    let (sx, sy) = cfg.ratios();
    Ok(match cfg.mode {
        TransformMode::Literal => {
            let r = p.norm();
            let pr = p.rotate(cfg.theta);
            let (s, c) = cfg.theta.sin_cos();
            Vec2::new((r * c + pr.x) * sx, (r * s + pr.y) * sy)
        }
        TransformMode::Affine => {
            let q = (p - cfg.corners.lower_left).rotate(cfg.theta);
            Vec2::new(q.x * sx + cfg.x_min_g, q.y * sy + cfg.y_min_g)
        }
    })
}

/// Inverse of the affine mode: world meters back to pixels.
pub fn inverse_transform_point(w: Vec2, cfg: &TransformConfig) -> Result<Vec2> {
    cfg.validate()?;
    if cfg.mode != TransformMode::Affine {
        return Err(Error::config("mode", "only the affine transform is invertible"));
    }
    let (sx, sy) = cfg.ratios();
    let q = Vec2::new((w.x - cfg.x_min_g) / sx, (w.y - cfg.y_min_g) / sy);
    Ok(q.rotate(-cfg.theta) + cfg.corners.lower_left)
}

pub fn transform_path(path: &PixelPath, cfg: &TransformConfig) -> Result<WorldPath> {
    path.0
        .iter()
        .map(|&p| transform_point(p, cfg))
        .collect::<Result<Vec<_>>>()
        .map(WorldPath)
}
