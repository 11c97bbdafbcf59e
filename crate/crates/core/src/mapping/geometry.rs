//! Map geometry used by the point transformer: the bounding quadrilateral of
//! the occupied cells and the residual rotation of the map's walls.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

use super::grid::OccupancyGrid;

/// Corners of the map's bounding box in pixel coordinates. "Upper" is the
/// larger pixel y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCorners {
    pub upper_left: Vec2,
    pub upper_right: Vec2,
    pub lower_right: Vec2,
    pub lower_left: Vec2,
}

impl MapCorners {
    pub fn axis_aligned(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            upper_left: Vec2::new(x0, y1),
            upper_right: Vec2::new(x1, y1),
            lower_right: Vec2::new(x1, y0),
            lower_left: Vec2::new(x0, y0),
        }
    }

    pub fn area(&self) -> f64 {
        let p = [self.upper_left, self.upper_right, self.lower_right, self.lower_left];
        let mut a = 0.0;
        for i in 0..4 {
            a += p[i].cross(p[(i + 1) % 4]);
        }
        (a * 0.5).abs()
    }
}

fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area rectangle around the occupied cell centers (rotating
/// calipers over the convex hull), labelled in the rectangle's own frame
/// with its axis angle folded into (-45, 45] degrees.
pub fn extract_corners(grid: &OccupancyGrid) -> Result<MapCorners> {
    let pts: Vec<Vec2> = grid
        .occupied_pixels()
        .into_iter()
        .map(|(x, y)| Vec2::new(x as f64, y as f64))
        .collect();
    if pts.is_empty() {
        return Err(Error::NoOccupiedCells);
    }
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        return Err(Error::DegenerateBox { area: 0.0 });
    }
    let mut best: Option<(f64, f64)> = None; // (area, angle)
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()] - hull[i];
        let angle = e.y.atan2(e.x);
        let area = bbox_in_frame(&hull, angle).area();
        if best.map_or(true, |(a, _)| area < a - 1e-9) {
            best = Some((area, angle));
        }
    }
    let (area, angle) = best.expect("hull has edges");
    if area <= 1e-9 {
        return Err(Error::DegenerateBox { area });
    }
    let angle = fold_quarter(angle);
    Ok(bbox_in_frame(&hull, angle).to_corners(angle))
}

/// Fold an axis angle into (-pi/4, pi/4].
/// Total least squares normal of a point set, in [0, pi). Falls back to
/// `coarse` when the points carry no direction.
fn refine_normal(points: &[Vec2], coarse: f64) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return coarse;
    }
    let m = points.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - m;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx + syy == 0.0 {
        return coarse;
    }
    let direction = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (direction + FRAC_PI_2).rem_euclid(PI)
}

fn fold_quarter(a: f64) -> f64 {
    let mut a = a - FRAC_PI_2 * (a / FRAC_PI_2).round();
    if a <= -FRAC_PI_4 {
        a += FRAC_PI_2;
    }
    a
}

struct FrameBox {
    lo: Vec2,
    hi: Vec2,
}

impl FrameBox {
    fn area(&self) -> f64 {
        (self.hi.x - self.lo.x) * (self.hi.y - self.lo.y)
    }

    fn to_corners(&self, angle: f64) -> MapCorners {
        let back = |x: f64, y: f64| Vec2::new(x, y).rotate(angle);
        MapCorners {
            upper_left: back(self.lo.x, self.hi.y),
            upper_right: back(self.hi.x, self.hi.y),
            lower_right: back(self.hi.x, self.lo.y),
            lower_left: back(self.lo.x, self.lo.y),
        }
    }
}

fn bbox_in_frame(pts: &[Vec2], angle: f64) -> FrameBox {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        let q = p.rotate(-angle);
        lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    FrameBox { lo, hi }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedLine {
    /// Angle of the line normal, [0, pi).
    pub normal_angle: f64,
    /// Signed distance of the line from pixel (0, 0).
    pub rho: f64,
    pub support: usize,
    /// Deviation of the line from the nearest grid axis, (-pi/4, pi/4].
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub theta: f64,
    pub lines: Vec<DetectedLine>,
    /// Fewer than three lines were found; `theta` is the dominant line's
    /// deviation alone.
    pub fallback: bool,
}

/// Lines need at least this many supporting cells to count as walls.
pub const MIN_LINE_SUPPORT: usize = 8;
const ANGLE_BINS: usize = 720;

/// Weighted residual rotation of the map from its three longest wall lines.
/// Lines are extracted one at a time with a Hough vote over the occupied
/// cells; the supporting cells of each accepted line are removed before the
/// next vote, so a thick wall cannot be reported twice.
pub fn estimate_rotation(grid: &OccupancyGrid, weights: [f64; 3]) -> Result<RotationEstimate> {
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::config("weights", "must be non-negative with a positive sum"));
    }
    let mut pts: Vec<Vec2> = grid
        .occupied_pixels()
        .into_iter()
        .map(|(x, y)| Vec2::new(x as f64, y as f64))
        .collect();
    if pts.is_empty() {
        return Err(Error::NoOccupiedCells);
    }
    let trig: Vec<(f64, f64)> = (0..ANGLE_BINS)
        .map(|k| (k as f64 * PI / ANGLE_BINS as f64).sin_cos())
        .map(|(s, c)| (c, s))
        .collect();
    let rho_max = (grid.width as f64).hypot(grid.height as f64).ceil() as i64 + 1;
    let n_rho = (2 * rho_max + 1) as usize;

    let mut lines = Vec::new();
    while lines.len() < 3 {
        let mut acc = vec![0u32; ANGLE_BINS * n_rho];
        for p in &pts {
            for (k, (c, s)) in trig.iter().enumerate() {
                let r = (p.x * c + p.y * s).round() as i64 + rho_max;
                acc[k * n_rho + r as usize] += 1;
            }
        }
        let (best_i, &votes) = acc
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("accumulator non-empty");
        if (votes as usize) < MIN_LINE_SUPPORT {
            break;
        }
        let k = best_i / n_rho;
        let rho = (best_i % n_rho) as i64 - rho_max;
        let (c, s) = trig[k];
        let (support, rest): (Vec<Vec2>, Vec<Vec2>) =
            pts.iter().partition(|p| (p.x * c + p.y * s - rho as f64).abs() <= 1.5);
        pts = rest;
        // the vote only pins the angle to within a few bins; refit it
        let normal_angle = refine_normal(&support, k as f64 * PI / ANGLE_BINS as f64);
        let (ns, nc) = normal_angle.sin_cos();
        let centroid = support.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / support.len() as f64);
        lines.push(DetectedLine {
            normal_angle,
            rho: centroid.x * nc + centroid.y * ns,
            support: votes as usize,
            deviation: fold_quarter(normal_angle),
        });
    }
    if lines.is_empty() {
        return Err(Error::NoOccupiedCells);
    }
    if lines.len() < 3 {
        return Ok(RotationEstimate {
            theta: lines[0].deviation,
            lines,
            fallback: true,
        });
    }
    let theta = lines
        .iter()
        .zip(weights)
        .map(|(l, w)| l.deviation * w / wsum)
        .sum();
    Ok(RotationEstimate {
        theta,
        lines,
        fallback: false,
    })
}
