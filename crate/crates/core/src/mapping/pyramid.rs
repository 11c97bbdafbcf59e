use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lidar::RawScan;

use super::grid::{OccupancyGrid, PoseEstimate};

/// Stack of grids, finest first; every level doubles the cell size of the
/// one below it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPyramid {
    pub levels: Vec<OccupancyGrid>,
}

impl MapPyramid {
    pub fn finest(&self) -> &OccupancyGrid {
        &self.levels[0]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

pub fn build_pyramid(grid: &OccupancyGrid, n_levels: usize) -> Result<MapPyramid> {
    if n_levels == 0 {
        return Err(Error::config("n_levels", "must be at least 1"));
    }
    let min_dim = grid.width.min(grid.height);
    if (n_levels - 1) as u32 > min_dim.ilog2() {
        return Err(Error::TooManyLevels {
            levels: n_levels,
            min_dim,
        });
    }
    let mut levels = vec![grid.clone()];
    for _ in 1..n_levels {
        let fine = levels.last().expect("non-empty");
        levels.push(downsample_max(fine));
    }
    Ok(MapPyramid { levels })
}

/// 2x2 max pooling: a coarse cell is as occupied as its most occupied child.
fn downsample_max(fine: &OccupancyGrid) -> OccupancyGrid {
    let w = fine.width.div_ceil(2);
    let h = fine.height.div_ceil(2);
    let origin = fine.origin + Vec2::new(0.5, 0.5) * fine.resolution;
    let mut coarse = OccupancyGrid {
        resolution: fine.resolution * 2.0,
        origin,
        width: w,
        height: h,
        cells: vec![fine.params.min; w * h],
        params: fine.params,
    };
    for iy in 0..fine.height {
        for ix in 0..fine.width {
            let c = coarse.index(ix / 2, iy / 2);
            coarse.cells[c] = coarse.cells[c].max(fine.get(ix, iy));
        }
    }
    coarse
}

/// Half-widths of the pose search around the initial estimate, and the step
/// used on the finest level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub half_xy: f64,
    pub half_theta: f64,
    pub xy_step: f64,
    pub theta_step: f64,
}

impl SearchWindow {
    pub fn for_resolution(resolution: f64) -> Self {
        Self {
            half_xy: 0.5,
            half_theta: 10f64.to_radians(),
            xy_step: resolution * 0.25,
            theta_step: 0.25f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub pose: PoseEstimate,
    pub score: f64,
    /// Set when the scan had no returns and the initial pose was kept.
    pub degenerate: bool,
}

/// Occupancy probability at a world point, bilinearly interpolated between
/// the four surrounding cell centers. Cells off the grid count as empty.
pub fn interpolated_probability(grid: &OccupancyGrid, p: Vec2) -> f64 {
    let q = grid.world_to_pixel(p);
    let (x0, y0) = (q.x.floor(), q.y.floor());
    let (fx, fy) = (q.x - x0, q.y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let at = |ix: i64, iy: i64| {
        if grid.in_bounds(ix, iy) {
            OccupancyGrid::probability(grid.get(ix as usize, iy as usize))
        } else {
            0.0
        }
    };
    (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x0 + 1, y0))
        + fy * ((1.0 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1))
}

/// Sum of interpolated occupancy probabilities under the beam endpoints.
pub fn scan_score(grid: &OccupancyGrid, scan: &RawScan, x: f64, y: f64, theta: f64) -> f64 {
    let origin = Vec2::new(x, y);
    scan.ranges
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < scan.max_range)
        .map(|(deg, &r)| {
            let end = origin + Vec2::from_angle(theta + (deg as f64).to_radians()) * r;
            interpolated_probability(grid, end)
        })
        .sum()
}

/// Offsets `-half..=half` in steps of `step`, clamped to `limit`.
fn offsets(center: f64, half: f64, step: f64, limit: f64) -> Vec<f64> {
    let n = (half / step).round() as i64;
    let mut v: Vec<f64> = (-n..=n)
        .map(|k| (center + k as f64 * step).clamp(-limit, limit))
        .collect();
    v.dedup();
    v
}

/// Coarse-to-fine exhaustive search. The coarsest level scans the whole
/// window; each finer level searches one coarse step around the incumbent
/// with half the step. Ties go to the smallest perturbation, then to the
/// lexicographically smallest `(dx, dy, dtheta)`.
pub fn match_scan(
    pyramid: &MapPyramid,
    scan: &RawScan,
    init: PoseEstimate,
    window: &SearchWindow,
) -> Result<MatchResult> {
    if pyramid.is_empty() {
        return Err(Error::config("pyramid", "must have at least one level"));
    }
    if scan.is_degenerate() {
        return Ok(MatchResult {
            pose: init,
            score: 0.0,
            degenerate: true,
        });
    }
    let top = pyramid.len() - 1;
    let mut best = (0.0, 0.0, 0.0);
    let mut best_score = f64::NEG_INFINITY;
    for level in (0..=top).rev() {
        let grid = &pyramid.levels[level];
        let scale = (1u64 << level) as f64;
        let step_xy = window.xy_step * scale;
        let step_th = window.theta_step * scale;
        let (half_xy, half_th) = if level == top {
            (window.half_xy, window.half_theta)
        } else {
            (step_xy * 2.0, step_th * 2.0)
        };
        let center = best;
        best_score = f64::NEG_INFINITY;
        for &dx in &offsets(center.0, half_xy, step_xy, window.half_xy) {
            for &dy in &offsets(center.1, half_xy, step_xy, window.half_xy) {
                for &dt in &offsets(center.2, half_th, step_th, window.half_theta) {
                    let s = scan_score(grid, scan, init.x + dx, init.y + dy, init.theta + dt);
                    if s > best_score || (s == best_score && tie_key((dx, dy, dt)) < tie_key(best)) {
                        best_score = s;
                        best = (dx, dy, dt);
                    }
                }
            }
        }
    }
    Ok(MatchResult {
        pose: PoseEstimate::new(init.x + best.0, init.y + best.1, init.theta + best.2),
        score: best_score,
        degenerate: false,
    })
}

fn tie_key(o: (f64, f64, f64)) -> (f64, f64, f64, f64) {
    (o.0 * o.0 + o.1 * o.1 + o.2 * o.2, o.0, o.1, o.2)
}
