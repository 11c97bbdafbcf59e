//! Occupancy map construction from LiDAR scans.

mod geometry;
mod grid;
mod pgm;
mod pyramid;

pub use geometry::{estimate_rotation, extract_corners, DetectedLine, MapCorners, RotationEstimate, MIN_LINE_SUPPORT};
pub use grid::{bresenham, CellClass, LogOddsParams, OccupancyGrid, PoseEstimate};
pub use pgm::{decode_pgm, encode_pgm, load_map, save_map, MapSidecar, PGM_FREE, PGM_OCCUPIED, PGM_UNKNOWN};
pub use pyramid::{build_pyramid, interpolated_probability, match_scan, scan_score, MapPyramid, MatchResult, SearchWindow};

use crate::error::Result;
use crate::lidar::{Lidar, NoiseModel};
use crate::world::WorldConfig;

/// Default rotation weights: an even split over the three longest lines.
pub const EQUAL_WEIGHTS: [f64; 3] = [1.0 / 3.0; 3];

#[derive(Debug, Clone)]
pub struct SurveyOptions {
    pub resolution: f64,
    /// Extra border around the world bounds, in meters.
    pub margin: f64,
    pub lidar: Lidar,
    /// Refine each pose after the first by scan matching against the map
    /// built so far.
    pub match_poses: bool,
    pub pyramid_levels: usize,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            margin: 1.0,
            lidar: Lidar::default(),
            match_poses: false,
            pyramid_levels: 3,
        }
    }
}

/// Result of surveying a world from a list of poses.
#[derive(Debug, Clone)]
pub struct Survey {
    pub grid: OccupancyGrid,
    /// Pose used for integrating each scan.
    pub poses: Vec<PoseEstimate>,
}

/// Scan the world from each pose (noise-free) and integrate the scans.
pub fn survey(world: &WorldConfig, poses: &[PoseEstimate], opts: &SurveyOptions) -> Result<Survey> {
    let m = opts.margin;
    let mut grid = OccupancyGrid::covering(
        world.x_min - m,
        world.x_max + m,
        world.y_min - m,
        world.y_max + m,
        opts.resolution,
    )?;
    let mut used = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let scan = opts
            .lidar
            .cast_from(world, pose.position(), pose.theta, &NoiseModel::Off, 0)?;
        let pose = if opts.match_poses && k > 0 {
            let pyramid = build_pyramid(&grid, opts.pyramid_levels)?;
            match_scan(&pyramid, &scan, *pose, &SearchWindow::for_resolution(opts.resolution))?.pose
        } else {
            *pose
        };
        grid.integrate_scan(&pose, &scan)?;
        used.push(pose);
    }
    Ok(Survey { grid, poses: used })
}

/// Evenly spaced survey poses over the free interior of the world.
pub fn survey_grid(world: &WorldConfig, spacing: f64) -> Vec<PoseEstimate> {
    use crate::world::{nearest_obstacle_distance, DronePose};
    let mut out = Vec::new();
    let mut y = world.y_min + spacing * 0.5;
    while y < world.y_max {
        let mut x = world.x_min + spacing * 0.5;
        while x < world.x_max {
            let p = DronePose::at(x, y, world.altitude);
            if nearest_obstacle_distance(&p, world) > 1.0 {
                out.push(PoseEstimate::new(x, y, 0.0));
            }
            x += spacing;
        }
        y += spacing;
    }
    out
}
