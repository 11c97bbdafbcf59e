//! Path planning on the occupancy grid and conversion of pixel waypoints
//! to world coordinates.

mod rrt;
mod transform;

pub use rrt::{
    plan_rrt, segment_cells, segment_free, PixelPath, PlanResult, RrtConfig, RrtTree, TreeNode, UnknownPolicy,
    WorldPath,
};
pub use transform::{inverse_transform_point, transform_path, transform_point, TransformConfig, TransformMode};

use std::path::Path;

use crate::error::{Error, Result};

/// Write `index,px_x,px_y,world_x,world_y` rows.
pub fn write_path_csv(path: &Path, pixels: &PixelPath, world: &WorldPath) -> Result<()> {
    if pixels.0.len() != world.0.len() {
        return Err(Error::DimensionMismatch {
            expected: pixels.0.len(),
            got: world.0.len(),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(Error::Csv)?;
    w.write_record(["index", "px_x", "px_y", "world_x", "world_y"])?;
    for (i, (p, q)) in pixels.0.iter().zip(&world.0).enumerate() {
        w.write_record(&[
            i.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            q.x.to_string(),
            q.y.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
