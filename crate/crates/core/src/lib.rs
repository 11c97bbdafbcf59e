//! Navigation stack for a UAV carrying a single 2D LiDAR: occupancy map
//! construction, RRT mission planning with map-to-world waypoint
//! transformation, and a dueling double DQN obstacle handler, all running
//! inside a deterministic 2D simulator.

pub mod agent;
pub mod error;
pub mod geom;
pub mod harness;
pub mod lidar;
pub mod mapping;
pub mod nn;
pub mod planner;
pub mod seed;
pub mod world;

pub use error::{Error, Result};
