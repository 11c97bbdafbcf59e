use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mapping::{CellClass, OccupancyGrid};

/// How cells that were never observed are treated by the collision check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    #[default]
    Occupied,
    Free,
}

impl UnknownPolicy {
    fn passable(self, c: CellClass) -> bool {
        match c {
            CellClass::Free => true,
            CellClass::Unknown => self == UnknownPolicy::Free,
            CellClass::Occupied => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtConfig {
    pub num_iterations: usize,
    /// Pixels.
    pub step_size: f64,
    /// Pixels.
    pub test_range: f64,
    pub rng_seed: u64,
    pub goal_bias: f64,
    pub unknown: UnknownPolicy,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            num_iterations: 5000,
            step_size: 10.0,
            test_range: 10.0,
            rng_seed: 0,
            goal_bias: 0.05,
            unknown: UnknownPolicy::Occupied,
        }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_iterations == 0 {
            return Err(Error::config("num_iterations", "must be positive"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::config("step_size", "must be positive"));
        }
        if !(self.test_range > 0.0) {
            return Err(Error::config("test_range", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::config("goal_bias", "must be within [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub position: Vec2,
    pub parent: Option<usize>,
}

/// Exploration tree rooted at node 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RrtTree {
    pub nodes: Vec<TreeNode>,
    #[serde(skip)]
    nearest: Option<(usize, f64)>,
}

impl RrtTree {
    fn new(root: Vec2) -> Self {
        Self {
            nodes: vec![TreeNode {
                position: root,
                parent: None,
            }],
            nearest: None,
        }
    }

    fn reset_nearest_values(&mut self) {
        self.nearest = None;
    }

    /// Nearest node to `p`; the lowest index wins ties.
    fn find_nearest(&mut self, p: Vec2) -> usize {
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.position.distance(p);
            if self.nearest.map_or(true, |(_, best)| d < best) {
                self.nearest = Some((i, d));
            }
        }
        self.nearest.expect("tree has a root").0
    }

    fn add(&mut self, position: Vec2, parent: usize) -> usize {
        self.nodes.push(TreeNode {
            position,
            parent: Some(parent),
        });
        self.nodes.len() - 1
    }

    /// Walk parents from `leaf` to the root and return root-first.
    pub fn retrace(&self, leaf: usize) -> Vec<Vec2> {
        let mut out = Vec::new();
        let mut cur = Some(leaf);
        while let Some(i) = cur {
            out.push(self.nodes[i].position);
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    /// Edge list for plotting: `[[x0, y0], [x1, y1]]` per child.
    pub fn edges(&self) -> Vec<[[f64; 2]; 2]> {
        self.nodes
            .iter()
            .filter_map(|n| {
                n.parent.map(|p| {
                    let a = self.nodes[p].position;
                    [[a.x, a.y], [n.position.x, n.position.y]]
                })
            })
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let dump = serde_json::json!({ "nodes": self.nodes.len(), "edges": self.edges() });
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(serde_json::to_string(&dump)?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelPath(pub Vec<Vec2>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldPath(pub Vec<Vec2>);

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub tree: RrtTree,
    /// `None` when the iteration budget ran out.
    pub path: Option<PixelPath>,
    pub iterations: usize,
}

/// True iff every cell touched by the segment `a`-`b` is passable. Cells are
/// unit squares centered on integer pixel coordinates; cells outside the
/// grid are blocked. The traversal visits every cell the segment enters,
/// including both neighbours when it passes exactly through a cell corner.
pub fn segment_free(grid: &OccupancyGrid, a: Vec2, b: Vec2, unknown: UnknownPolicy) -> bool {
    segment_cells(a, b)
        .into_iter()
        .all(|(ix, iy)| grid.in_bounds(ix, iy) && unknown.passable(grid.class(ix as usize, iy as usize)))
}

/// Cells crossed by the segment, by grid traversal in the frame where cell
/// `(i, j)` is `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`.
pub fn segment_cells(a: Vec2, b: Vec2) -> Vec<(i64, i64)> {
    let (ax, ay) = (a.x + 0.5, a.y + 0.5);
    let (bx, by) = (b.x + 0.5, b.y + 0.5);
    let mut ix = ax.floor() as i64;
    let mut iy = ay.floor() as i64;
    let end = (bx.floor() as i64, by.floor() as i64);
    let (dx, dy) = (bx - ax, by - ay);
    let step_x = if dx > 0.0 { 1 } else { -1 };
    let step_y = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((ix + 1) as f64 - ax) / dx
    } else if dx < 0.0 {
        (ix as f64 - ax) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((iy + 1) as f64 - ay) / dy
    } else if dy < 0.0 {
        (iy as f64 - ay) / dy
    } else {
        f64::INFINITY
    };
    let mut out = vec![(ix, iy)];
    let budget = (end.0 - ix).abs() + (end.1 - iy).abs() + 2;
    for _ in 0..budget {
        if (ix, iy) == end {
            break;
        }
        if t_max_x < t_max_y {
            if t_max_x > 1.0 {
                break;
            }
            ix += step_x;
            t_max_x += t_delta_x;
        } else if t_max_y < t_max_x {
            if t_max_y > 1.0 {
                break;
            }
            iy += step_y;
            t_max_y += t_delta_y;
        } else {
            if t_max_x > 1.0 {
                break;
            }
            // exact corner: both side neighbours are touched
            out.push((ix + step_x, iy));
            out.push((ix, iy + step_y));
            ix += step_x;
            iy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        out.push((ix, iy));
    }
    out
}

/// Rapidly-exploring random tree on the occupancy grid. Samples are free
/// cell centers (the goal itself with probability `goal_bias`); the nearest
/// node is steered at most `step_size` toward the sample and the new node
/// is kept only if the connecting segment is free. The search stops as
/// soon as a new node lies within `test_range` of the target with a free
/// line of sight to it, and the target is appended as the final node.
pub fn plan_rrt(grid: &OccupancyGrid, start: Vec2, target: Vec2, cfg: &RrtConfig) -> Result<PlanResult> {
    cfg.validate()?;
    let passable = |p: Vec2| cfg.unknown.passable(grid.class_at_pixel(p));
    if !passable(start) {
        return Err(Error::BlockedEndpoint {
            which: "start",
            x: start.x,
            y: start.y,
        });
    }
    if !passable(target) {
        return Err(Error::BlockedEndpoint {
            which: "target",
            x: target.x,
            y: target.y,
        });
    }
    let free_cells: Vec<Vec2> = (0..grid.height)
        .flat_map(|iy| (0..grid.width).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| cfg.unknown.passable(grid.class(ix, iy)))
        .map(|(ix, iy)| Vec2::new(ix as f64, iy as f64))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut tree = RrtTree::new(start);
    for i in 0..cfg.num_iterations {
        tree.reset_nearest_values();
        let sample = if rng.gen_bool(cfg.goal_bias) {
            target
        } else {
            free_cells[rng.gen_range(0..free_cells.len())]
        };
        let nearest = tree.find_nearest(sample);
        let from = tree.nodes[nearest].position;
        let d = from.distance(sample);
        if d == 0.0 {
            continue;
        }
        let new = if d <= cfg.step_size {
            sample
        } else {
            from + (sample - from) * (cfg.step_size / d)
        };
        if !segment_free(grid, from, new, cfg.unknown) {
            continue;
        }
        let id = tree.add(new, nearest);
        if new.distance(target) <= cfg.test_range && segment_free(grid, new, target, cfg.unknown) {
            let leaf = if new == target { id } else { tree.add(target, id) };
            let path = PixelPath(tree.retrace(leaf));
            return Ok(PlanResult {
                tree,
                path: Some(path),
                iterations: i + 1,
            });
        }
    }
    Ok(PlanResult {
        tree,
        path: None,
        iterations: cfg.num_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_grid(w: usize, h: usize) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(0.1, Vec2::ZERO, w, h).unwrap();
        g.cells.iter_mut().for_each(|c| *c = -4.0);
        g
    }

    #[test]
    fn empty_grid_path() {
        let g = free_grid(40, 40);
        let cfg = RrtConfig {
            step_size: 5.0,
            test_range: 5.0,
            rng_seed: 3,
            ..Default::default()
        };
        let r = plan_rrt(&g, Vec2::new(10.0, 10.0), Vec2::new(20.0, 10.0), &cfg).unwrap();
        let path = r.path.unwrap().0;
        assert_eq!(path[0], Vec2::new(10.0, 10.0));
        assert_eq!(*path.last().unwrap(), Vec2::new(20.0, 10.0));
        for w in path.windows(2) {
            assert!(w[0].distance(w[1]) <= 5.0 + 1e-9);
            assert!(segment_free(&g, w[0], w[1], UnknownPolicy::Occupied));
        }
    }

    #[test]
    fn target_next_to_start() {
        let g = free_grid(40, 40);
        let cfg = RrtConfig {
            step_size: 2.0,
            test_range: 5.0,
            rng_seed: 11,
            ..Default::default()
        };
        let r = plan_rrt(&g, Vec2::new(10.0, 10.0), Vec2::new(12.0, 10.0), &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        let path = r.path.unwrap();
        assert!(path.0.len() >= 2);
    }

    #[test]
    fn occupied_start_is_an_error() {
        let mut g = free_grid(20, 20);
        g.set(5, 5, 4.0);
        let cfg = RrtConfig::default();
        assert!(matches!(
            plan_rrt(&g, Vec2::new(5.0, 5.0), Vec2::new(15.0, 15.0), &cfg),
            Err(Error::BlockedEndpoint { which: "start", .. })
        ));
        assert!(matches!(
            plan_rrt(&g, Vec2::new(15.0, 15.0), Vec2::new(5.0, 5.0), &cfg),
            Err(Error::BlockedEndpoint { which: "target", .. })
        ));
    }

    #[test]
    fn walled_off_target_exhausts_budget() {
        let mut g = free_grid(30, 30);
        for k in 18..=26 {
            for (x, y) in [(k, 18), (k, 26), (18, k), (26, k)] {
                g.set(x, y, 4.0);
            }
        }
        let cfg = RrtConfig {
            num_iterations: 300,
            step_size: 3.0,
            test_range: 3.0,
            ..Default::default()
        };
        let r = plan_rrt(&g, Vec2::new(3.0, 3.0), Vec2::new(22.0, 22.0), &cfg).unwrap();
        assert!(r.path.is_none());
        assert_eq!(r.iterations, 300);
        assert!(r.tree.nodes.len() > 1);
    }

    #[test]
    fn segment_cases() {
        let mut g = free_grid(20, 20);
        let a = Vec2::new(4.0, 4.0);
        assert!(segment_free(&g, a, a, UnknownPolicy::Occupied));
        for y in 0..20 {
            g.set(10, y, 4.0);
        }
        assert!(!segment_free(&g, Vec2::new(2.0, 3.0), Vec2::new(17.0, 12.0), UnknownPolicy::Occupied));
        assert!(segment_free(&g, Vec2::new(2.0, 3.0), Vec2::new(9.0, 12.0), UnknownPolicy::Occupied));
        g.set(5, 15, 0.0);
        let (p, q) = (Vec2::new(2.0, 15.0), Vec2::new(8.0, 15.0));
        assert!(!segment_free(&g, p, q, UnknownPolicy::Occupied));
        assert!(segment_free(&g, p, q, UnknownPolicy::Free));
    }

    #[test]
    fn corner_crossing_touches_both_neighbours() {
        let cells = segment_cells(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0));
        assert!(cells.contains(&(1, 0)) && cells.contains(&(0, 1)));
        assert_eq!(*cells.last().unwrap(), (2, 2));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = free_grid(50, 50);
        let cfg = RrtConfig {
            rng_seed: 99,
            step_size: 4.0,
            test_range: 4.0,
            ..Default::default()
        };
        let a = plan_rrt(&g, Vec2::new(2.0, 2.0), Vec2::new(45.0, 40.0), &cfg).unwrap();
        let b = plan_rrt(&g, Vec2::new(2.0, 2.0), Vec2::new(45.0, 40.0), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
