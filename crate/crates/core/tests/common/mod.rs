//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing in this file calls the code it is used to
//! check; `checks` runs the two side by side.

#![allow(dead_code)]

pub mod checks;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relax_nav::geom::Vec2;
use relax_nav::mapping::{CellClass, OccupancyGrid};
use relax_nav::nn::{Activation, DuelingNet};
use relax_nav::world::Position3;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// LiDAR jump filter, transcribed statement by statement.

/// The detection loop as printed, with its state held in plain vectors.
/// `lidar_data_t` is the pooled reading of the previous accepted pass and
/// is empty before the first reading of an episode.
pub struct ReferenceFilter {
    pub det_range: f64,
    pub vl_thr: f64,
    pub r_thr: f64,
    pub p_thr: f64,
    pub lidar_data_t: Vec<f64>,
    pub index_list: Vec<i64>,
    pub detect_flag: bool,
    pub state: Vec<f64>,
}

impl ReferenceFilter {
    pub fn new(det_range: f64, vl_thr: f64, r_thr: f64, p_thr: f64) -> Self {
        Self {
            det_range,
            vl_thr,
            r_thr,
            p_thr,
            lidar_data_t: Vec::new(),
            index_list: vec![0, 0, 0, 0, 0, 0, 0, 0],
            detect_flag: true,
            state: Vec::new(),
        }
    }

    /// Set after each executed action.
    pub fn arm(&mut self) {
        self.detect_flag = true;
    }

    /// One pass of the loop body; returns `state` afterwards (or
    /// `det_range` everywhere while nothing has been read yet).
    pub fn pass(&mut self, lidar_data_in: &[f64], v_l: f64, roll: f64, pitch: f64) -> Vec<f64> {
        if v_l.abs() <= self.vl_thr && roll.abs() <= self.r_thr && pitch.abs() <= self.p_thr && self.detect_flag {
            let mut lidar_data = lidar_data_in.to_vec();
            if self.lidar_data_t.is_empty() {
                self.state = lidar_data.clone();
            } else {
                for i in 0..lidar_data.len() {
                    if self.lidar_data_t[i] - lidar_data[i] >= 1.5 {
                        self.index_list[i] += 1;
                        let d_r = (0.5 * self.det_range).round();
                        if self.index_list[i] as f64 >= d_r {
                            lidar_data[i] = self.det_range - d_r + 1.0;
                            self.index_list[i] -= (self.det_range - d_r - 1.0) as i64;
                        } else {
                            lidar_data[i] = self.lidar_data_t[i] - 1.0;
                        }
                    } else if self.index_list[i] > 0 {
                        self.index_list[i] -= 1;
                    }
                }
                self.state = lidar_data.clone();
            }
            self.lidar_data_t = lidar_data_in.to_vec();
            self.detect_flag = false;
        }
        if self.state.is_empty() {
            vec![self.det_range; 8]
        } else {
            self.state.clone()
        }
    }
}

// ---------------------------------------------------------------------------
// Gradients.

/// Loss `sum_a w_a Q_a` from a forward pass written independently of the
/// crate, plus the sign of every ReLU pre-activation.
fn reference_loss(net: &DuelingNet, state: &[f64], w: &[f64]) -> (f64, Vec<bool>) {
    let mut signs = Vec::new();
    let mut run = |layers: &[relax_nav::nn::DenseLayer], mut x: Vec<f64>| {
        for l in layers {
            x = (0..l.out_dim)
                .map(|o| {
                    let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
                    let z = row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + l.bias[o];
                    match l.activation {
                        Activation::Relu => {
                            signs.push(z > 0.0);
                            z.max(0.0)
                        }
                        Activation::Identity => z,
                    }
                })
                .collect();
        }
        x
    };
    let x: Vec<f64> = state.iter().zip(&net.input_scale).map(|(s, k)| s * k).collect();
    let h = run(&net.trunk, x);
    let v = run(&net.value_head, h.clone())[0];
    let a = run(&net.advantage_head, h);
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let loss = a.iter().zip(w).map(|(ai, wi)| wi * net.output_scale * (v + ai - mean)).sum();
    (loss, signs)
}

/// Largest relative error between the analytic gradient of `sum_a w_a Q_a`
/// and central differences.
///
/// With every ReLU on the same side the loss is affine in any one
/// parameter, so the central difference is exact up to round-off and a wide
/// step keeps round-off small. Each parameter starts at `h = 1e-3` and the
/// step shrinks tenfold whenever a perturbation flips a ReLU.
pub fn fd_max_relative_error(net: &DuelingNet, state: &[f64], w: &[f64]) -> f64 {
    let mut tape = relax_nav::nn::Tape::default();
    net.forward_recorded(state, &mut tape).unwrap();
    let analytic = net.backward(&mut tape, &[w.to_vec()]).unwrap().0;
    let (_, base_signs) = reference_loss(net, state, w);
    let base = net.params();
    let mut probe = net.clone();
    let mut p = base.clone();
    let mut eval = |j: usize, v: f64| {
        p[j] = v;
        probe.set_params(&p).unwrap();
        p[j] = base[j];
        reference_loss(&probe, state, w)
    };
    let numeric: Vec<f64> = (0..base.len())
        .map(|j| {
            let mut h = 1e-3;
            loop {
                let (up, su) = eval(j, base[j] + h);
                let (down, sd) = eval(j, base[j] - h);
                if (su == base_signs && sd == base_signs) || h < 1e-9 {
                    break (up - down) / (2.0 * h);
                }
                h /= 10.0;
            }
        })
        .collect();
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, f)| {
            let d = a.abs().max(f.abs());
            if d == 0.0 {
                0.0
            } else {
                (a - f).abs() / d
            }
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Reward and termination.

pub struct RewardCase {
    pub d: f64,
    pub d_last: f64,
    pub counter: u32,
    pub collision: bool,
}

/// Case term by precedence: target, collision, step limit, moving away.
pub fn reward_oracle(c: &RewardCase, target_radius: f64, n_step: u32) -> f64 {
    let mut r = 0.0;
    let mut decided = false;
    for (cond, value) in [
        (c.d <= target_radius, 3000.0),
        (c.collision, -2000.0),
        (c.counter >= n_step, -1000.0),
        (c.d > c.d_last, -50.0),
    ] {
        if cond && !decided {
            r = value;
            decided = true;
        }
    }
    r - c.d.powi(2) / 100.0
}

/// Name of the first raised flag in precedence order.
pub fn done_oracle(target: bool, collision: bool, bounds: bool, timeout: bool) -> &'static str {
    [(target, "target"), (collision, "collision"), (bounds, "out_of_bounds"), (timeout, "step_limit")]
        .into_iter()
        .find(|(f, _)| *f)
        .map_or("none", |(_, n)| n)
}

// ---------------------------------------------------------------------------
// Planning.

/// Samples the segment every `1/density` pixels and checks the cell under
/// each sample (cells are unit squares centered on integer pixels).
pub fn segment_clear_sampled(grid: &OccupancyGrid, a: Vec2, b: Vec2, density: f64) -> bool {
    let n = ((a.distance(b) * density).ceil() as usize).max(1);
    (0..=n).all(|k| {
        let t = k as f64 / n as f64;
        let p = a + (b - a) * t;
        let (ix, iy) = (p.x.round() as i64, p.y.round() as i64);
        grid.in_bounds(ix, iy) && grid.class(ix as usize, iy as usize) == CellClass::Free
    })
}

/// A random grid of free cells with rectangular blocks, plus a start and a
/// goal that a 4-connected flood fill joins.
pub struct SolvableGrid {
    pub grid: OccupancyGrid,
    pub start: Vec2,
    pub goal: Vec2,
}

pub fn solvable_grid(seed: u64) -> SolvableGrid {
    let mut r = rng(seed);
    loop {
        let (w, h) = (r.gen_range(40..90), r.gen_range(40..90));
        let mut grid = OccupancyGrid::new(0.1, Vec2::ZERO, w, h).unwrap();
        let free = grid.params.min;
        let occ = grid.params.max;
        grid.cells.iter_mut().for_each(|c| *c = free);
        for _ in 0..r.gen_range(3..12) {
            let (x0, y0) = (r.gen_range(0..w), r.gen_range(0..h));
            let (bw, bh) = (r.gen_range(1..w / 3), r.gen_range(1..h / 3));
            for y in y0..(y0 + bh).min(h) {
                for x in x0..(x0 + bw).min(w) {
                    grid.set(x, y, occ);
                }
            }
        }
        let pick = |r: &mut ChaCha8Rng| (r.gen_range(0..w), r.gen_range(0..h));
        let (s, g) = (pick(&mut r), pick(&mut r));
        let is_free = |c: (usize, usize)| grid.class(c.0, c.1) == CellClass::Free;
        if !is_free(s) || !is_free(g) || s == g || !flood_connected(&grid, s, g) {
            continue;
        }
        return SolvableGrid {
            start: Vec2::new(s.0 as f64, s.1 as f64),
            goal: Vec2::new(g.0 as f64, g.1 as f64),
            grid,
        };
    }
}

fn flood_connected(grid: &OccupancyGrid, s: (usize, usize), g: (usize, usize)) -> bool {
    let mut seen = vec![false; grid.width * grid.height];
    let mut queue = VecDeque::from([s]);
    seen[grid.index(s.0, s.1)] = true;
    while let Some((x, y)) = queue.pop_front() {
        if (x, y) == g {
            return true;
        }
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if !grid.in_bounds(nx, ny) {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let k = grid.index(nx, ny);
            if !seen[k] && grid.class(nx, ny) == CellClass::Free {
                seen[k] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Mapping.

/// Fraction of cells in the room (walls included) whose class matches the
/// geometry: a cell whose square touches a wall line is occupied, every
/// other cell inside is free. Unknown counts as wrong.
pub fn room_accuracy(grid: &OccupancyGrid, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let half = grid.resolution / 2.0;
    let (mut right, mut total) = (0usize, 0usize);
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            let c = grid.pixel_to_world(Vec2::new(ix as f64, iy as f64));
            if c.x < x0 - half || c.x > x1 + half || c.y < y0 - half || c.y > y1 + half {
                continue;
            }
            let on_wall = (c.x - x0).abs() <= half
                || (c.x - x1).abs() <= half
                || (c.y - y0).abs() <= half
                || (c.y - y1).abs() <= half;
            let truth = if on_wall { CellClass::Occupied } else { CellClass::Free };
            total += 1;
            if grid.class(ix, iy) == truth {
                right += 1;
            }
        }
    }
    right as f64 / total as f64
}

// ---------------------------------------------------------------------------
// Statistics.

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

// ---------------------------------------------------------------------------
// Reset.

/// Plays back a fixed stream of reported positions, one per tick, holding
/// the last one, and records every commanded move.
pub struct ScriptedDriver {
    pub stream: Vec<Position3>,
    pub at: usize,
    pub moves: Vec<Position3>,
    pub tick_seconds: f64,
}

impl ScriptedDriver {
    pub fn new(stream: Vec<Position3>) -> Self {
        Self {
            stream,
            at: 0,
            moves: Vec::new(),
            tick_seconds: 0.5,
        }
    }
}

impl relax_nav::agent::ResetDriver for ScriptedDriver {
    fn reported(&self) -> Position3 {
        self.stream[self.at.min(self.stream.len() - 1)]
    }
    fn home(&self) -> Position3 {
        Position3::new(0.0, 0.0, 4.4)
    }
    fn command_move(&mut self, target: Position3) {
        self.moves.push(target);
    }
    fn tick(&mut self) {
        self.at += 1;
    }
    fn elapsed(&self) -> f64 {
        self.at as f64 * self.tick_seconds
    }
}

/// Reported positions stepping from `(x, y)` toward the origin by one
/// meter per axis per tick.
pub fn lagging_stream(x: f64, y: f64) -> Vec<Position3> {
    let mut p = (x, y);
    let mut out = vec![Position3::new(p.0, p.1, 4.4)];
    let toward = |v: f64| if v.abs() <= 1.0 { 0.0 } else { v - v.signum() };
    while p != (0.0, 0.0) {
        p = (toward(p.0), toward(p.1));
        out.push(Position3::new(p.0, p.1, 4.4));
    }
    out
}
