//! Drivers that run the crate against the reference implementations. Each
//! returns what it measured so callers can apply their own bounds.

use rand::Rng;
use relax_nav::agent::{
    check_done, compute_reward, done_reason, lagged_reset, reset_sequence, sample_target, EpisodeConfig, NavEnv,
    ReplayBuffer, ResetConfig, ResetExit, SensorNoise, Transition,
};
use relax_nav::geom::Vec2;
use relax_nav::lidar::{AgentState, FilterConfig, FilterState, MotionReading, SectorDistances, N_SECTORS, STATE_DIM};
use relax_nav::mapping::{build_pyramid, match_scan, survey, PoseEstimate, SearchWindow, SurveyOptions};
use relax_nav::nn::{argmax, dueling_combine};
use relax_nav::planner::{
    inverse_transform_point, plan_rrt, transform_point, RrtConfig, TransformConfig, TransformMode,
};
use relax_nav::world::{spawn_scenario, DronePose, Position3, ScenarioTemplate, WorldConfig};

use super::*;

pub type Check<T> = std::result::Result<T, String>;

// ---------------------------------------------------------------------------

/// One random reading sequence through both filters. Readings live on a
/// quarter-meter lattice so jumps of exactly 1.5 occur. Returns the number
/// of passes compared.
pub fn filter_sequence(seed: u64) -> Check<usize> {
    let mut r = rng(seed);
    let det = r.gen_range(2..=12) as f64;
    let cfg = FilterConfig {
        det_range: det,
        ..FilterConfig::default()
    };
    let mut ours = FilterState::new(cfg);
    let mut reference = ReferenceFilter::new(det, cfg.vl_thr, cfg.r_thr, cfg.p_thr);
    let mut level: Vec<f64> = (0..N_SECTORS).map(|_| quarter(r.gen_range(0.0..det))).collect();
    let len = r.gen_range(5..80);
    for step in 0..len {
        if step > 0 && r.gen_bool(0.85) {
            ours.request();
            reference.arm();
        }
        for v in level.iter_mut() {
            let u: f64 = r.gen();
            *v = if u < 0.2 {
                *v - r.gen_range(1.0..5.0)
            } else if u < 0.35 {
                *v + r.gen_range(1.0..5.0)
            } else {
                *v + r.gen_range(-0.5..0.5)
            };
            *v = quarter(v.clamp(0.0, det));
        }
        let motion = if r.gen_bool(0.15) {
            let over = [cfg.vl_thr, cfg.r_thr, cfg.p_thr][r.gen_range(0..3)] + 0.05;
            match r.gen_range(0..3) {
                0 => MotionReading {
                    linear_velocity: over,
                    ..Default::default()
                },
                1 => MotionReading {
                    roll: -over,
                    ..Default::default()
                },
                _ => MotionReading {
                    pitch: over,
                    ..Default::default()
                },
            }
        } else {
            MotionReading {
                linear_velocity: r.gen_range(-cfg.vl_thr..=cfg.vl_thr),
                roll: r.gen_range(-cfg.r_thr..=cfg.r_thr),
                pitch: r.gen_range(-cfg.p_thr..=cfg.p_thr),
            }
        };
        let pooled = SectorDistances(level.clone().try_into().unwrap());
        let got = ours.update(&pooled, &motion);
        let want = reference.pass(&level, motion.linear_velocity, motion.roll, motion.pitch);
        let index: Vec<i64> = ours.index_list.iter().map(|&i| i as i64).collect();
        if got.0.to_vec() != want || index != reference.index_list || ours.detect_flag != reference.detect_flag {
            return Err(format!(
                "seed {seed} step {step}: output {:?} vs {:?}, index {:?} vs {:?}",
                got.0, want, index, reference.index_list
            ));
        }
    }
    Ok(len)
}

fn quarter(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

// ---------------------------------------------------------------------------

/// Finite-difference gradient check of the training network for one seed.
pub fn gradient_error(seed: u64) -> f64 {
    let net = relax_nav::agent::AgentConfig::default().network(seed).unwrap();
    let mut r = rng(seed ^ 0x9e37_79b9);
    let state: Vec<f64> = (0..STATE_DIM)
        .map(|i| if i < 3 { r.gen_range(-15.0..15.0) } else { r.gen_range(0.0..6.0) })
        .collect();
    let w: Vec<f64> = (0..net.n_actions()).map(|_| r.gen_range(-1.0..1.0)).collect();
    fd_max_relative_error(&net, &state, &w)
}

/// Largest change in Q when every advantage is shifted by the same
/// constant, over the combination itself and a network whose advantage
/// output bias is shifted.
pub fn advantage_shift(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = r.gen_range(-5.0..5.0);
        let a: Vec<f64> = (0..8).map(|_| r.gen_range(-5.0..5.0)).collect();
        let c = r.gen_range(-5.0..5.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
        let (q0, q1) = (dueling_combine(v, &a, 1.0), dueling_combine(v, &shifted, 1.0));
        worst = q0.iter().zip(&q1).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    let net = relax_nav::nn::DuelingNet::new(relax_nav::nn::Topology::default(), seed).unwrap();
    let mut moved = net.clone();
    let c = r.gen_range(-1.0..1.0);
    moved.advantage_head.last_mut().unwrap().bias.iter_mut().for_each(|b| *b += c);
    for _ in 0..100 {
        let s: Vec<f64> = (0..STATE_DIM).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (q0, q1) = (net.forward(&s).unwrap(), moved.forward(&s).unwrap());
        worst = q0.iter().zip(&q1).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    worst
}

/// Samples where the greedy action from Q differs from the advantage argmax.
pub fn argmax_disagreements(samples: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    (0..samples)
        .filter(|_| {
            let v = r.gen_range(-100.0..100.0);
            let k = r.gen_range(0.01..1000.0);
            let a: Vec<f64> = (0..8).map(|_| r.gen_range(-10.0..10.0)).collect();
            argmax(&dueling_combine(v, &a, k)) != argmax(&a)
        })
        .count()
}

// ---------------------------------------------------------------------------

/// Every combination of the reward conditions plus random draws. Returns
/// the number of cases compared.
pub fn reward_table() -> Check<usize> {
    let cfg = EpisodeConfig::default();
    let mut cases = Vec::new();
    for bits in 0..16u32 {
        let target = bits & 1 != 0;
        let d = if target { 2.0 } else { 10.0 };
        cases.push(RewardCase {
            d,
            d_last: if bits & 8 != 0 { d - 1.0 } else { d + 1.0 },
            counter: if bits & 4 != 0 { cfg.n_step } else { cfg.n_step - 1 },
            collision: bits & 2 != 0,
        });
    }
    // boundaries: exactly on the target radius, exactly at the step limit,
    // standing still
    cases.push(RewardCase {
        d: cfg.target_radius,
        d_last: 1.0,
        counter: 0,
        collision: true,
    });
    cases.push(RewardCase {
        d: 5.0,
        d_last: 5.0,
        counter: cfg.n_step,
        collision: false,
    });
    cases.push(RewardCase {
        d: 5.0,
        d_last: 5.0,
        counter: 0,
        collision: false,
    });
    let mut r = rng(5);
    for _ in 0..10_000 {
        cases.push(RewardCase {
            d: r.gen_range(0.0..30.0),
            d_last: r.gen_range(0.0..30.0),
            counter: r.gen_range(0..=cfg.n_step + 5),
            collision: r.gen_bool(0.3),
        });
    }
    for c in &cases {
        let got = compute_reward(c.d, c.d_last, c.counter, c.collision, &cfg);
        let want = reward_oracle(c, cfg.target_radius, cfg.n_step);
        if got != want {
            return Err(format!(
                "d {} d_last {} counter {} collision {}: {got} vs {want}",
                c.d, c.d_last, c.counter, c.collision
            ));
        }
    }
    Ok(cases.len())
}

/// The termination flags, both as booleans and as the sensor, pose and
/// counter inputs that raise them.
pub fn done_table() -> Check<usize> {
    let cfg = EpisodeConfig::default();
    for bits in 0..16u32 {
        let [t, c, b, s] = [0, 1, 2, 3].map(|k| bits & (1 << k) != 0);
        let want = done_oracle(t, c, b, s);
        let got = done_reason(t, c, b, s).to_string();
        if got != want {
            return Err(format!("flags {bits:04b}: {got} vs {want}"));
        }
        let mut dists = SectorDistances::uniform(4.0);
        if c {
            dists.0[(bits as usize) % N_SECTORS] = cfg.col_threshold;
        }
        let x = if b { -(cfg.limit_x + 0.5) } else { cfg.limit_x };
        let pose = DronePose::at(x, 0.0, 4.4);
        let d = if t { cfg.target_radius } else { cfg.target_radius + 0.01 };
        let counter = if s { cfg.n_step } else { cfg.n_step - 1 };
        let (done, reason) = check_done(&dists, &pose, d, counter, &cfg);
        if reason.to_string() != want || done != (want != "none") {
            return Err(format!("inputs {bits:04b}: {reason} vs {want}"));
        }
    }
    Ok(32)
}

/// The three hand-derived reward values, compared exactly.
pub fn reward_spot_values() -> Check<[f64; 3]> {
    let cfg = EpisodeConfig::default();
    let got = [
        compute_reward(2.0, 2.5, 3, false, &cfg),
        compute_reward(10.0, 11.0, 3, true, &cfg),
        compute_reward(12.0, 11.0, 3, false, &cfg),
    ];
    if got == [2999.96, -2001.0, -51.44] {
        Ok(got)
    } else {
        Err(format!("{got:?}"))
    }
}

// ---------------------------------------------------------------------------

pub struct RrtOutcome {
    pub found: bool,
    pub hops: usize,
}

/// Plan on one generated grid, verify every hop and re-plan to check the
/// result repeats.
pub fn rrt_case(seed: u64) -> Check<RrtOutcome> {
    let g = solvable_grid(seed);
    let cfg = RrtConfig {
        rng_seed: seed,
        ..RrtConfig::default()
    };
    let first = plan_rrt(&g.grid, g.start, g.goal, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
    let again = plan_rrt(&g.grid, g.start, g.goal, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
    if first != again {
        return Err(format!("seed {seed}: two runs differ"));
    }
    let Some(path) = first.path else {
        return Ok(RrtOutcome { found: false, hops: 0 });
    };
    let p = &path.0;
    if p.first() != Some(&g.start) || p.last() != Some(&g.goal) {
        return Err(format!("seed {seed}: path does not run start to goal"));
    }
    for (k, w) in p.windows(2).enumerate() {
        let last = k + 2 == p.len();
        let bound = if last { cfg.test_range } else { cfg.step_size };
        let len = w[0].distance(w[1]);
        if len > bound + 1e-9 {
            return Err(format!("seed {seed}: hop {k} is {len} > {bound}"));
        }
        if !segment_clear_sampled(&g.grid, w[0], w[1], 200.0) {
            return Err(format!("seed {seed}: hop {k} {:?} -> {:?} crosses a blocked cell", w[0], w[1]));
        }
    }
    Ok(RrtOutcome {
        found: true,
        hops: p.len() - 1,
    })
}

// ---------------------------------------------------------------------------

/// 200 x 100 pixel map onto a 20 m x 20 m world: 0.1 m per pixel along x,
/// 0.2 m per pixel along y.
pub fn hand_transform(theta: f64, mode: TransformMode) -> TransformConfig {
    TransformConfig {
        corners: relax_nav::mapping::MapCorners::axis_aligned(0.0, 0.0, 200.0, 100.0),
        x_min_g: -10.0,
        x_max_g: 10.0,
        y_min_g: -5.0,
        y_max_g: 15.0,
        theta,
        mode,
    }
}

/// Literal-mode outputs against values substituted by hand. Returns the
/// largest error.
pub fn literal_hand_cases() -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};
    let cases = [
        // on the +x axis: r = x_p, so x = 2 * x_p * 0.1
        (0.0, (30.0, 0.0), (6.0, 0.0)),
        // r = 5: x = (5 + 3) * 0.1, y = (0 + 4) * 0.2
        (0.0, (3.0, 4.0), (0.8, 0.8)),
        // rotated to (-4, 3): x = (0 - 4) * 0.1, y = (5 + 3) * 0.2
        (FRAC_PI_2, (3.0, 4.0), (-0.4, 1.6)),
        // rotated to (5 sqrt 3, 5): x = (5 sqrt 3 + 5 sqrt 3) * 0.1, y = (5 + 5) * 0.2
        (FRAC_PI_6, (10.0, 0.0), (3f64.sqrt(), 2.0)),
        // rotated to (0, -7): x = (-7 + 0) * 0.1, y = (0 - 7) * 0.2
        (PI, (0.0, 7.0), (-0.7, -1.4)),
    ];
    cases
        .iter()
        .map(|&(theta, (px, py), (wx, wy))| {
            let got = transform_point(Vec2::new(px, py), &hand_transform(theta, TransformMode::Literal)).unwrap();
            (got.x - wx).abs().max((got.y - wy).abs())
        })
        .fold(0.0, f64::max)
}

/// Worst affine round-trip error over random rotated maps and points.
pub fn affine_round_trip(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (w, h) = (r.gen_range(20.0..800.0), r.gen_range(20.0..800.0));
        let phi: f64 = r.gen_range(-0.5..0.5);
        let o = Vec2::new(r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0));
        let ex = Vec2::from_angle(phi) * w;
        let ey = Vec2::from_angle(phi + std::f64::consts::FRAC_PI_2) * h;
        let corners = relax_nav::mapping::MapCorners {
            lower_left: o,
            lower_right: o + ex,
            upper_right: o + ex + ey,
            upper_left: o + ey,
        };
        let x_min_g = r.gen_range(-40.0..0.0);
        let y_min_g = r.gen_range(-40.0..0.0);
        let cfg = TransformConfig {
            corners,
            x_min_g,
            x_max_g: x_min_g + r.gen_range(5.0..80.0),
            y_min_g,
            y_max_g: y_min_g + r.gen_range(5.0..80.0),
            theta: -phi,
            mode: TransformMode::Affine,
        };
        for _ in 0..20 {
            let p = o + ex * r.gen_range(-0.2..1.2) + ey * r.gen_range(-0.2..1.2);
            let back = inverse_transform_point(transform_point(p, &cfg).unwrap(), &cfg).unwrap();
            worst = worst.max(back.distance(p));
        }
    }
    worst
}

// ---------------------------------------------------------------------------

pub struct RoomResult {
    pub accuracy: f64,
    /// Position and heading error of each perturbed match.
    pub matches: Vec<(f64, f64)>,
}

/// Survey a walled room from ten poses, score the map against the room
/// geometry, then recover perturbed poses by scan matching.
pub fn room(x0: f64, x1: f64, y0: f64, y1: f64) -> RoomResult {
    let world = WorldConfig::empty(x0, x1, y0, y1);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (sx, sy) = ((x1 - x0) * 0.3, (y1 - y0) * 0.22);
    let poses: Vec<PoseEstimate> = (0..10)
        .map(|k| {
            let col = (k % 5) as f64 - 2.0;
            let row = if k < 5 { -1.0 } else { 1.0 };
            PoseEstimate::new(cx + col * sx / 2.0, cy + row * sy, 0.3 * k as f64)
        })
        .collect();
    let opts = SurveyOptions::default();
    let s = survey(&world, &poses, &opts).unwrap();
    let accuracy = room_accuracy(&s.grid, x0, x1, y0, y1);

    let pyramid = build_pyramid(&s.grid, opts.pyramid_levels).unwrap();
    let truth = [
        PoseEstimate::new(cx + 1.3, cy - 0.8, 0.4),
        PoseEstimate::new(cx - 2.1, cy + 0.6, -1.1),
        PoseEstimate::new(cx + 0.2, cy + 1.4, 2.5),
    ];
    let nudges = [(0.3, 0.0, 5.0), (0.0, -0.3, -5.0), (-0.3 / 2f64.sqrt(), 0.3 / 2f64.sqrt(), 5.0)];
    let mut matches = Vec::new();
    for t in &truth {
        let scan = opts
            .lidar
            .cast_from(&world, t.position(), t.theta, &relax_nav::lidar::NoiseModel::Off, 0)
            .unwrap();
        for &(dx, dy, dth) in &nudges {
            let init = PoseEstimate::new(t.x + dx, t.y + dy, t.theta + f64::to_radians(dth));
            let m = match_scan(&pyramid, &scan, init, &SearchWindow::for_resolution(opts.resolution)).unwrap();
            let dth = relax_nav::geom::normalize_angle(m.pose.theta - t.theta).abs().to_degrees();
            matches.push((m.pose.position().distance(t.position()), dth));
        }
    }
    RoomResult { accuracy, matches }
}

// ---------------------------------------------------------------------------

fn transition(tag: f64) -> Transition {
    let s = AgentState([tag; STATE_DIM]);
    Transition::new(s, 0, tag, s, false).unwrap()
}

/// Overfill small buffers and compare their contents with the expected
/// window of most recent pushes.
pub fn fifo_eviction() -> Check<()> {
    for (capacity, pushes) in [(1usize, 4usize), (5, 8), (7, 7), (16, 100)] {
        let mut b = ReplayBuffer::new(capacity, 0).unwrap();
        for k in 0..pushes {
            b.push(transition(k as f64));
        }
        let got: Vec<f64> = b.iter().map(|t| t.reward).collect();
        let want: Vec<f64> = (pushes.saturating_sub(capacity)..pushes).map(|k| k as f64).collect();
        if got != want {
            return Err(format!("capacity {capacity}, {pushes} pushes: {got:?}"));
        }
    }
    Ok(())
}

/// p-value of the slot counts over `draws` samples, taken `batch` at a
/// time from a full buffer of `slots` entries.
pub fn replay_uniformity(slots: usize, draws: usize, batch: usize, seed: u64) -> f64 {
    let mut b = ReplayBuffer::new(slots, seed).unwrap();
    for k in 0..slots + 13 {
        b.push(transition(k as f64));
    }
    let mut counts = vec![0u64; slots];
    for _ in 0..draws / batch {
        for i in b.sample_indices(batch).unwrap() {
            counts[i] += 1;
        }
    }
    chi_square_uniform_p(&counts)
}

// ---------------------------------------------------------------------------

/// The three hand-traced runs of the reset loop.
pub fn reset_traces() -> Check<()> {
    let cfg = ResetConfig::default();
    let home = Position3::new(0.0, 0.0, 4.4);

    // already within a meter of home: leave at once and fly home
    let mut d = ScriptedDriver::new(vec![Position3::new(0.5, 0.3, 4.4)]);
    let rep = reset_sequence(&mut d, &cfg).map_err(|e| e.to_string())?;
    if rep.exit != ResetExit::Arrived || rep.ticks != 0 || d.moves != vec![home] {
        return Err(format!("immediate exit: {rep:?}, moves {:?}", d.moves));
    }

    // from (7, 4): x is past b_thr (7 - 4 = 3), y past a_thr (4 - 2 = 2);
    // staging starts once the stream moves and holds until (1, 0) is
    // within a meter
    let mut d = ScriptedDriver::new(lagging_stream(7.0, 4.0));
    let rep = reset_sequence(&mut d, &cfg).map_err(|e| e.to_string())?;
    let stage = Position3::new(3.0, 2.0, 4.4);
    let mut want = vec![stage; 5];
    want.push(home);
    if rep.exit != ResetExit::Arrived || rep.staging != vec![stage] || d.moves != want || rep.ticks != 6 {
        return Err(format!("staging: {rep:?}, moves {:?}", d.moves));
    }

    // the reported pose never moves: no staging, give up after 60 s
    let mut d = ScriptedDriver::new(vec![Position3::new(9.0, 9.0, 4.4)]);
    let rep = reset_sequence(&mut d, &cfg).map_err(|e| e.to_string())?;
    if rep.exit != ResetExit::HardTimeout || rep.ticks != 121 || rep.elapsed != 60.5 || d.moves != vec![home] {
        return Err(format!("hard timeout: {rep:?}"));
    }
    Ok(())
}

pub struct ResetSweep {
    pub collisions: usize,
    /// Resets where the reported pose actually lagged.
    pub lagged: usize,
}

/// End a random-policy farmland episode, then reset with lag, `n` times.
pub fn seeded_resets(n: u64) -> ResetSweep {
    let cfg = EpisodeConfig::default();
    let mut sweep = ResetSweep { collisions: 0, lagged: 0 };
    for seed in 0..n {
        let world = spawn_scenario(seed, ScenarioTemplate::Farmland);
        assert!(world.reset_lag_enabled);
        let mut r = rng(seed);
        let target = sample_target(&world, &cfg, 8.0, &mut r);
        let mut env = NavEnv::new(world.clone(), cfg.clone(), target, SensorNoise::default(), seed).unwrap();
        while !env.is_done() {
            env.step(r.gen_range(0..8)).unwrap();
        }
        let out = lagged_reset(&world, &env.pose(), &ResetConfig::default()).unwrap();
        sweep.collisions += out.collisions;
        sweep.lagged += usize::from(out.report.ticks > 0);
    }
    sweep
}
