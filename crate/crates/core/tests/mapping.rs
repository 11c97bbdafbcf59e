mod common;

use common::checks::room;
use proptest::prelude::*;
use relax_nav::geom::Vec2;
use relax_nav::lidar::{RawScan, N_BEAMS};
use relax_nav::mapping::{build_pyramid, match_scan, OccupancyGrid, PoseEstimate, SearchWindow};

const RES: f64 = 0.1;

fn check_room(x0: f64, x1: f64, y0: f64, y1: f64) {
    let r = room(x0, x1, y0, y1);
    assert!(r.accuracy >= 0.95, "accuracy {}", r.accuracy);
    for (k, &(dp, dth)) in r.matches.iter().enumerate() {
        assert!(dp <= 0.5 * RES + 1e-9, "match {k}: {dp} m");
        assert!(dth <= 1.0, "match {k}: {dth} deg");
    }
}

#[test]
fn room_on_the_cell_lattice() {
    check_room(-5.0, 5.0, -4.0, 4.0);
}

#[test]
fn room_off_the_cell_lattice() {
    check_room(-4.93, 5.21, -3.87, 4.14);
}

fn random_grid(seed: u64) -> OccupancyGrid {
    let mut r = common::rng(seed);
    let mut g = OccupancyGrid::new(RES, Vec2::new(-6.0, -6.0), 121, 121).unwrap();
    use rand::Rng;
    for c in g.cells.iter_mut() {
        *c = r.gen_range(-4.0..4.0);
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_odds_stay_clamped(
        poses in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -3.2..3.2f64), 1..6),
        range in 0.05..12.0f64,
        jitter in prop::collection::vec(0.0..2.0f64, N_BEAMS),
    ) {
        let mut g = OccupancyGrid::new(RES, Vec2::new(-6.0, -6.0), 121, 121).unwrap();
        for &(x, y, t) in &poses {
            let ranges = jitter.iter().map(|j| (range - j).max(0.01)).collect();
            g.integrate_scan(&PoseEstimate::new(x, y, t), &RawScan { ranges, max_range: 12.0 }).unwrap();
        }
        let p = g.params;
        prop_assert!(g.cells.iter().all(|&c| c >= p.min && c <= p.max));
    }

    #[test]
    fn coarser_levels_keep_occupancy(seed in any::<u64>()) {
        let g = random_grid(seed);
        let pyr = build_pyramid(&g, 4).unwrap();
        for k in 0..pyr.levels.len() - 1 {
            let (fine, coarse) = (&pyr.levels[k], &pyr.levels[k + 1]);
            for iy in 0..fine.height {
                for ix in 0..fine.width {
                    prop_assert!(coarse.get(ix / 2, iy / 2) >= fine.get(ix, iy));
                }
            }
        }
    }

    #[test]
    fn match_stays_in_the_window(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64, t in -3.0..3.0f64) {
        let g = random_grid(seed);
        let pyr = build_pyramid(&g, 3).unwrap();
        let mut r = common::rng(seed);
        use rand::Rng;
        let ranges = (0..N_BEAMS).map(|_| r.gen_range(0.5..5.0)).collect();
        let init = PoseEstimate::new(x, y, t);
        let w = SearchWindow::for_resolution(RES);
        let m = match_scan(&pyr, &RawScan { ranges, max_range: 12.0 }, init, &w).unwrap();
        prop_assert!((m.pose.x - x).abs() <= w.half_xy + 1e-9);
        prop_assert!((m.pose.y - y).abs() <= w.half_xy + 1e-9);
        let dt = relax_nav::geom::normalize_angle(m.pose.theta - init.theta).abs();
        prop_assert!(dt <= w.half_theta + 1e-9);
    }
}
