mod common;

use common::checks::filter_sequence;
use common::ReferenceFilter;
use proptest::prelude::*;
use relax_nav::lidar::{
    pool_sectors, sector_of_beam, FilterConfig, FilterState, Lidar, MotionReading, NoiseModel, RawScan,
    SectorDistances, N_BEAMS, N_SECTORS,
};
use relax_nav::geom::Vec2;
use relax_nav::world::{Obstacle, WorldConfig};

fn pooled(first: f64) -> SectorDistances {
    let mut d = SectorDistances::uniform(5.0);
    d.0[0] = first;
    d
}

#[test]
fn single_jump_steps_down_by_one() {
    let mut f = FilterState::new(FilterConfig::default());
    let still = MotionReading::default();
    f.update(&pooled(5.0), &still);
    f.request();
    let out = f.update(&pooled(1.0), &still);
    assert_eq!(out.0[0], 4.0);
    assert_eq!(f.index_list[0], 1);
}

#[test]
fn third_jump_caps_and_gives_back() {
    let mut f = FilterState::new(FilterConfig::default());
    let still = MotionReading::default();
    f.update(&pooled(5.0), &still);
    f.index_list[0] = 2;
    f.request();
    let out = f.update(&pooled(1.0), &still);
    assert_eq!(out.0[0], 4.0);
    assert_eq!(f.index_list[0], 1);
}

#[test]
fn gated_reading_changes_nothing() {
    let mut f = FilterState::new(FilterConfig::default());
    let first = f.update(&pooled(5.0), &MotionReading::default());
    f.request();
    let before = f.clone();
    let fast = MotionReading {
        linear_velocity: 0.31,
        ..Default::default()
    };
    assert_eq!(f.update(&pooled(1.0), &fast), first);
    assert_eq!(f, before);
}

#[test]
fn unarmed_filter_repeats_itself() {
    let mut f = FilterState::new(FilterConfig::default());
    let first = f.update(&pooled(5.0), &MotionReading::default());
    assert_eq!(f.update(&pooled(1.0), &MotionReading::default()), first);
}

#[test]
fn reference_agrees_on_hand_trace() {
    let mut r = ReferenceFilter::new(6.0, 0.3, 0.1, 0.1);
    let mut d = [5.0; 8];
    assert_eq!(r.pass(&d, 0.0, 0.0, 0.0), d.to_vec());
    d[0] = 1.0;
    r.arm();
    assert_eq!(r.pass(&d, 0.0, 0.0, 0.0)[0], 4.0);
    assert_eq!(r.index_list[0], 1);
}

#[test]
fn two_hundred_sequences_match_the_reference() {
    for seed in 0..200 {
        filter_sequence(seed).unwrap();
    }
}

fn scan_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001..12.0f64, N_BEAMS)
}

proptest! {
    #[test]
    fn sequences_match_reference(seed in any::<u64>()) {
        prop_assert!(filter_sequence(seed).is_ok(), "{:?}", filter_sequence(seed));
    }

    #[test]
    fn pooling_is_capped_and_never_below_the_beams(ranges in scan_strategy(), det in 0.5..12.0f64) {
        let scan = RawScan { ranges: ranges.clone(), max_range: 12.0 };
        let p = pool_sectors(&scan, det);
        for s in 0..N_SECTORS {
            let true_min = (0..N_BEAMS).filter(|&b| sector_of_beam(b) == s).map(|b| ranges[b]).fold(f64::INFINITY, f64::min);
            prop_assert!(p.0[s] <= det);
            prop_assert_eq!(p.0[s], true_min.min(det));
        }
    }

    #[test]
    fn quarter_turn_rotates_the_scan(
        cx in -6.0..6.0f64, cy in -6.0..6.0f64, hx in 0.2..2.0f64, hy in 0.2..2.0f64,
        ax in -8.0..8.0f64, ay in -8.0..8.0f64, bx in -8.0..8.0f64, by in -8.0..8.0f64,
    ) {
        prop_assume!(Vec2::new(ax, ay).distance(Vec2::new(bx, by)) > 0.5);
        let turn = |p: Vec2| Vec2::new(-p.y, p.x);
        let mut w = WorldConfig::empty(-10.0, 10.0, -10.0, 10.0);
        w.obstacles.push(Obstacle::Rectangle { center: Vec2::new(cx, cy), half_extents: Vec2::new(hx, hy) });
        w.obstacles.push(Obstacle::Bar { a: Vec2::new(ax, ay), b: Vec2::new(bx, by), thickness: 0.3 });
        let mut turned = w.clone();
        turned.obstacles = vec![
            Obstacle::Rectangle { center: turn(Vec2::new(cx, cy)), half_extents: Vec2::new(hy, hx) },
            Obstacle::Bar { a: turn(Vec2::new(ax, ay)), b: turn(Vec2::new(bx, by)), thickness: 0.3 },
        ];
        let origin = Vec2::new(0.0, 0.0);
        prop_assume!(w.shapes().all(|s| !s.contains(origin)));
        let lidar = Lidar::default();
        let a = lidar.cast_from(&w, origin, 0.0, &NoiseModel::Off, 0).unwrap();
        let b = lidar.cast_from(&turned, origin, 0.0, &NoiseModel::Off, 0).unwrap();
        for k in 0..N_BEAMS {
            prop_assert!((a.ranges[k] - b.ranges[(k + 90) % N_BEAMS]).abs() < 1e-9, "beam {}", k);
        }
    }
}
