mod common;

use common::checks::{done_table, reward_spot_values, reward_table};
use proptest::prelude::*;
use relax_nav::agent::EpsilonSchedule;

#[test]
fn reward_precedence() {
    reward_table().unwrap();
}

#[test]
fn termination_precedence() {
    done_table().unwrap();
}

#[test]
fn spot_values() {
    assert_eq!(reward_spot_values().unwrap(), [2999.96, -2001.0, -51.44]);
}

#[test]
fn epsilon_reaches_its_floor_at_9900_steps() {
    let e = EpsilonSchedule::default();
    assert!(e.value_at(9899) > e.eps_min);
    assert!((e.value_at(9900) - e.eps_min).abs() < 1e-12);
    assert_eq!(e.value_at(50_000), e.eps_min);
}

proptest! {
    #[test]
    fn epsilon_never_increases(t in 0u64..50_000, dt in 0u64..1000) {
        let e = EpsilonSchedule::default();
        prop_assert!(e.value_at(t + dt) <= e.value_at(t));
        prop_assert!(e.value_at(t) >= e.eps_min && e.value_at(t) <= e.eps_max);
    }
}
