//! Cast a scan in the farmland, pool it into eight sectors and push a few
//! readings through the jump filter, including one taken mid-gust.

use relax_nav::lidar::{pool_sectors, FilterConfig, FilterState, Lidar, MotionReading, NoiseModel, SectorDistances};
use relax_nav::world::{spawn_scenario, DronePose, ScenarioTemplate};

fn show(label: &str, s: &SectorDistances) {
    let cells: Vec<String> = s.0.iter().map(|d| format!("{d:5.2}")).collect();
    println!("{label:<10} [{}]", cells.join(" "));
}

pub fn run_example() -> relax_nav::Result<()> {
    let world = spawn_scenario(11, ScenarioTemplate::Farmland);
    let lidar = Lidar::default();
    let cfg = FilterConfig::default();
    let mut filter = FilterState::new(cfg);
    let level = MotionReading::default();

    // just east of the house
    let pose = DronePose::at(-11.3, -14.0, world.altitude);
    let clean = pool_sectors(&lidar.cast_scan(&world, &pose, &NoiseModel::Off, 0)?, cfg.det_range);
    show("pooled", &clean);
    filter.request();
    show("filtered", &filter.update(&clean, &level));

    // a reading full of spurious short returns: every sector that drops by
    // more than the jump threshold is held one meter below its old value
    let noisy = pool_sectors(
        &lidar.cast_scan(&world, &pose, &NoiseModel::spikes(1.0), 7)?,
        cfg.det_range,
    );
    show("spiky", &noisy);
    filter.request();
    show("filtered", &filter.update(&noisy, &level));
    println!("jump counters {:?}", filter.index_list);

    // tilted past the attitude gate: the previous output is repeated
    let gust = MotionReading {
        roll: 0.2,
        ..level
    };
    filter.request();
    let held = filter.update(&clean, &gust);
    show("gusted", &held);
    assert_eq!(held.0, filter.last_output);
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
