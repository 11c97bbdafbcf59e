//! After a collision far from home the simulator teleports the drone back,
//! but the reported position keeps streaming the old location for a while.
//! Commanding home straight away lets the controller chase that stale
//! position; the staged reset keeps the excursion small.

use relax_nav::agent::{reset_sequence, ResetConfig};
use relax_nav::world::{spawn_scenario, DronePose, LaggedReset, ScenarioTemplate};

pub fn run_example() -> relax_nav::Result<()> {
    let world = spawn_scenario(8, ScenarioTemplate::Farmland);
    for (x, y) in [(7.0, 4.0), (-9.0, 11.0), (2.0, -6.5)] {
        let crash = DronePose::at(x, y, world.altitude);
        let mut staged = LaggedReset::begin_reset(&world, &crash);
        let report = reset_sequence(&mut staged, &ResetConfig::default())?;
        staged.settle(1000);
        println!(
            "from ({x:5.1}, {y:5.1}): {:?} after {} ticks, staging {:?}",
            report.exit,
            report.ticks,
            report.staging.iter().map(|s| (s.x, s.y)).collect::<Vec<_>>(),
        );

        // naive: send home and wait
        let mut naive = LaggedReset::begin_reset(&world, &crash);
        naive.command_move(naive.home());
        naive.settle(1000);
        for (name, r) in [("staged", &staged), ("naive", &naive)] {
            let stray = r.trail().iter().map(|q| q.planar().norm()).fold(0.0, f64::max);
            println!("    {name:6} strays up to {stray:.2} m from home, {} collisions", r.collision_events());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
