//! Plan the house-to-tower mission on a surveyed map and convert the
//! waypoints to world coordinates.

use relax_nav::mapping::{estimate_rotation, extract_corners, survey, survey_grid, SurveyOptions, EQUAL_WEIGHTS};
use relax_nav::planner::{
    inverse_transform_point, plan_rrt, segment_free, transform_path, RrtConfig, TransformConfig, TransformMode,
};
use relax_nav::world::{spawn_scenario, ScenarioTemplate};

pub fn run_example() -> relax_nav::Result<()> {
    let world = spawn_scenario(4, ScenarioTemplate::Farmland);
    let grid = survey(&world, &survey_grid(&world, 6.0), &SurveyOptions::default())?.grid;

    let tf = TransformConfig {
        corners: extract_corners(&grid)?,
        x_min_g: world.x_min,
        x_max_g: world.x_max,
        y_min_g: world.y_min,
        y_max_g: world.y_max,
        theta: -estimate_rotation(&grid, EQUAL_WEIGHTS)?.theta,
        mode: TransformMode::Affine,
    };
    let start = inverse_transform_point(world.start, &tf)?;
    let goal = inverse_transform_point(world.goal, &tf)?;

    let cfg = RrtConfig {
        rng_seed: 4,
        ..RrtConfig::default()
    };
    let plan = plan_rrt(&grid, start, goal, &cfg)?;
    let Some(pixels) = plan.path else {
        println!("no path after {} iterations", plan.iterations);
        return Ok(());
    };
    assert!(pixels.0.windows(2).all(|w| segment_free(&grid, w[0], w[1], cfg.unknown)));
    let waypoints = transform_path(&pixels, &tf)?;
    println!(
        "{} iterations, {} tree nodes, {} waypoints",
        plan.iterations,
        plan.tree.nodes.len(),
        waypoints.0.len()
    );
    for (i, w) in waypoints.0.iter().enumerate() {
        println!("  {i:2}: ({:7.3}, {:7.3})", w.x, w.y);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
