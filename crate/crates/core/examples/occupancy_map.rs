//! Survey a farmland layout, export the map as PGM + JSON and re-localize
//! a displaced scan against it.

use relax_nav::lidar::{Lidar, NoiseModel};
use relax_nav::mapping::{
    build_pyramid, estimate_rotation, extract_corners, match_scan, save_map, survey, survey_grid, CellClass,
    MapSidecar, PoseEstimate, SearchWindow, SurveyOptions, EQUAL_WEIGHTS,
};
use relax_nav::world::{spawn_scenario, ScenarioTemplate};

pub fn run_example() -> relax_nav::Result<()> {
    let world = spawn_scenario(2, ScenarioTemplate::Farmland);
    let opts = SurveyOptions::default();
    let poses = survey_grid(&world, 6.0);
    let grid = survey(&world, &poses, &opts)?.grid;
    println!(
        "{}x{} cells from {} poses: {} free, {} occupied, {} unknown",
        grid.width,
        grid.height,
        poses.len(),
        grid.count_class(CellClass::Free),
        grid.count_class(CellClass::Occupied),
        grid.count_class(CellClass::Unknown),
    );

    let corners = extract_corners(&grid)?;
    let rotation = estimate_rotation(&grid, EQUAL_WEIGHTS)?;
    println!(
        "bounding box LL {:?} UR {:?}, wall rotation {:.4} deg",
        corners.lower_left,
        corners.upper_right,
        rotation.theta.to_degrees()
    );

    let dir = std::env::temp_dir().join("relax-nav-occupancy-map");
    std::fs::create_dir_all(&dir).map_err(|e| relax_nav::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let pgm = dir.join("map.pgm");
    let sidecar = MapSidecar {
        image: "map.pgm".into(),
        resolution: grid.resolution,
        origin: grid.origin,
        width: grid.width,
        height: grid.height,
        corners: Some(corners),
        rotation: Some(rotation.theta),
        world_bounds: Some([world.x_min, world.x_max, world.y_min, world.y_max]),
    };
    save_map(&grid, &pgm, &sidecar)?;
    println!("wrote {}", pgm.display());

    // scan from a pose the map does not know, search from the nominal one
    let truth = PoseEstimate::new(1.3, -0.8, 4f64.to_radians());
    let scan = Lidar::default().cast_from(&world, truth.position(), truth.theta, &NoiseModel::Off, 0)?;
    let pyramid = build_pyramid(&grid, opts.pyramid_levels)?;
    let guess = PoseEstimate::new(1.0, -0.8, 0.0);
    let found = match_scan(&pyramid, &scan, guess, &SearchWindow::for_resolution(grid.resolution))?;
    println!(
        "matched ({:.3}, {:.3}, {:.2} deg), truth ({:.3}, {:.3}, {:.2} deg)",
        found.pose.x,
        found.pose.y,
        found.pose.theta.to_degrees(),
        truth.x,
        truth.y,
        truth.theta.to_degrees()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
