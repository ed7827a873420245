//! One agent maps the room; a second agent on another route starts from
//! that map and is compared with a run from a flat prior.
//!
//!     cargo run --release --example map_handoff [seed]

use mpslam::grid::write_occupancy_csv;
use mpslam::harness::{median, run_filter, run_scenario, simulate, RunConfig};
use mpslam::math::Vec2;
use mpslam::propagation::Environment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let dir = std::path::PathBuf::from("target/map_handoff");
    std::fs::create_dir_all(&dir)?;
    let env = Environment::rectangular_room(
        Vec2::new(-2.5, -2.5),
        Vec2::new(2.5, 2.5),
        [0.5, 0.8, 0.5, 0.8],
        &[Vec2::new(-1.5, 1.8), Vec2::new(1.7, -1.2)],
    );
    env.save(&dir.join("environment.json"))?;

    let first = RunConfig {
        environment: dir.join("environment.json"),
        output_dir: dir.join("agent1"),
        seed,
        ..RunConfig::default()
    };
    let mapped = run_scenario(&first)?;
    let map = dir.join("agent1_map.csv");
    write_occupancy_csv(&mapped.filter.state.grid_spec, &mapped.filter.state.grid, &map)?;
    println!("agent 1: {} steps, map written to {}", mapped.report.steps, map.display());

    let mut second = RunConfig {
        output_dir: dir.join("agent2"),
        ..first
    };
    second.scenario.trajectory.waypoints = vec![Vec2::new(1.2, 1.0), Vec2::new(-1.0, 1.0), Vec2::new(-1.0, -1.2)];
    second.scenario.trajectory.max_states = Some(20);
    let sim = simulate(&second, &env)?;
    let with_map = RunConfig {
        prior_map: Some(map),
        ..second.clone()
    };
    for (name, cfg) in [("flat prior", &second), ("agent 1 map", &with_map)] {
        let out = run_filter(cfg, &env, sim.log.clone(), Some(sim.truth.clone()))?;
        let e = &out.report.metrics.as_ref().expect("scored").position_error;
        println!(
            "agent 2, {name:>11}: median error steps 1-10 {:.3} m, steps 11-20 {:.3} m",
            median(&e[..10]),
            median(&e[10..])
        );
    }
    Ok(())
}
