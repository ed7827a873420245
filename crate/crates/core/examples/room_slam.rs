//! Full scenario: a 5 m room with two anchors, 80 steps of synthetic
//! measurements, filtered and scored. Artifacts land in `target/room_slam`
//! unless a directory is given.
//!
//!     cargo run --release --example room_slam [out_dir] [seed]

use std::path::PathBuf;

use mpslam::harness::{run_scenario, RunConfig};
use mpslam::math::Vec2;
use mpslam::propagation::Environment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "target/room_slam".into());
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    std::fs::create_dir_all(&out)?;

    let env = Environment::rectangular_room(
        Vec2::new(-2.5, -2.5),
        Vec2::new(2.5, 2.5),
        [0.5, 0.8, 0.5, 0.8],
        &[Vec2::new(-1.5, 1.8), Vec2::new(1.7, -1.2)],
    );
    let env_path = out.join("environment.json");
    env.save(&env_path)?;

    let cfg = RunConfig {
        environment: env_path,
        output_dir: out.clone(),
        seed,
        ..RunConfig::default()
    };
    let run = run_scenario(&cfg)?;
    let r = &run.report;
    let m = r.metrics.as_ref().expect("synthetic runs have ground truth");
    println!("steps                    {}", r.steps);
    println!("median position error    {:.3} m", m.median_position_error);
    println!("median orientation error {:.2} deg", m.median_orientation_error_deg);
    println!("sfvs detected / true     {} / {}", m.detected_sfvs, m.true_sfvs);
    println!("ospa                     {:.3}", m.ospa);
    println!(
        "wall cells occupied      {}/{} ({:.1}%)",
        m.occupancy.wall_cells_occupied,
        m.occupancy.wall_cells_touched,
        100.0 * m.occupancy.wall_fraction()
    );
    println!(
        "free cells free          {}/{} ({:.1}%)",
        m.occupancy.free_cells_free,
        m.occupancy.free_cells_traversed,
        100.0 * m.occupancy.free_fraction()
    );
    println!("precision / recall       {:.3} / {:.3}", m.occupancy.precision, m.occupancy.recall);
    println!("runtime                  {:.1} s", r.timings.total);
    println!("artifacts in {}", out.display());
    Ok(())
}
