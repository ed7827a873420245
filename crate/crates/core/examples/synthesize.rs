//! Ground truth and noisy channel estimates for an L-shaped room, written as
//! CSV.
//!
//!     cargo run --example synthesize [out_dir] [seed]

use std::path::PathBuf;

use mpslam::propagation::{Anchor, Environment, RadioConstants, Surface};
use mpslam::synthesis::{
    enumerate_true_paths, generate_trajectory, synthesize_log, write_measurements_csv, write_truth_csv, SynthOptions,
    TrajectoryConfig,
};
use mpslam::Vec2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "target/synthesize".into());
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    std::fs::create_dir_all(&out)?;

    let corners = [(0.0, 0.0), (6.0, 0.0), (6.0, 3.0), (3.0, 3.0), (3.0, 6.0), (0.0, 6.0)];
    let surfaces = (0..corners.len())
        .map(|k| {
            let (a, b) = (corners[k], corners[(k + 1) % corners.len()]);
            Surface::new(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1), 0.6)
        })
        .collect();
    let env = Environment {
        surfaces,
        pas: vec![Anchor { id: 0, pos: Vec2::new(5.0, 1.0) }, Anchor { id: 1, pos: Vec2::new(1.0, 5.0) }],
        roi: None,
    };
    env.validate()?;
    env.save(&out.join("environment.json"))?;

    let traj = TrajectoryConfig {
        waypoints: vec![Vec2::new(4.5, 1.5), Vec2::new(1.5, 1.5), Vec2::new(1.5, 4.5)],
        step_size: 0.1,
        dt: 1.0,
        orientation_drift: 0.002,
        orientation_offset: 0.3,
        max_states: None,
    };
    let truth = generate_trajectory(&traj, env.roi())?;
    let rc = RadioConstants::calibrated(30.0, 6.0, 6e9, 1e9);
    let opts = SynthOptions {
        mu_fa: 1.0,
        d_max: 3.0 * (env.roi()[1] - env.roi()[0]).norm(),
        noiseless: false,
    };
    let log = synthesize_log(&env, &truth, &rc, &opts, seed);

    for (j, pa) in env.pas.iter().enumerate() {
        let visible: usize = truth.iter().map(|x| enumerate_true_paths(&env, x, pa.pos).len()).sum();
        let measured: usize = (0..log.num_steps()).map(|n| log.get(n, j).len()).sum();
        println!("PA {j}: {visible} visible paths, {measured} measurements over {} steps", truth.len());
    }
    write_truth_csv(&truth, &out.join("truth.csv"))?;
    write_measurements_csv(&log, &out.join("measurements.csv"))?;
    println!("wrote {}", out.display());
    Ok(())
}
