//! Filters the CSV log written by the `synthesize` example and prints the
//! strongest estimated specular paths of the last step.
//!
//!     cargo run --example synthesize
//!     cargo run --release --example replay [dir] [particles]

use std::path::PathBuf;

use mpslam::harness::{run_filter, write_artifacts, RunConfig};
use mpslam::inference::{FilterConfig, PathEstimate};
use mpslam::propagation::Environment;
use mpslam::synthesis::{read_measurements_csv, read_truth_csv};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| "target/synthesize".into());
    let particles = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);

    let env = Environment::load(&dir.join("environment.json"))?;
    let truth = read_truth_csv(&dir.join("truth.csv"))?;
    let log = read_measurements_csv(&dir.join("measurements.csv"), truth.len(), env.pas.len())?;
    let cfg = RunConfig {
        environment: dir.join("environment.json"),
        output_dir: dir.join("replay"),
        filter: FilterConfig {
            n_particles: particles,
            ..FilterConfig::default()
        },
        ..RunConfig::default()
    };
    let out = run_filter(&cfg, &env, log, Some(truth))?;
    write_artifacts(&cfg.output_dir, &out)?;

    let m = out.report.metrics.as_ref().expect("scored against the truth file");
    println!(
        "{} steps, median position error {:.3} m, median orientation error {:.2} deg, {} features",
        out.report.steps,
        m.median_position_error,
        m.median_orientation_error_deg,
        out.sfvs.len()
    );
    // Paths of the last step between detected features, strong enough to
    // be measured.
    let last = out.report.steps as u64;
    let u_de = cfg.scenario.radio().u_de;
    let detected = |id: &u64| out.sfvs.iter().any(|y| y.id == *id);
    let strong = |p: &PathEstimate| p.u > u_de && p.features.iter().all(detected);
    for (_, p) in out.paths.iter().filter(|(n, p)| *n == last && strong(p)) {
        println!(
            "PA {} via {:?}: {:.3} m, aod {:.1} deg, aoa {:.1} deg, u {:.2}, sd_d {:.1} mm",
            p.pa,
            p.features,
            p.length,
            p.aod.to_degrees(),
            p.aoa.to_degrees(),
            p.u,
            1e3 * p.variances.d.sqrt()
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
