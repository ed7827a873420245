use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mpslam::error::{Error, Result};
use mpslam::grid::{read_occupancy_csv, write_occupancy_pgm};
use mpslam::harness::{
    files, read_sfvs_csv, read_trajectory_csv, run_filter, run_scenario, score, simulate,
    write_artifacts, Metrics, RunConfig, RunOutput,
};
use mpslam::inference::FilterState;
use mpslam::propagation::Environment;
use mpslam::synthesis::{read_measurements_csv, read_truth_csv, write_measurements_csv, write_truth_csv};

#[derive(Parser)]
#[command(name = "mpslam", version, about = "Multipath radio SLAM with an occupancy grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize measurements, filter them and write every artifact.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write synthetic ground truth and measurements only.
    Synth {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Filter a logged measurement file.
    Replay {
        config: PathBuf,
        measurements: PathBuf,
        /// Ground truth for scoring; the run is unscored without it.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Steps in the log; taken from the truth file when given.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score the artifacts of a finished run against its ground truth.
    Metrics {
        config: PathBuf,
        run_dir: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Convert an occupancy CSV into a PGM image.
    ExportMap {
        config: PathBuf,
        input: PathBuf,
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(config: &Path, output: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(o) = output {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, seed, threads, output } => {
            let mut cfg = load(&config, output)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.threads = threads.or(cfg.threads);
            cfg.validate()?;
            let out = run_scenario(&cfg)?;
            summarize(&out);
            Ok(())
        }
        Command::Synth { config, seed, output } => {
            let mut cfg = load(&config, output)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let env = Environment::load(&cfg.environment)?;
            let sim = simulate(&cfg, &env)?;
            create_dir(&cfg.output_dir)?;
            write_truth_csv(&sim.truth, &cfg.output_dir.join(files::TRUTH))?;
            write_measurements_csv(&sim.log, &cfg.output_dir.join(files::MEASUREMENTS))?;
            println!("{} steps written to {}", sim.truth.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Replay { config, measurements, truth, steps, threads, output } => {
            let mut cfg = load(&config, output)?;
            cfg.threads = threads.or(cfg.threads);
            cfg.validate()?;
            let env = Environment::load(&cfg.environment)?;
            let truth = truth.map(|p| read_truth_csv(&p)).transpose()?;
            let n = match (&truth, steps) {
                (_, Some(n)) => n,
                (Some(t), None) => t.len(),
                (None, None) => {
                    return Err(Error::InvalidArgument("--steps is required without --truth".into()))
                }
            };
            let log = read_measurements_csv(&measurements, n, env.pas.len())?;
            let out = run_filter(&cfg, &env, log, truth)?;
            write_artifacts(&cfg.output_dir, &out)?;
            summarize(&out);
            Ok(())
        }
        Command::Metrics { config, run_dir, truth } => {
            let cfg = load(&config, None)?;
            let env = Environment::load(&cfg.environment)?;
            let truth = read_truth_csv(&truth.unwrap_or_else(|| run_dir.join(files::TRUTH)))?;
            let est = read_trajectory_csv(&run_dir.join(files::TRAJECTORY))?;
            let sfvs = read_sfvs_csv(&run_dir.join(files::SFVS))?;
            let state = FilterState::load(&run_dir.join(files::CHECKPOINT))?;
            let spec = state.grid_spec;
            let grid = read_occupancy_csv(&spec, &run_dir.join(files::MAP_CSV))?;
            let reference = cfg.filter.reference.unwrap_or_else(|| {
                let [lo, hi] = env.roi();
                (lo + hi) * 0.5
            });
            let m = score(
                &env,
                &spec,
                &grid,
                reference,
                cfg.filter.hit_radius_cells,
                cfg.filter.endpoint_guard_cells,
                &est,
                &truth,
                &sfvs,
            )?;
            print_metrics(&m);
            let path = run_dir.join("metrics.json");
            let text = serde_json::to_string_pretty(&m).expect("metrics serialize");
            std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
        }
        Command::ExportMap { config, input, output } => {
            let cfg = load(&config, None)?;
            let env = Environment::load(&cfg.environment)?;
            let spec = cfg.grid_spec(&env)?;
            let grid = read_occupancy_csv(&spec, &input)?;
            write_occupancy_pgm(&spec, &grid, &output)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn summarize(out: &RunOutput) {
    let r = &out.report;
    println!("steps {}  filter time {:.1} s", r.steps, filter_seconds(out));
    if let Some(m) = &r.metrics {
        print_metrics(m);
    }
    println!("detected sfvs {}", out.sfvs.len());
}

fn filter_seconds(out: &RunOutput) -> f64 {
    let t = &out.report.timings.filter;
    t.prediction + t.ray_casting + t.evidence + t.birth + t.association + t.fusion + t.resampling
}

fn print_metrics(m: &Metrics) {
    println!(
        "position error  median {:.4} m  mean {:.4} m",
        m.median_position_error, m.mean_position_error
    );
    println!(
        "orientation     median {:.3} deg  mean {:.3} deg",
        m.median_orientation_error_deg, m.mean_orientation_error_deg
    );
    println!("sfv ospa        {:.3} ({} detected, {} true)", m.ospa, m.detected_sfvs, m.true_sfvs);
    let o = &m.occupancy;
    println!(
        "walls occupied  {}/{}  free cells {}/{}  precision {:.3}  recall {:.3}",
        o.wall_cells_occupied, o.wall_cells_touched, o.free_cells_free, o.free_cells_traversed, o.precision, o.recall
    );
}
