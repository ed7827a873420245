use std::path::Path;
use std::process::Command;

use mpslam::math::Vec2;
use mpslam::propagation::Environment;

fn mpslam(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mpslam")).args(args).output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let env = Environment::rectangular_room(
        Vec2::new(-2.5, -2.5),
        Vec2::new(2.5, 2.5),
        [0.5, 0.8, 0.5, 0.8],
        &[Vec2::new(-1.5, 1.8), Vec2::new(1.7, -1.2)],
    );
    env.save(&dir.join("environment.json")).unwrap();
    let cfg = format!(
        r#"{{
  "environment": "environment.json",
  "output_dir": "out",
  "filter": {{ "n_particles": 200 }},
  "scenario": {{ "trajectory": {{ "waypoints": [[-1.0, -1.0], [1.0, -1.0]], "step_size": 0.05, "dt": 1.0, "max_states": 6 }} }}
  {extra}
}}"#
    );
    let path = dir.join("run.json");
    std::fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_replay_metrics_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("out");

    let run = mpslam(&["run", &cfg]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["trajectory.csv", "truth.csv", "measurements.csv", "occupancy.csv", "occupancy.pgm", "sfvs.csv", "paths.csv", "checkpoint.json", "report.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }

    let replay_dir = tmp.path().join("replay");
    let replay = mpslam(&[
        "replay",
        &cfg,
        out.join("measurements.csv").to_str().unwrap(),
        "--truth",
        out.join("truth.csv").to_str().unwrap(),
        "--output",
        replay_dir.to_str().unwrap(),
    ]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&out.join("trajectory.csv")), read(&replay_dir.join("trajectory.csv")));
    assert_eq!(read(&out.join("occupancy.csv")), read(&replay_dir.join("occupancy.csv")));

    let metrics = mpslam(&["metrics", &cfg, out.to_str().unwrap()]);
    assert!(metrics.status.success(), "{}", String::from_utf8_lossy(&metrics.stderr));
    assert!(out.join("metrics.json").is_file());

    let pgm = tmp.path().join("map.pgm");
    let export = mpslam(&["export-map", &cfg, out.join("occupancy.csv").to_str().unwrap(), pgm.to_str().unwrap()]);
    assert!(export.status.success());
    assert_eq!(read(&pgm), read(&out.join("occupancy.pgm")));
}

#[test]
fn synth_writes_only_measurements() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let s = mpslam(&["synth", &cfg, "--seed", "4"]);
    assert!(s.status.success());
    let out = tmp.path().join("out");
    assert!(out.join("measurements.csv").is_file() && out.join("truth.csv").is_file());
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), r#", "no_such_field": 1"#);
    assert_eq!(mpslam(&["run", &bad]).status.code(), Some(2));

    let cfg = write_config(tmp.path(), "");
    std::fs::remove_file(tmp.path().join("environment.json")).unwrap();
    assert_eq!(mpslam(&["run", &cfg]).status.code(), Some(3));
    assert!(!tmp.path().join("out").exists());

    let missing = tmp.path().join("absent.json");
    assert_eq!(mpslam(&["run", missing.to_str().unwrap()]).status.code(), Some(3));
}
