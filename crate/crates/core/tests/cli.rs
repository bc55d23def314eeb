use std::path::Path;
use std::process::{Command, Output};

use fbi_core::driver::STEP_CSV_HEADER;
use fbi_core::mesh::read_mesh;

fn fbi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbi"))
        .current_dir(dir)
        .env("FBI_THREADS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

/// A fast variant of the fiber preset.
const SHORT: [&str; 4] = ["--override", "time.t_end=0.03", "--override", "output.dir=out"];

#[test]
fn dry_run_prints_config_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbi(
        dir.path(),
        &[
            "run",
            "obstacle_channel",
            "--dry-run",
            "--override",
            "coupling.epsilon=1e5",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("coupling.epsilon = 1e5"));
    assert!(text.contains("mesh.cells = 24 8 8"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn invalid_config_exits_with_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbi(
        dir.path(),
        &[
            "run",
            "light_fiber",
            "--override",
            "time.dt=0",
            "--override",
            "fluid.viscosityy=1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let report = stderr_json(&out);
    assert_eq!(report["status"], "error");
    assert_eq!(report["kind"], "config");
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 2, "{errors:?}");
    assert!(errors.iter().any(|e| e.as_str().unwrap().contains("time.dt")));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    let out = fbi(dir.path(), &["run", "no_such_config.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "config");
}

#[test]
fn runtime_failure_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "run",
        "light_fiber",
        "--override",
        "fluid.newton_max=1",
        "--override",
        "fluid.newton_tol=1e-14",
    ];
    args.extend(SHORT);
    let out = fbi(dir.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    let report = stderr_json(&out);
    assert_eq!(report["kind"], "convergence");
    assert!(report["message"].as_str().unwrap().contains("fluid Newton"));
}

#[test]
fn single_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "run",
        "light_fiber",
        "--override",
        "output.vtk_every_n=2",
        "--override",
        "output.segments=true",
        "--override",
        "output.profile_start=0.5 0.5 0",
        "--override",
        "output.profile_end=0.5 0.5 3",
        "--override",
        "output.profile_points=31",
        "--mesh-out",
        "fluid.mesh",
    ];
    args.extend(SHORT);
    let out = fbi(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");

    let steps = std::fs::read_to_string(root.join("steps.csv")).unwrap();
    let lines: Vec<&str> = steps.lines().collect();
    assert_eq!(lines[0], STEP_CSV_HEADER);
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), STEP_CSV_HEADER.split(',').count());
    }

    for k in [0, 2] {
        let vtk = std::fs::read_to_string(root.join(format!("fluid_{k:05}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version"));
        assert!(vtk.contains("CELL_TYPES"));
        assert!(root.join(format!("beam_{k:05}.vtk")).exists());
    }
    assert!(!root.join("fluid_00001.vtk").exists());

    let segs = std::fs::read_to_string(root.join("segments.csv")).unwrap();
    assert!(segs.starts_with("beam_ele,fluid_ele,s_a,s_b"));
    assert!(segs.lines().count() > 4);

    let profile = std::fs::read_to_string(root.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("x,y,z,vx,vy,vz"));
    assert_eq!(profile.lines().count(), 32);

    let mesh = read_mesh(std::io::BufReader::new(
        std::fs::File::open(dir.path().join("fluid.mesh")).unwrap(),
    ))
    .unwrap();
    assert_eq!(mesh.num_elements(), 4 * 4 * 12);
}

#[test]
fn sweep_writes_runs_summary_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "light_fiber", "--sweep", "coupling.epsilon=1e1,1e2,1e3"];
    args.extend(SHORT);
    let out = fbi(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("log-log fit of violation_unscaled vs coupling.epsilon: slope ="),
        "{stdout}"
    );

    let root = dir.path().join("out");
    for v in ["1e1", "1e2", "1e3"] {
        assert!(root.join(format!("coupling.epsilon={v}")).join("steps.csv").exists());
    }
    let summary = std::fs::read_to_string(root.join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("key,value,t,iters,"));
    assert!(lines[0].ends_with("slip_max_over_time,violation_scaled_max_over_time"));
    assert!(lines[2].starts_with("coupling.epsilon,1e2,"));

    // each summary row carries the last row of its run
    let run = std::fs::read_to_string(root.join("coupling.epsilon=1e2/steps.csv")).unwrap();
    let last = run.lines().last().unwrap();
    assert!(lines[2].contains(last));
}

#[test]
fn sweep_validates_every_value_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "light_fiber", "--sweep", "coupling.epsilon=1e1,abc"];
    args.extend(SHORT);
    let out = fbi(dir.path(), &args);
    assert_eq!(out.status.code(), Some(2));
    let report = stderr_json(&out);
    assert!(report["message"].as_str().unwrap().contains("coupling.epsilon=abc"));
    assert!(!dir.path().join("out").exists());

    let out = fbi(dir.path(), &["run", "light_fiber", "--sweep", "coupling.epsilon"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fbi"))
        .current_dir(dir.path())
        .env("FBI_THREADS", "zero")
        .args(["run", "light_fiber", "--dry-run"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("FBI_THREADS"));
}
