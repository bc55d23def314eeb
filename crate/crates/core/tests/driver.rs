use std::sync::Arc;

use fbi_core::app::{run_single, run_sweep, RunOptions, SWEEP_SUMMARY_FILE};
use fbi_core::beam::{BeamMesh, RigidMotion};
use fbi_core::config::{parse_config, RawConfig};
use fbi_core::driver::{
    aitken_update, fit_loglog_slope, write_step_csv, write_sweep_summary, Aitken, AitkenParams, AitkenStep, BeamModel,
    CouplingAlgorithm, CouplingVariant, Setup, Simulation, StepReport, SweepEntry, STEP_CSV_HEADER,
};
use fbi_core::fluid::{BoundaryConditions, FluidParams, FluidState};
use fbi_core::mesh::{build_box_mesh, PatchSpec};
use fbi_core::time_function::TimeFunction;
use fbi_core::{FbiError, Vec3};
use proptest::prelude::*;

/// Iterates `x <- g(x)` with Aitken relaxation; returns the number of `g` evaluations
/// until `|x - x*| < 1e-12`.
fn aitken_scalar(g: impl Fn(f64) -> f64, x_star: f64, params: AitkenParams) -> usize {
    let mut aitken = Aitken::new(params);
    let mut x = vec![0.0];
    for k in 1..=100 {
        let f = [g(x[0])];
        if let AitkenStep::Converged = aitken.relax(&f, &mut x) {
            return k;
        }
        if (x[0] - x_star).abs() < 1e-12 {
            return k;
        }
    }
    usize::MAX
}

fn wide() -> AitkenParams {
    AitkenParams {
        omega_init: 0.5,
        omega_min: 0.05,
        omega_max: 2.0,
    }
}

#[test]
fn aitken_solves_contractive_scalar_map_quickly() {
    let evals = aitken_scalar(|x| 0.5 * x + 1.0, 2.0, wide());
    assert!(evals <= 5, "needed {evals} evaluations");
}

#[test]
fn aitken_stabilizes_divergent_scalar_map() {
    // plain iteration of x <- 1 - 3x diverges; the secant factor is 1/4
    let evals = aitken_scalar(|x| 1.0 - 3.0 * x, 0.25, wide());
    assert!(evals <= 5, "needed {evals} evaluations");
}

#[test]
fn aitken_signals_exact_fixed_point() {
    let mut a = Aitken::new(AitkenParams::default());
    let mut x = vec![2.0, -1.0];
    assert_eq!(a.relax(&[2.0, -1.0], &mut x), AitkenStep::Converged);
    assert!(a.history().is_empty());
    assert_eq!(x, vec![2.0, -1.0]);
}

#[test]
fn aitken_clamps_to_lower_bound() {
    let p = AitkenParams::default();
    // r_prev = 1, r = 3: -0.5 * 1 * 2 / 4 = -0.25 -> omega_min
    let (relaxed, omega, r) = aitken_update(&[4.0], &[1.0], Some(&[1.0]), 0.5, &p).unwrap();
    assert_eq!(omega, p.omega_min);
    assert_eq!(r, vec![3.0]);
    assert_eq!(relaxed, vec![1.0 + 0.05 * 3.0]);
}

#[test]
fn aitken_parameters_are_validated() {
    let bad = AitkenParams {
        omega_init: 0.01,
        omega_min: 0.05,
        omega_max: 1.0,
    };
    assert!(bad.validate().is_err());
    assert!(AitkenParams {
        omega_max: 2.5,
        ..wide()
    }
    .validate()
    .is_err());
    assert!(wide().validate().is_ok());
}

/// Unit cube with velocity `u` prescribed on every face and a rigid beam moving with `beam_velocity`.
fn uniform_flow_setup(u: Vec3, beam_velocity: Vec3, variant: CouplingVariant) -> Setup {
    let mesh = build_box_mesh([1.0, 1.0, 1.0], [4, 4, 4], &PatchSpec::per_face()).unwrap();
    let mut bcs = BoundaryConditions::new();
    for p in ["x_min", "x_max", "y_min", "y_max", "z_min", "z_max"] {
        bcs = bcs.dirichlet(p, [true; 3], u, TimeFunction::Constant(1.0));
    }
    let beam_mesh = BeamMesh::straight(Vec3::new(0.2, 0.3, 0.45), Vec3::new(0.6, 0.7, 0.55), 3).unwrap();
    Setup {
        fluid_mesh: Arc::new(mesh),
        fluid_params: FluidParams::new(1.0, 0.01),
        bcs,
        beam_mesh,
        beam: BeamModel::Rigid(RigidMotion {
            velocity: beam_velocity,
            time_function: TimeFunction::Constant(1.0),
            ..RigidMotion::at_rest()
        }),
        algorithm: CouplingAlgorithm::new(variant, 1e3),
        dt: 0.01,
        t_end: 0.03,
    }
}

fn uniform_state(sim: &Simulation, u: Vec3) -> FluidState {
    let mut s = sim.fluid_state().clone();
    for n in 0..s.num_nodes() {
        s.v[3 * n..3 * n + 3].copy_from_slice(u.as_slice());
    }
    s
}

#[test]
fn beam_moving_with_uniform_flow_feels_no_force() {
    let u = Vec3::new(0.3, -0.1, 0.2);
    let mut sim = Simulation::new(uniform_flow_setup(u, u, CouplingVariant::BeamToFluid)).unwrap();
    sim.set_fluid_state(uniform_state(&sim, u)).unwrap();
    let reports = sim.run(|_, _| Ok(())).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert_eq!(r.outer_iters, 1);
        assert!(r.f_f_norm < 1e-9, "force {}", r.f_f_norm);
        assert!(r.slip_max < 1e-10, "slip {}", r.slip_max);
    }
    for n in 0..sim.fluid_state().num_nodes() {
        assert!((sim.fluid_state().node_velocity(n) - u).norm() < 1e-10);
    }
}

#[test]
fn beam_to_fluid_rebuilds_segments_once_per_step() {
    let u = Vec3::new(1.0, 0.0, 0.0);
    let mut sim = Simulation::new(uniform_flow_setup(u, Vec3::zeros(), CouplingVariant::BeamToFluid)).unwrap();
    let before = sim.segment_builds();
    let reports = sim.run(|_, _| Ok(())).unwrap();
    assert_eq!(sim.segment_builds() - before, reports.len());
    assert!(reports.iter().all(|r| r.outer_iters == 1 && r.omega_history.is_empty()));
    // a beam at rest in a moving fluid is loaded
    assert!(reports.last().unwrap().f_f_norm > 1e-3);
}

#[test]
fn time_grid_does_not_drift() {
    let u = Vec3::new(1.0, 0.0, 0.0);
    let mut setup = uniform_flow_setup(u, u, CouplingVariant::BeamToFluid);
    setup.dt = 0.1;
    setup.t_end = 0.3;
    let mut sim = Simulation::new(setup).unwrap();
    sim.set_fluid_state(uniform_state(&sim, u)).unwrap();
    assert_eq!(sim.num_steps(), 3);
    let reports = sim.run(|_, _| Ok(())).unwrap();
    let times: Vec<f64> = reports.iter().map(|r| r.time).collect();
    assert_eq!(times, vec![0.1, 0.2, 0.30000000000000004]);
    assert!(sim.is_finished());
    assert!(sim.step().is_err());
}

fn fiber(overrides: &[&str]) -> fbi_core::config::SimulationConfig {
    parse_config("light_fiber", overrides).unwrap()
}

#[test]
fn fiber_at_plug_velocity_converges_in_one_iteration() {
    let cfg = fiber(&[
        "bc.inlet.function=constant",
        "beam.initial_velocity=0 0 1",
        "time.t_end=0.05",
    ]);
    let mut sim = Simulation::new(cfg.setup().unwrap()).unwrap();
    sim.set_fluid_state(uniform_state(&sim, Vec3::new(0.0, 0.0, 1.0)))
        .unwrap();
    let reports = sim.run(|_, _| Ok(())).unwrap();
    for r in &reports {
        assert_eq!(r.outer_iters, 1, "{r:?}");
        assert!(r.violation_scaled < 1e-8);
    }
}

#[test]
fn fluid_to_beam_rebuilds_segments_for_every_beam_solve() {
    let cfg = fiber(&["time.t_end=0.05"]);
    let mut sim = Simulation::new(cfg.setup().unwrap()).unwrap();
    let reports = sim.run(|_, _| Ok(())).unwrap();
    assert!(sim.segment_builds() >= sim.beam_solves());
    let iters: usize = reports.iter().map(|r| r.outer_iters).sum();
    assert_eq!(sim.beam_solves(), iters);
    assert!(reports.iter().all(|r| r.outer_iters > 1));
}

#[test]
fn light_fiber_tracks_the_flow() {
    let cfg = fiber(&["coupling.epsilon=1e3", "time.t_end=0.2"]);
    let inflow = TimeFunction::CosineWave { period: 0.2 };
    let mut sim = Simulation::new(cfg.setup().unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    sim.run(|s, _| {
        let v_in = Vec3::new(0.0, 0.0, inflow.value(s.time()));
        for n in 0..s.beam_mesh().num_nodes() {
            worst = worst.max((s.beam_state().node_velocity(n) - v_in).norm());
        }
        Ok(())
    })
    .unwrap();
    assert!(worst < 5e-3, "tracking error {worst}");
    // the beam was carried downstream by about the mean inflow times t
    let z = sim.beam_state().node_position(0).z;
    assert!((z - 1.1).abs() < 0.01, "z = {z}");
}

#[test]
fn outer_loop_reports_non_convergence() {
    let cfg = fiber(&[
        "coupling.tol_partition=1e-15",
        "coupling.max_outer=2",
        "time.t_end=0.05",
    ]);
    let mut sim = Simulation::new(cfg.setup().unwrap()).unwrap();
    match sim.step() {
        Err(e @ FbiError::NoConvergence { .. }) => assert_eq!(e.kind(), "convergence"),
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let run = || {
        let cfg = fiber(&["time.t_end=0.05"]);
        let mut sim = Simulation::new(cfg.setup().unwrap()).unwrap();
        let reports = sim.run(|_, _| Ok(())).unwrap();
        (reports, sim.beam_state().d.clone(), sim.fluid_state().v.clone())
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_summary_equals_individual_runs() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("sweep");
    let mut raw = RawConfig::load("light_fiber").unwrap();
    raw.apply_overrides(&["time.t_end=0.03".to_string(), format!("output.dir={}", base.display())])
        .unwrap();
    let values = vec!["1e1".to_string(), "1e2".to_string()];
    let out = run_sweep(&raw, "coupling.epsilon", &values, &RunOptions::default()).unwrap();
    assert_eq!(out.runs.len(), 2);

    let mut entries = Vec::new();
    for v in &values {
        let single_dir = dir.path().join(format!("single{v}"));
        let cfg = parse_config(
            "light_fiber",
            &[
                "time.t_end=0.03".to_string(),
                format!("coupling.epsilon={v}"),
                format!("output.dir={}", single_dir.display()),
            ],
        )
        .unwrap();
        let single = run_single(&cfg, &RunOptions::default()).unwrap();
        let swept = std::fs::read(base.join(format!("coupling.epsilon={v}")).join("steps.csv")).unwrap();
        assert_eq!(std::fs::read(single_dir.join("steps.csv")).unwrap(), swept);
        entries.push(SweepEntry::new("coupling.epsilon", v, &single.reports).unwrap());
    }
    let mut expected = Vec::new();
    write_sweep_summary(&mut expected, &entries).unwrap();
    assert_eq!(std::fs::read(base.join(SWEEP_SUMMARY_FILE)).unwrap(), expected);
    assert_eq!(out.fits.len(), 3);
}

#[test]
fn step_csv_round_trips_floats() {
    let r = StepReport {
        time: 0.1 + 0.2,
        outer_iters: 3,
        violation_unscaled: 1.234e-7,
        violation_scaled: 5e-300,
        f_f_norm: 1.0 / 3.0,
        f_b_norm: 0.0,
        omega_history: vec![0.5, 0.25],
        fluid_newton: 2,
        beam_newton: 4,
        slip_max: f64::MIN_POSITIVE,
    };
    let mut buf = Vec::new();
    write_step_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(STEP_CSV_HEADER));
    let f: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(
        f,
        vec![
            r.time,
            3.0,
            r.violation_unscaled,
            r.violation_scaled,
            r.f_f_norm,
            0.0,
            0.25,
            2.0,
            4.0,
            r.slip_max
        ]
    );
}

#[test]
fn loglog_fit_of_synthetic_data() {
    let x = [1e2, 1e3, 1e4, 1e5, 1e6];
    let y: Vec<f64> = x.iter().map(|v| 7.0 / v).collect();
    let (slope, intercept, r2) = fit_loglog_slope(&x, &y).unwrap();
    assert!((slope + 1.0).abs() < 1e-12);
    assert!((intercept - 7f64.log10()).abs() < 1e-12);
    assert!((r2 - 1.0).abs() < 1e-12);

    let (slope, _, _) = fit_loglog_slope(&x, &[3.0; 5]).unwrap();
    assert!(slope.abs() < 1e-12);

    let err = fit_loglog_slope(&x, &[1.0, 2.0, 0.0, 1.0, 1.0]).unwrap_err();
    assert!(err.to_string().contains("row 2"), "{err}");
    assert!(fit_loglog_slope(&[1.0], &[1.0]).is_err());
}

proptest! {
    #[test]
    fn loglog_fit_recovers_power_laws(p in -3.0f64..3.0, c in 1e-3f64..1e3, x0 in 1e-2f64..1e2) {
        let x: Vec<f64> = (0..6).map(|k| x0 * 10f64.powf(0.7 * k as f64)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        let (slope, intercept, _) = fit_loglog_slope(&x, &y).unwrap();
        prop_assert!((slope - p).abs() < 1e-10);
        prop_assert!((intercept - c.log10()).abs() < 1e-9);
    }

    #[test]
    fn aitken_solves_linear_scalar_maps(a in -5.0f64..0.9, b in -10.0f64..10.0) {
        prop_assume!((a - 1.0).abs() > 0.1);
        let x_star = b / (1.0 - a);
        // the secant factor 1/(1-a) must lie inside the bounds
        let params = AitkenParams { omega_init: 0.5, omega_min: 0.01, omega_max: 2.0 };
        prop_assume!(1.0 / (1.0 - a) <= params.omega_max);
        let evals = aitken_scalar(|x| a * x + b, x_star, params);
        prop_assert!(evals <= 6, "a = {}, b = {}: {} evaluations", a, b, evals);
    }
}
