use std::sync::Arc;

use fbi_core::fluid::{discrete_divergence_norm, BoundaryConditions, FluidParams, FluidSolver, FluidState};
use fbi_core::mesh::{build_box_mesh, BoxFace, FluidMesh, PatchSpec};
use fbi_core::time_function::TimeFunction;
use fbi_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(dims: [f64; 3], cells: [usize; 3]) -> Arc<FluidMesh> {
    Arc::new(build_box_mesh(dims, cells, &PatchSpec::per_face()).unwrap())
}

fn random_state(n: usize, rng: &mut ChaCha8Rng, t: f64) -> FluidState {
    let mut s = FluidState::zeros(n);
    s.v.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    s.p.iter_mut().for_each(|p| *p = rng.random_range(-1.0..1.0));
    s.t = t;
    s
}

#[test]
fn rest_state_has_zero_residual() {
    let m = mesh([1.0; 3], [2, 2, 2]);
    let mut solver = FluidSolver::new(m.clone(), FluidParams::new(1.0, 0.01), BoundaryConditions::new()).unwrap();
    let rest = FluidState::zeros(m.num_nodes());
    let (_, r) = solver.assemble_system(&rest, &rest, 0.1, None).unwrap();
    assert!(r.iter().all(|&v| v == 0.0));
}

#[test]
fn galerkin_jacobian_matches_central_differences() {
    let m = mesh([1.0, 0.8, 1.2], [2, 2, 2]);
    let mut params = FluidParams::new(1.3, 0.05);
    params.stabilization = false;
    params.theta = 0.6;
    params.body_force = Vec3::new(0.2, -0.1, 0.3);
    let mut solver = FluidSolver::new(m.clone(), params, BoundaryConditions::new()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let old = random_state(m.num_nodes(), &mut rng, 0.0);
    let cur = random_state(m.num_nodes(), &mut rng, 0.0);
    let dt = 0.05;
    let (k, _) = solver.assemble_system(&cur, &old, dt, None).unwrap();
    let n = m.num_nodes();
    let h = 1e-6;
    for _ in 0..40 {
        let dof = rng.random_range(0..4 * n);
        let perturb = |s: &FluidState, d: f64| {
            let mut s = s.clone();
            if dof % 4 == 3 {
                s.p[dof / 4] += d;
            } else {
                s.v[3 * (dof / 4) + dof % 4] += d;
            }
            s
        };
        let (_, rp) = solver.assemble_system(&perturb(&cur, h), &old, dt, None).unwrap();
        let (_, rm) = solver.assemble_system(&perturb(&cur, -h), &old, dt, None).unwrap();
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let col: Vec<f64> = (0..4 * n).map(|r| k.get(r, dof)).collect();
        let diff = fd.iter().zip(&col).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = col.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(
            diff <= 1e-6 * scale,
            "column {dof}: |fd - K| = {diff:e}, |K| = {scale:e}"
        );
    }
}

#[test]
fn couette_field_leaves_interior_rows_at_zero() {
    let m = mesh([1.0; 3], [3, 3, 3]);
    let mut solver = FluidSolver::new(m.clone(), FluidParams::new(1.0, 0.1), BoundaryConditions::new()).unwrap();
    let mut s = FluidState::zeros(m.num_nodes());
    for (n, x) in m.nodes().iter().enumerate() {
        s.v[3 * n] = x.y;
    }
    let (_, r) = solver.assemble_system(&s, &s, 0.01, None).unwrap();
    for (n, x) in m.nodes().iter().enumerate() {
        let interior = (0..3).all(|k| x[k] > 1e-12 && x[k] < 1.0 - 1e-12);
        if interior {
            for c in 0..4 {
                assert!(r[4 * n + c].abs() < 1e-14, "node {n} comp {c}: {:e}", r[4 * n + c]);
            }
        }
    }
}

fn inflow_bcs(f: TimeFunction) -> BoundaryConditions {
    BoundaryConditions::new()
        .dirichlet("x_min", [true; 3], Vec3::new(1.0, 0.0, 0.0), f)
        .dirichlet(
            "y_min",
            [false, true, false],
            Vec3::zeros(),
            TimeFunction::Constant(1.0),
        )
        .dirichlet(
            "y_max",
            [false, true, false],
            Vec3::zeros(),
            TimeFunction::Constant(1.0),
        )
        .dirichlet(
            "z_min",
            [false, false, true],
            Vec3::zeros(),
            TimeFunction::Constant(1.0),
        )
        .dirichlet(
            "z_max",
            [false, false, true],
            Vec3::zeros(),
            TimeFunction::Constant(1.0),
        )
        .neumann("x_max", Vec3::zeros(), TimeFunction::Constant(1.0))
}

#[test]
fn zero_inflow_keeps_zero_state() {
    let m = mesh([3.0, 1.0, 1.0], [6, 2, 2]);
    let mut solver = FluidSolver::new(
        m.clone(),
        FluidParams::new(1.0, 0.004),
        inflow_bcs(TimeFunction::Constant(0.0)),
    )
    .unwrap();
    assert!(!solver.pressure_pinned());
    let mut s = solver.initial_state();
    for _ in 0..10 {
        s = solver.step(&s, 1e-3, None).unwrap().0;
        assert!(s.v.iter().chain(&s.p).all(|&v| v == 0.0));
    }
}

#[test]
fn dirichlet_values_are_exact_after_solve() {
    let m = mesh([3.0, 1.0, 1.0], [6, 2, 2]);
    let f = TimeFunction::CosineRamp { t_ramp: 0.1 };
    let mut solver = FluidSolver::new(m.clone(), FluidParams::new(1.0, 0.004), inflow_bcs(f)).unwrap();
    let mut s = solver.initial_state();
    for _ in 0..5 {
        s = solver.step(&s, 1e-2, None).unwrap().0;
        let expected = 1.0 * f.value(s.t);
        for n in m.patch_nodes("x_min").unwrap() {
            assert_eq!(s.v[3 * n], expected);
            assert_eq!(s.v[3 * n + 1], 0.0);
        }
        for n in m.patch_nodes("y_max").unwrap() {
            if !m.patch_nodes("x_min").unwrap().contains(&n) {
                assert_eq!(s.v[3 * n + 1], 0.0);
            }
        }
    }
}

#[test]
fn pseudo_one_dimensional_channel_follows_inflow() {
    // channel along z with every transverse velocity DoF prescribed to zero
    let m = Arc::new(
        build_box_mesh(
            [1.0, 1.0, 3.0],
            [2, 2, 6],
            &PatchSpec::new()
                .with("inlet", &[BoxFace::ZMin])
                .with("outlet", &[BoxFace::ZMax])
                .with("walls", &[BoxFace::XMin, BoxFace::XMax, BoxFace::YMin, BoxFace::YMax]),
        )
        .unwrap(),
    );
    let f = TimeFunction::CosineWave { period: 0.2 };
    let mut bcs = BoundaryConditions::new()
        .dirichlet("inlet", [true; 3], Vec3::new(0.0, 0.0, 1.0), f)
        .neumann("outlet", Vec3::zeros(), TimeFunction::Constant(1.0));
    for p in ["walls", "outlet"] {
        bcs = bcs.dirichlet(p, [true, true, false], Vec3::zeros(), TimeFunction::Constant(1.0));
    }
    let mut params = FluidParams::new(1.0, 0.004);
    params.theta = 1.0;
    let mut solver = FluidSolver::new(m.clone(), params, bcs).unwrap();
    // interior transverse DoFs are free; constrain them through the walls only
    let mut s = solver.initial_state();
    for _ in 0..20 {
        s = solver.step(&s, 0.01, None).unwrap().0;
        let vin = f.value(s.t);
        for n in 0..m.num_nodes() {
            assert!(
                (s.v[3 * n + 2] - vin).abs() < 1e-8,
                "t={} node {n}: {} vs {vin}",
                s.t,
                s.v[3 * n + 2]
            );
        }
    }
}

#[test]
fn poiseuille_profile_within_one_percent() {
    let (err, vmax) = poiseuille([16, 8, 8]);
    assert!((vmax - 1.0).abs() < 0.01, "v_max = {vmax}");
    assert!(err < 0.05, "relative L2 error {err}");
}

#[test]
fn poiseuille_error_decreases_with_refinement() {
    let errors: Vec<f64> = [[8, 4, 4], [16, 8, 8], [32, 16, 16]]
        .into_iter()
        .map(|c| poiseuille(c).0)
        .collect();
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}

/// Steady channel between no-slip walls at y = 0 and y = 1, driven by a body
/// force chosen so the analytic centerline speed is 1. Returns the relative L2
/// error against `u = 4 y (1 - y)` and the sampled centerline speed.
fn poiseuille(cells: [usize; 3]) -> (f64, f64) {
    let m = mesh([2.0, 1.0, 1.0], cells);
    let gamma = 0.1;
    let mut params = FluidParams::new(1.0, gamma);
    params.theta = 1.0;
    params.body_force = Vec3::new(8.0 * gamma, 0.0, 0.0);
    let one = TimeFunction::Constant(1.0);
    let bcs = BoundaryConditions::new()
        .no_slip("y_min")
        .no_slip("y_max")
        .dirichlet("z_min", [false, false, true], Vec3::zeros(), one)
        .dirichlet("z_max", [false, false, true], Vec3::zeros(), one)
        .dirichlet("x_min", [false, true, true], Vec3::zeros(), one)
        .dirichlet("x_max", [false, true, true], Vec3::zeros(), one)
        .neumann("x_min", Vec3::zeros(), one)
        .neumann("x_max", Vec3::zeros(), one);
    let mut solver = FluidSolver::new(m.clone(), params, bcs).unwrap();
    let mut s = solver.initial_state();
    for _ in 0..3 {
        s = solver.step(&s, 1e3, None).unwrap().0;
    }
    let exact = |x: &Vec3| 4.0 * x.y * (1.0 - x.y);
    let (mut num, mut den) = (0.0, 0.0);
    for (n, x) in m.nodes().iter().enumerate() {
        num += (s.v[3 * n] - exact(x)).powi(2) + s.v[3 * n + 1].powi(2) + s.v[3 * n + 2].powi(2);
        den += exact(x).powi(2);
    }
    let vmax = s.sample(&m, &Vec3::new(1.0, 0.5, 0.5)).unwrap().x;
    ((num / den).sqrt(), vmax)
}

#[test]
fn divergence_norm_of_trivial_fields() {
    let m = mesh([1.0, 2.0, 0.5], [3, 2, 4]);
    let mut s = FluidState::zeros(m.num_nodes());
    assert_eq!(discrete_divergence_norm(&m, &s), 0.0);
    for n in 0..m.num_nodes() {
        s.v[3 * n] = 1.0;
    }
    assert!(discrete_divergence_norm(&m, &s) < 1e-12);
}

#[test]
fn divergence_norm_matches_dense_quadrature() {
    let (dims, cells) = ([1.0, 2.0, 0.5], [3, 2, 2]);
    let m = mesh(dims, cells);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = random_state(m.num_nodes(), &mut rng, 0.0);
    // independent evaluation on the structured grid: local coordinates in
    // [0,1]^3, tensor-product linear basis, 8-point Gauss per direction
    let h = [0, 1, 2].map(|k| dims[k] / cells[k] as f64);
    let rule = fbi_core::quadrature::GaussRule::new(8);
    let node = |i: usize, j: usize, k: usize| i + (cells[0] + 1) * (j + (cells[1] + 1) * k);
    let mut total = 0.0;
    for ek in 0..cells[2] {
        for ej in 0..cells[1] {
            for ei in 0..cells[0] {
                for (x, wx) in rule.on_interval(0.0, 1.0) {
                    for (y, wy) in rule.on_interval(0.0, 1.0) {
                        for (z, wz) in rule.on_interval(0.0, 1.0) {
                            let mut div = 0.0;
                            for (di, dj, dk) in (0..8).map(|b| (b & 1, (b >> 1) & 1, b >> 2)) {
                                let lx = if di == 1 { x } else { 1.0 - x };
                                let ly = if dj == 1 { y } else { 1.0 - y };
                                let lz = if dk == 1 { z } else { 1.0 - z };
                                let sx = if di == 1 { 1.0 } else { -1.0 };
                                let sy = if dj == 1 { 1.0 } else { -1.0 };
                                let sz = if dk == 1 { 1.0 } else { -1.0 };
                                let n = node(ei + di, ej + dj, ek + dk);
                                div += s.v[3 * n] * sx * ly * lz / h[0]
                                    + s.v[3 * n + 1] * lx * sy * lz / h[1]
                                    + s.v[3 * n + 2] * lx * ly * sz / h[2];
                            }
                            total += div * div * wx * wy * wz * h[0] * h[1] * h[2];
                        }
                    }
                }
            }
        }
    }
    let got = discrete_divergence_norm(&m, &s);
    assert!(
        (got - total.sqrt()).abs() < 1e-12 * total.sqrt(),
        "{got} vs {}",
        total.sqrt()
    );
}
