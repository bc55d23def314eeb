use nalgebra::{DMatrix, DVector};

use super::{internal_force, mass_matrix, BeamLoads, BeamMaterial, BeamMesh, BeamState};
use crate::error::{FbiError, Result};

/// Newton and load-stepping controls for the static solver.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticOptions {
    pub load_steps: usize,
    pub max_halvings: usize,
    /// Absolute tolerance on the DoF increment norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StaticOptions {
    fn default() -> Self {
        StaticOptions {
            load_steps: 1,
            max_halvings: 10,
            tol: 1e-9,
            max_iter: 30,
        }
    }
}

/// DoFs held at their reference values.
pub fn clamped_dofs(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().flat_map(|&n| 6 * n..6 * n + 6).collect()
}

fn constrain(k: &mut DMatrix<f64>, r: &mut DVector<f64>, fixed: &[usize]) {
    for &i in fixed {
        k.row_mut(i).fill(0.0);
        k.column_mut(i).fill(0.0);
        k[(i, i)] = 1.0;
        r[i] = 0.0;
    }
}

fn linear_solve(k: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let x = k
        .lu()
        .solve(rhs)
        .ok_or_else(|| FbiError::LinearSolver("singular beam stiffness matrix".into()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(FbiError::LinearSolver("non-finite beam increment".into()))
    }
}

fn newton_static(
    mesh: &BeamMesh,
    material: &BeamMaterial,
    loads: &BeamLoads,
    fixed: &[usize],
    d: &mut DVector<f64>,
    opts: &StaticOptions,
) -> Result<usize> {
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (mut f, mut k) = internal_force(mesh, d.as_slice(), material, loads)?;
        constrain(&mut k, &mut f, fixed);
        let dx = linear_solve(k, &-f)?;
        *d += &dx;
        last = dx.norm();
        if last <= opts.tol {
            return Ok(it);
        }
    }
    Err(FbiError::NoConvergence {
        solver: "beam static Newton",
        iterations: opts.max_iter,
        residual: last,
    })
}

/// Static equilibrium under `loads` with the `fixed` DoFs held at their
/// reference values, using uniform load steps that are halved on failure.
pub fn solve_static(
    mesh: &BeamMesh,
    material: &BeamMaterial,
    loads: &BeamLoads,
    fixed: &[usize],
    opts: &StaticOptions,
) -> Result<BeamState> {
    material.validate()?;
    let mut d = DVector::from_vec(mesh.reference_dofs());
    let mut lambda = 0.0;
    let mut step = 1.0 / opts.load_steps.max(1) as f64;
    let mut halvings = 0;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let mut trial = d.clone();
        match newton_static(mesh, material, &loads.scaled(target), fixed, &mut trial, opts) {
            Ok(_) => {
                d = trial;
                lambda = target;
            }
            Err(e) => {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(e);
                }
                step *= 0.5;
            }
        }
    }
    let n = mesh.num_dofs();
    Ok(BeamState {
        d: d.as_slice().to_vec(),
        v: vec![0.0; n],
        a: vec![0.0; n],
        t: 0.0,
    })
}

/// Generalized-alpha parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedAlpha {
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GeneralizedAlpha {
    /// Second-order accurate member for spectral radius `rho_inf` in `[0, 1]`.
    pub fn from_rho_inf(rho_inf: f64) -> Self {
        let alpha_m = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0);
        let alpha_f = rho_inf / (rho_inf + 1.0);
        let gamma = 0.5 - alpha_m + alpha_f;
        GeneralizedAlpha {
            alpha_m,
            alpha_f,
            beta: 0.25 * (gamma + 0.5).powi(2),
            gamma,
        }
    }
}

/// Dynamic beam solver with a cached mass matrix.
#[derive(Debug, Clone)]
pub struct BeamIntegrator {
    mesh: BeamMesh,
    material: BeamMaterial,
    fixed: Vec<usize>,
    mass: DMatrix<f64>,
    pub scheme: GeneralizedAlpha,
    pub tol: f64,
    pub max_iter: usize,
}

impl BeamIntegrator {
    pub fn new(mesh: BeamMesh, material: BeamMaterial, fixed: Vec<usize>, rho_inf: f64) -> Result<Self> {
        material.validate()?;
        if let Some(&bad) = fixed.iter().find(|&&i| i >= mesh.num_dofs()) {
            return Err(FbiError::Config(format!("fixed beam DoF {bad} out of range")));
        }
        let mass = mass_matrix(&mesh, &material);
        Ok(BeamIntegrator {
            mesh,
            material,
            fixed,
            mass,
            scheme: GeneralizedAlpha::from_rho_inf(rho_inf),
            tol: 1e-9,
            max_iter: 30,
        })
    }

    pub fn mesh(&self) -> &BeamMesh {
        &self.mesh
    }

    pub fn material(&self) -> &BeamMaterial {
        &self.material
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed
    }

    /// Solves `M a = F_ext - F_int` for the accelerations of `state`.
    pub fn initial_acceleration(&self, state: &mut BeamState, loads: &BeamLoads) -> Result<()> {
        let (mut f, _) = internal_force(&self.mesh, &state.d, &self.material, loads)?;
        let mut m = self.mass.clone();
        constrain(&mut m, &mut f, &self.fixed);
        let a = linear_solve(m, &-f)?;
        state.a = a.as_slice().to_vec();
        for &i in &self.fixed {
            state.v[i] = 0.0;
        }
        Ok(())
    }

    /// Advances `old` by `dt`. `loads_old` and `loads_new` are the loads at the
    /// two ends of the step. Returns the new state and the Newton iteration count.
    pub fn step(
        &self,
        old: &BeamState,
        loads_old: &BeamLoads,
        loads_new: &BeamLoads,
        dt: f64,
    ) -> Result<(BeamState, usize)> {
        if !(dt > 0.0) {
            return Err(FbiError::Config(format!("time step must be positive, got {dt}")));
        }
        let GeneralizedAlpha {
            alpha_m,
            alpha_f,
            beta,
            gamma,
        } = self.scheme;
        let dn = DVector::from_column_slice(&old.d);
        let vn = DVector::from_column_slice(&old.v);
        let an = DVector::from_column_slice(&old.a);
        let (f_old, _) = internal_force(&self.mesh, &old.d, &self.material, loads_old)?;
        let pred = &dn + &vn * dt + &an * (dt * dt * (0.5 - beta));
        let accel = |d: &DVector<f64>| (d - &pred) / (beta * dt * dt);

        let mut d = &dn + &vn * dt;
        for &i in &self.fixed {
            d[i] = dn[i];
        }
        let mut last = f64::INFINITY;
        for it in 1..=self.max_iter {
            let a = accel(&d);
            let (f_new, k) = internal_force(&self.mesh, d.as_slice(), &self.material, loads_new)?;
            let mut r =
                &self.mass * (&a * (1.0 - alpha_m) + &an * alpha_m) + f_new * (1.0 - alpha_f) + &f_old * alpha_f;
            let mut j = &self.mass * ((1.0 - alpha_m) / (beta * dt * dt)) + k * (1.0 - alpha_f);
            constrain(&mut j, &mut r, &self.fixed);
            let dx = linear_solve(j, &-r)?;
            d += &dx;
            last = dx.norm();
            if last <= self.tol {
                let a = accel(&d);
                let mut v = &vn + (&an * (1.0 - gamma) + &a * gamma) * dt;
                let mut a = a;
                for &i in &self.fixed {
                    v[i] = 0.0;
                    a[i] = 0.0;
                }
                return Ok((
                    BeamState {
                        d: d.as_slice().to_vec(),
                        v: v.as_slice().to_vec(),
                        a: a.as_slice().to_vec(),
                        t: old.t + dt,
                    },
                    it,
                ));
            }
        }
        Err(FbiError::NoConvergence {
            solver: "beam dynamic Newton",
            iterations: self.max_iter,
            residual: last,
        })
    }
}
