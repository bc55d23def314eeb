//! Stabilized equal-order Q1/Q1 incompressible Navier-Stokes solver with
//! one-step-theta time integration.

mod assembly;
mod output;
mod solver;

pub use output::{write_fluid_vtk, ProbeWriter};
pub use solver::{discrete_divergence_norm, FluidCoupling, FluidSolver, FluidStepInfo};

use crate::error::{FbiError, Result};
use crate::mesh::{hex, FluidMesh, LocalCoords};
use crate::time_function::TimeFunction;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct FluidParams {
    pub density: f64,
    /// Dynamic viscosity.
    pub viscosity: f64,
    pub theta: f64,
    pub body_force: Vec3,
    /// Inverse-estimate constant in the stabilization parameter.
    pub c_inv: f64,
    /// Multiplier on the grad-div parameter.
    pub grad_div_scale: f64,
    /// Galerkin-only assembly when false.
    pub stabilization: bool,
    /// Absolute infinity-norm tolerance on the Newton residual.
    pub newton_tol: f64,
    pub newton_max: usize,
}

impl FluidParams {
    pub fn new(density: f64, viscosity: f64) -> Self {
        FluidParams {
            density,
            viscosity,
            theta: 0.5,
            body_force: Vec3::zeros(),
            c_inv: 36.0,
            grad_div_scale: 1.0,
            stabilization: true,
            newton_tol: 1e-8,
            newton_max: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.density > 0.0) {
            errors.push(format!("fluid.density must be positive, got {}", self.density));
        }
        if !(self.viscosity > 0.0) {
            errors.push(format!("fluid.viscosity must be positive, got {}", self.viscosity));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            errors.push(format!("fluid.theta must lie in (0, 1], got {}", self.theta));
        }
        if !(self.c_inv > 0.0) || !(self.grad_div_scale >= 0.0) {
            errors.push("fluid.c_inv must be positive and fluid.grad_div_scale non-negative".into());
        }
        if !(self.newton_tol > 0.0) || self.newton_max == 0 {
            errors.push("fluid.newton_tol and fluid.newton_max must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    /// Prescribes the selected velocity components to `value * f(t)`.
    Dirichlet { components: [bool; 3], value: Vec3 },
    /// Traction `traction * f(t)` on the patch.
    Neumann { traction: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcRecord {
    pub patch: String,
    pub kind: BcKind,
    pub time_function: TimeFunction,
}

/// Boundary condition records. Where Dirichlet records overlap (shared edges),
/// the record listed first owns the DoF.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConditions {
    pub records: Vec<BcRecord>,
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dirichlet(mut self, patch: &str, components: [bool; 3], value: Vec3, f: TimeFunction) -> Self {
        self.records.push(BcRecord {
            patch: patch.into(),
            kind: BcKind::Dirichlet { components, value },
            time_function: f,
        });
        self
    }

    pub fn no_slip(self, patch: &str) -> Self {
        self.dirichlet(patch, [true; 3], Vec3::zeros(), TimeFunction::Constant(1.0))
    }

    pub fn neumann(mut self, patch: &str, traction: Vec3, f: TimeFunction) -> Self {
        self.records.push(BcRecord {
            patch: patch.into(),
            kind: BcKind::Neumann { traction },
            time_function: f,
        });
        self
    }

    pub fn has_neumann(&self) -> bool {
        self.records.iter().any(|r| matches!(r.kind, BcKind::Neumann { .. }))
    }

    /// Checks that every referenced patch exists in `mesh`.
    pub fn validate(&self, mesh: &FluidMesh) -> Result<()> {
        let errors: Vec<String> = self
            .records
            .iter()
            .filter(|r| mesh.patch(&r.patch).is_none())
            .map(|r| format!("boundary condition references unknown patch '{}'", r.patch))
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }
}

/// Nodal velocity (three per node) and pressure (one per node).
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl FluidState {
    pub fn zeros(num_nodes: usize) -> Self {
        FluidState {
            v: vec![0.0; 3 * num_nodes],
            p: vec![0.0; num_nodes],
            t: 0.0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.p.len()
    }

    pub fn node_velocity(&self, n: usize) -> Vec3 {
        Vec3::new(self.v[3 * n], self.v[3 * n + 1], self.v[3 * n + 2])
    }

    /// Interpolated velocity at a located point.
    pub fn velocity_at(&self, mesh: &FluidMesh, loc: &LocalCoords) -> Vec3 {
        let n = hex::shape(&loc.xi);
        mesh.elements()[loc.element]
            .iter()
            .zip(n)
            .fold(Vec3::zeros(), |acc, (&node, na)| acc + self.node_velocity(node) * na)
    }

    /// Interpolated velocity at a physical point, or `None` outside the mesh.
    pub fn sample(&self, mesh: &FluidMesh, x: &Vec3) -> Option<Vec3> {
        mesh.locate_point(x, None).map(|loc| self.velocity_at(mesh, &loc))
    }

    pub(crate) fn pack(&self) -> Vec<f64> {
        let n = self.num_nodes();
        let mut x = vec![0.0; 4 * n];
        for a in 0..n {
            x[4 * a..4 * a + 3].copy_from_slice(&self.v[3 * a..3 * a + 3]);
            x[4 * a + 3] = self.p[a];
        }
        x
    }

    pub(crate) fn unpack(x: &[f64], t: f64) -> Self {
        let n = x.len() / 4;
        let mut s = FluidState::zeros(n);
        for a in 0..n {
            s.v[3 * a..3 * a + 3].copy_from_slice(&x[4 * a..4 * a + 3]);
            s.p[a] = x[4 * a + 3];
        }
        s.t = t;
        s
    }
}
