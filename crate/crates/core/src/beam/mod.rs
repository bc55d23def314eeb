//! Torsion-free geometrically exact beam with a cubic Hermite centerline.

mod element;
pub mod hermite;
mod output;
mod rigid;
mod solve;

pub use element::{assemble_tf_residual, internal_force, mass_matrix, TOL_SINGULAR};
pub use output::write_beam_vtk;
pub use rigid::{prescribe_rigid_motion, RigidMotion};
pub use solve::{clamped_dofs, solve_static, BeamIntegrator, GeneralizedAlpha, StaticOptions};

use nalgebra::DVector;

use crate::error::{FbiError, Result};
use crate::Vec3;

/// Quadrature points per element for stiffness, mass and loads.
pub const BEAM_GAUSS_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamMesh {
    positions: Vec<Vec3>,
    tangents: Vec<Vec3>,
    elements: Vec<[usize; 2]>,
    lengths: Vec<f64>,
}

impl BeamMesh {
    /// Nodes with reference positions and tangents; tangents are normalized.
    pub fn new(positions: Vec<Vec3>, tangents: Vec<Vec3>, elements: Vec<[usize; 2]>) -> Result<Self> {
        if positions.len() != tangents.len() {
            return Err(FbiError::Config("beam: positions and tangents differ in length".into()));
        }
        if elements.is_empty() {
            return Err(FbiError::Config("beam: no elements".into()));
        }
        let mut unit = Vec::with_capacity(tangents.len());
        for (i, t) in tangents.iter().enumerate() {
            let n = t.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(FbiError::Config(format!("beam node {i}: zero reference tangent")));
            }
            unit.push(t / n);
        }
        let mut lengths = Vec::with_capacity(elements.len());
        for (e, &[a, b]) in elements.iter().enumerate() {
            if a >= positions.len() || b >= positions.len() || a == b {
                return Err(FbiError::Element {
                    element: e,
                    message: "invalid beam connectivity".into(),
                });
            }
            let l = arc_length(&positions[a], &unit[a], &positions[b], &unit[b]);
            if !(l > 0.0) {
                return Err(FbiError::Element {
                    element: e,
                    message: "beam element has zero length".into(),
                });
            }
            lengths.push(l);
        }
        Ok(BeamMesh {
            positions,
            tangents: unit,
            elements,
            lengths,
        })
    }

    /// Straight beam from `start` to `end` split into `n` equal elements.
    pub fn straight(start: Vec3, end: Vec3, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FbiError::Config("beam.elements must be at least 1".into()));
        }
        let t = end - start;
        if !(t.norm() > 0.0) {
            return Err(FbiError::Config("beam.start and beam.end coincide".into()));
        }
        let positions = (0..=n).map(|i| start + t * (i as f64 / n as f64)).collect();
        let tangents = vec![t; n + 1];
        let elements = (0..n).map(|i| [i, i + 1]).collect();
        BeamMesh::new(positions, tangents, elements)
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_dofs(&self) -> usize {
        6 * self.positions.len()
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn tangents(&self) -> &[Vec3] {
        &self.tangents
    }

    /// Reference arc length of element `e`.
    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Global DoFs of element `e` in block order `[d1, t1, d2, t2]`.
    pub fn element_dofs(&self, e: usize) -> [usize; 12] {
        let [a, b] = self.elements[e];
        let mut dofs = [0; 12];
        for c in 0..6 {
            dofs[c] = 6 * a + c;
            dofs[6 + c] = 6 * b + c;
        }
        dofs
    }

    pub fn reference_dofs(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_dofs()];
        for (i, (x, t)) in self.positions.iter().zip(&self.tangents).enumerate() {
            d[6 * i..6 * i + 3].copy_from_slice(x.as_slice());
            d[6 * i + 3..6 * i + 6].copy_from_slice(t.as_slice());
        }
        d
    }

    pub fn reference_state(&self) -> BeamState {
        let n = self.num_dofs();
        BeamState {
            d: self.reference_dofs(),
            v: vec![0.0; n],
            a: vec![0.0; n],
            t: 0.0,
        }
    }
}

/// Arc length of the Hermite curve whose tangents are scaled by that same length.
fn arc_length(x1: &Vec3, t1: &Vec3, x2: &Vec3, t2: &Vec3) -> f64 {
    let rule = crate::quadrature::GaussRule::new(12);
    let mut l = (x2 - x1).norm();
    for _ in 0..100 {
        let mut next = 0.0;
        for (s, w) in rule.on_interval(0.0, l) {
            let h = hermite::shape(s, l);
            next += (x1 * h.d1[0] + t1 * h.d1[1] + x2 * h.d1[2] + t2 * h.d1[3]).norm() * w;
        }
        if (next - l).abs() <= 1e-15 * l {
            return next;
        }
        l = next;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamMaterial {
    pub density: f64,
    pub area: f64,
    pub ea: f64,
    pub ei: f64,
}

impl BeamMaterial {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        for (name, v) in [
            ("beam.density", self.density),
            ("beam.area", self.area),
            ("beam.ea", self.ea),
            ("beam.ei", self.ei),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                errors.push(format!("{name} must be positive, got {v}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }

    /// Mass per unit length.
    pub fn line_density(&self) -> f64 {
        self.density * self.area
    }
}

/// External loads. Moments are conjugate to the tangent direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamLoads {
    /// Force per unit length.
    pub distributed_force: Vec3,
    /// Moment per unit length.
    pub distributed_moment: Vec3,
    pub point_forces: Vec<(usize, Vec3)>,
    pub point_moments: Vec<(usize, Vec3)>,
    /// Force vector in DoF space (e.g. the coupling force), added as an applied load.
    pub dof_force: Option<DVector<f64>>,
}

impl BeamLoads {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BeamLoads {
            distributed_force: self.distributed_force * factor,
            distributed_moment: self.distributed_moment * factor,
            point_forces: self.point_forces.iter().map(|(n, f)| (*n, f * factor)).collect(),
            point_moments: self.point_moments.iter().map(|(n, m)| (*n, m * factor)).collect(),
            dof_force: self.dof_force.as_ref().map(|f| f * factor),
        }
    }
}

/// Centerline DoFs (position and tangent per node) with their rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub t: f64,
}

impl BeamState {
    pub fn node_position(&self, n: usize) -> Vec3 {
        Vec3::new(self.d[6 * n], self.d[6 * n + 1], self.d[6 * n + 2])
    }

    pub fn node_velocity(&self, n: usize) -> Vec3 {
        Vec3::new(self.v[6 * n], self.v[6 * n + 1], self.v[6 * n + 2])
    }
}

fn interpolate(mesh: &BeamMesh, q: &[f64], e: usize, w: &[f64; 4]) -> Vec3 {
    let dofs = mesh.element_dofs(e);
    let mut r = Vec3::zeros();
    for k in 0..4 {
        for c in 0..3 {
            r[c] += w[k] * q[dofs[3 * k + c]];
        }
    }
    r
}

/// Position, tangent `r'` and curvature vector `r''` at arc parameter `s`.
///
/// # Panics
/// If `s` lies outside `[0, l]` by more than round-off.
pub fn eval_centerline(mesh: &BeamMesh, state: &BeamState, e: usize, s: f64) -> (Vec3, Vec3, Vec3) {
    let l = mesh.length(e);
    assert!(s >= -1e-12 * l && s <= l * (1.0 + 1e-12), "s = {s} outside [0, {l}]");
    let h = hermite::shape(s, l);
    (
        interpolate(mesh, &state.d, e, &h.n),
        interpolate(mesh, &state.d, e, &h.d1),
        interpolate(mesh, &state.d, e, &h.d2),
    )
}

/// Centerline velocity at arc parameter `s`.
pub fn eval_velocity(mesh: &BeamMesh, state: &BeamState, e: usize, s: f64) -> Vec3 {
    let h = hermite::shape(s, mesh.length(e));
    interpolate(mesh, &state.v, e, &h.n)
}
