use std::sync::Arc;

use rayon::prelude::*;

use super::assembly::{element_kernel, ElementGeometry, KernelParams, NDOF, NEN};
use super::{BcKind, BoundaryConditions, FluidParams, FluidState};
use crate::error::{FbiError, Result};
use crate::linalg::{norm_inf, CscMatrix, CsrMatrix, LinearSolver, SolverStats};
use crate::mesh::{hex, FluidMesh};
use crate::quadrature::GaussRule;

const CHUNK: usize = 256;

/// Linear contribution `matrix * v + offset` added to the velocity rows of
/// the momentum residual; `matrix` is also added to the Jacobian. Both live in
/// velocity-DoF numbering `3 * node + component`.
#[derive(Debug, Clone)]
pub struct FluidCoupling {
    pub matrix: CsrMatrix,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FluidStepInfo {
    pub newton_iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
enum Prescribed {
    Record { record: usize, component: usize },
    PressurePin,
}

/// Fluid system with its precomputed element geometry, sparsity pattern and
/// Dirichlet map.
pub struct FluidSolver {
    mesh: Arc<FluidMesh>,
    params: FluidParams,
    bcs: BoundaryConditions,
    geo: Vec<ElementGeometry>,
    matrix: CscMatrix,
    fixed: Vec<bool>,
    prescribed: Vec<(usize, Prescribed)>,
    /// Per Neumann record: `(node, integral of the face shape function)`.
    neumann: Vec<(usize, Vec<(usize, f64)>)>,
    pressure_pinned: bool,
    linear: LinearSolver,
}

#[inline]
pub(crate) fn velocity_to_system(dof: usize) -> usize {
    4 * (dof / 3) + dof % 3
}

impl FluidSolver {
    pub fn new(mesh: Arc<FluidMesh>, params: FluidParams, bcs: BoundaryConditions) -> Result<Self> {
        params.validate()?;
        bcs.validate(&mesh)?;
        let geo = (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| ElementGeometry::new(&mesh, e))
            .collect::<Result<Vec<_>>>()?;
        let matrix = build_pattern(&mesh);
        let n_dof = 4 * mesh.num_nodes();

        let mut fixed = vec![false; n_dof];
        let mut prescribed = Vec::new();
        let mut neumann = Vec::new();
        for (rid, rec) in bcs.records.iter().enumerate() {
            match &rec.kind {
                BcKind::Dirichlet { components, .. } => {
                    for node in mesh.patch_nodes(&rec.patch).unwrap_or_default() {
                        for (c, on) in components.iter().enumerate() {
                            let dof = 4 * node + c;
                            if *on && !fixed[dof] {
                                fixed[dof] = true;
                                prescribed.push((
                                    dof,
                                    Prescribed::Record {
                                        record: rid,
                                        component: c,
                                    },
                                ));
                            }
                        }
                    }
                }
                BcKind::Neumann { .. } => {
                    let patch = mesh.patch(&rec.patch).expect("validated patch");
                    neumann.push((rid, face_weights(&mesh, &patch.faces)));
                }
            }
        }
        let pressure_pinned = boundary_is_closed(&mesh, &fixed);
        if pressure_pinned {
            fixed[3] = true;
            prescribed.push((3, Prescribed::PressurePin));
        }
        Ok(FluidSolver {
            mesh,
            params,
            bcs,
            geo,
            matrix,
            fixed,
            prescribed,
            neumann,
            pressure_pinned,
            linear: LinearSolver::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<FluidMesh> {
        &self.mesh
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    /// True when the normal velocity is prescribed on the whole boundary, so
    /// one pressure DoF is fixed to remove the constant-pressure null space.
    pub fn pressure_pinned(&self) -> bool {
        self.pressure_pinned
    }

    pub fn linear_stats(&self) -> SolverStats {
        self.linear.stats()
    }

    /// Velocity DoFs (`3 * node + component`) that carry Dirichlet data.
    pub fn is_velocity_constrained(&self, dof: usize) -> bool {
        self.fixed[velocity_to_system(dof)]
    }

    /// Rest state at `t = 0` with Dirichlet data applied.
    pub fn initial_state(&self) -> FluidState {
        let mut x = vec![0.0; 4 * self.mesh.num_nodes()];
        self.apply_dirichlet(&mut x, 0.0);
        FluidState::unpack(&x, 0.0)
    }

    fn apply_dirichlet(&self, x: &mut [f64], t: f64) {
        for &(dof, p) in &self.prescribed {
            x[dof] = match p {
                Prescribed::PressurePin => 0.0,
                Prescribed::Record { record, component } => {
                    let rec = &self.bcs.records[record];
                    match &rec.kind {
                        BcKind::Dirichlet { value, .. } => value[component] * rec.time_function.value(t),
                        BcKind::Neumann { .. } => unreachable!(),
                    }
                }
            };
        }
    }

    fn kernel_params(&self, dt: f64) -> KernelParams {
        let p = &self.params;
        KernelParams {
            rho: p.density,
            mu: p.viscosity,
            theta: p.theta,
            dt,
            force: p.body_force,
            c_inv: p.c_inv,
            grad_div_scale: p.grad_div_scale,
            stabilization: p.stabilization,
        }
    }

    /// Assembles the residual for the iterate `x` (interleaved layout) and,
    /// when requested, the Jacobian into the internal matrix. Dirichlet rows
    /// are replaced by identity rows with zero residual.
    fn assemble(
        &mut self,
        x: &[f64],
        old: &FluidState,
        xo: &[f64],
        dt: f64,
        coupling: Option<&FluidCoupling>,
        with_matrix: bool,
    ) -> Result<Vec<f64>> {
        let kp = self.kernel_params(dt);
        let mesh = &self.mesh;
        let mut r = vec![0.0; x.len()];
        if with_matrix {
            self.matrix.clear();
        }
        let ne = mesh.num_elements();
        for start in (0..ne).step_by(CHUNK) {
            let end = (start + CHUNK).min(ne);
            let local: Vec<([f64; NDOF], Vec<f64>)> = (start..end)
                .into_par_iter()
                .map(|e| {
                    let conn = &mesh.elements()[e];
                    let mut xl = [0.0; NDOF];
                    let mut xol = [0.0; NDOF];
                    for a in 0..NEN {
                        for c in 0..4 {
                            xl[4 * a + c] = x[4 * conn[a] + c];
                            xol[4 * a + c] = xo[4 * conn[a] + c];
                        }
                    }
                    let mut re = [0.0; NDOF];
                    let mut ke = if with_matrix {
                        vec![0.0; NDOF * NDOF]
                    } else {
                        Vec::new()
                    };
                    element_kernel(
                        &self.geo[e],
                        &xl,
                        &xol,
                        &kp,
                        &mut re,
                        with_matrix.then_some(ke.as_mut_slice()),
                    );
                    (re, ke)
                })
                .collect();
            for (e, (re, ke)) in (start..end).zip(local) {
                let conn = &mesh.elements()[e];
                let mut dofs = [0usize; NDOF];
                for a in 0..NEN {
                    for c in 0..4 {
                        dofs[4 * a + c] = 4 * conn[a] + c;
                    }
                }
                for (k, &d) in dofs.iter().enumerate() {
                    r[d] += re[k];
                }
                if with_matrix {
                    self.matrix.add_block(&dofs, &ke);
                }
            }
        }

        let th = self.params.theta;
        for (rid, weights) in &self.neumann {
            let rec = &self.bcs.records[*rid];
            let BcKind::Neumann { traction } = rec.kind else {
                unreachable!()
            };
            let f = &rec.time_function;
            let h = traction * (th * f.value(old.t + dt) + (1.0 - th) * f.value(old.t));
            for &(node, w) in weights {
                for c in 0..3 {
                    r[4 * node + c] -= h[c] * w;
                }
            }
        }

        if let Some(cp) = coupling {
            for (row, col, v) in cp.matrix.iter() {
                let (sr, sc) = (velocity_to_system(row), velocity_to_system(col));
                r[sr] += v * x[sc];
                if with_matrix {
                    self.matrix.add(sr, sc, v);
                }
            }
            for (row, v) in cp.offset.iter().enumerate() {
                r[velocity_to_system(row)] += v;
            }
        }

        for (ri, &f) in r.iter_mut().zip(&self.fixed) {
            if f {
                *ri = 0.0;
            }
        }
        if with_matrix {
            self.matrix.set_identity_rows(&self.fixed);
        }
        if let Some(k) = r.iter().position(|v| !v.is_finite()) {
            return Err(FbiError::Element {
                element: self.element_of_dof(k),
                message: "non-finite fluid residual".into(),
            });
        }
        Ok(r)
    }

    fn element_of_dof(&self, dof: usize) -> usize {
        let node = dof / 4;
        self.mesh
            .elements()
            .iter()
            .position(|conn| conn.contains(&node))
            .unwrap_or(0)
    }

    /// Residual and Jacobian of the discrete system for the iterate `state`
    /// at `old.t + dt`. Dirichlet data is not imposed on `state` here.
    pub fn assemble_system(
        &mut self,
        state: &FluidState,
        old: &FluidState,
        dt: f64,
        coupling: Option<&FluidCoupling>,
    ) -> Result<(CscMatrix, Vec<f64>)> {
        let r = self.assemble(&state.pack(), old, &old.pack(), dt, coupling, true)?;
        Ok((self.matrix.clone(), r))
    }

    /// One time step from `old` to `old.t + dt` with Newton's method.
    pub fn step(
        &mut self,
        old: &FluidState,
        dt: f64,
        coupling: Option<&FluidCoupling>,
    ) -> Result<(FluidState, FluidStepInfo)> {
        if !(dt > 0.0) {
            return Err(FbiError::Config(format!("time step must be positive, got {dt}")));
        }
        let t_new = old.t + dt;
        let xo = old.pack();
        let mut x = xo.clone();
        self.apply_dirichlet(&mut x, t_new);
        let mut residual = f64::INFINITY;
        for it in 0..=self.params.newton_max {
            let r = self.assemble(&x, old, &xo, dt, coupling, true)?;
            residual = norm_inf(&r);
            if residual < self.params.newton_tol {
                return Ok((
                    FluidState::unpack(&x, t_new),
                    FluidStepInfo {
                        newton_iterations: it,
                        residual,
                    },
                ));
            }
            if it == self.params.newton_max {
                break;
            }
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = self.linear.solve(&self.matrix, &rhs)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            self.apply_dirichlet(&mut x, t_new);
        }
        Err(FbiError::NoConvergence {
            solver: "fluid Newton",
            iterations: self.params.newton_max,
            residual,
        })
    }
}

fn build_pattern(mesh: &FluidMesh) -> CscMatrix {
    let nn = mesh.num_nodes();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
    for conn in mesh.elements() {
        for &a in conn {
            adj[a].extend_from_slice(conn);
        }
    }
    let mut col_ptr = Vec::with_capacity(4 * nn + 1);
    let mut row_idx = Vec::new();
    col_ptr.push(0);
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
        for _ in 0..4 {
            for &a in list.iter() {
                row_idx.extend((0..4).map(|c| 4 * a + c));
            }
            col_ptr.push(row_idx.len());
        }
    }
    CscMatrix::from_compressed(4 * nn, col_ptr, row_idx)
}

/// `int_face N_a dA` for every node touched by `faces` (2x2 Gauss per face).
fn face_weights(mesh: &FluidMesh, faces: &[[usize; 4]]) -> Vec<(usize, f64)> {
    let rule = GaussRule::new(2);
    let mut acc = std::collections::BTreeMap::new();
    for f in faces {
        let x = f.map(|n| mesh.nodes()[n]);
        for (s, ws) in rule.points.iter().zip(&rule.weights) {
            for (t, wt) in rule.points.iter().zip(&rule.weights) {
                let n = [
                    0.25 * (1.0 - s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 + t),
                    0.25 * (1.0 - s) * (1.0 + t),
                ];
                let ds = (x[1] - x[0]) * (0.25 * (1.0 - t)) + (x[2] - x[3]) * (0.25 * (1.0 + t));
                let dt = (x[3] - x[0]) * (0.25 * (1.0 - s)) + (x[2] - x[1]) * (0.25 * (1.0 + s));
                let da = ds.cross(&dt).norm() * ws * wt;
                for (k, &node) in f.iter().enumerate() {
                    *acc.entry(node).or_insert(0.0) += n[k] * da;
                }
            }
        }
    }
    acc.into_iter().collect()
}

/// Whether every boundary face has its normal velocity fully prescribed.
fn boundary_is_closed(mesh: &FluidMesh, fixed: &[bool]) -> bool {
    mesh.patches().iter().flat_map(|p| &p.faces).all(|f| {
        let x = f.map(|n| mesh.nodes()[n]);
        let normal = (x[2] - x[0]).cross(&(x[3] - x[1]));
        let tol = 1e-8 * normal.norm();
        f.iter()
            .all(|&node| (0..3).all(|c| normal[c].abs() <= tol || fixed[4 * node + c]))
    })
}

/// `sqrt(int (div v)^2 dV)` with 3x3x3 Gauss quadrature per element.
pub fn discrete_divergence_norm(mesh: &FluidMesh, state: &FluidState) -> f64 {
    let rule = GaussRule::new(3);
    let pts = rule.cube();
    let mut total = 0.0;
    for (e, conn) in mesh.elements().iter().enumerate() {
        let coords = mesh.element_coords(e);
        for (xi, w) in &pts {
            let Some((g, det)) = hex::gradients(&coords, xi) else {
                continue;
            };
            let div: f64 = (0..NEN)
                .map(|a| (0..3).map(|i| state.v[3 * conn[a] + i] * g[a][i]).sum::<f64>())
                .sum();
            total += div * div * det * w;
        }
    }
    total.sqrt()
}
