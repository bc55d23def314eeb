//! Time loop of the two one-way coupling algorithms.

mod aitken;
mod report;

use std::sync::Arc;

use nalgebra::DVector;

pub use aitken::{aitken_update, Aitken, AitkenParams, AitkenStep};
pub use report::{
    fit_loglog_slope, write_step_csv, write_step_row, write_sweep_summary, StepReport, SweepEntry, STEP_CSV_HEADER,
};

use crate::beam::{prescribe_rigid_motion, BeamIntegrator, BeamLoads, BeamMaterial, BeamMesh, BeamState, RigidMotion};
use crate::coupling::{
    assemble_coupling, beam_penalty_force, constraint_violation, fluid_penalty_force, segment_beam_elements,
    violation_l2, CouplingMatrices, CouplingSegment, COUPLING_GAUSS_POINTS,
};
use crate::error::{FbiError, Result};
use crate::fluid::{BoundaryConditions, FluidCoupling, FluidParams, FluidSolver, FluidState};
use crate::linalg::norm2;
use crate::mesh::FluidMesh;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingVariant {
    /// Prescribed beam velocity weakly imposed on the fluid.
    BeamToFluid,
    /// Fluid velocity imposed on a light beam through the penalty force.
    FluidToBeam,
}

impl std::str::FromStr for CouplingVariant {
    type Err = FbiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam_to_fluid" => Ok(CouplingVariant::BeamToFluid),
            "fluid_to_beam" => Ok(CouplingVariant::FluidToBeam),
            _ => Err(FbiError::Config(format!(
                "unknown coupling variant '{s}' (expected beam_to_fluid or fluid_to_beam)"
            ))),
        }
    }
}

impl std::fmt::Display for CouplingVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CouplingVariant::BeamToFluid => "beam_to_fluid",
            CouplingVariant::FluidToBeam => "fluid_to_beam",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingAlgorithm {
    pub variant: CouplingVariant,
    pub epsilon: f64,
    pub aitken: AitkenParams,
    /// Relative tolerance on the force residual of the outer loop.
    pub tol_partition: f64,
    pub max_outer: usize,
    pub gauss_points: usize,
    /// Search inflation for candidate fluid elements; `None` uses `h_fluid`.
    pub search_radius: Option<f64>,
}

impl CouplingAlgorithm {
    pub fn new(variant: CouplingVariant, epsilon: f64) -> Self {
        CouplingAlgorithm {
            variant,
            epsilon,
            aitken: AitkenParams::default(),
            tol_partition: 1e-6,
            max_outer: 50,
            gauss_points: COUPLING_GAUSS_POINTS,
            search_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            errors.push(format!("coupling.epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.tol_partition > 0.0) {
            errors.push(format!(
                "coupling.tol_partition must be positive, got {}",
                self.tol_partition
            ));
        }
        if self.max_outer == 0 {
            errors.push("coupling.max_outer must be at least 1".into());
        }
        if self.gauss_points == 0 {
            errors.push("coupling.gauss_points must be at least 1".into());
        }
        if let Err(e) = self.aitken.validate() {
            errors.push(e.to_string().trim_start_matches("configuration error: ").to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamModel {
    /// Prescribed rigid motion of the reference configuration.
    Rigid(RigidMotion),
    Elastic {
        material: BeamMaterial,
        fixed_dofs: Vec<usize>,
        loads: BeamLoads,
        rho_inf: f64,
        /// Uniform initial velocity of all positional DoFs.
        initial_velocity: Vec3,
    },
}

/// Everything needed to start a coupled run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub fluid_mesh: Arc<FluidMesh>,
    pub fluid_params: FluidParams,
    pub bcs: BoundaryConditions,
    pub beam_mesh: BeamMesh,
    pub beam: BeamModel,
    pub algorithm: CouplingAlgorithm,
    pub dt: f64,
    pub t_end: f64,
}

/// A coupled simulation advanced one step at a time.
pub struct Simulation {
    algorithm: CouplingAlgorithm,
    beam_mesh: BeamMesh,
    beam_model: BeamModel,
    integrator: Option<BeamIntegrator>,
    fluid: FluidSolver,
    dt: f64,
    n_steps: usize,
    step: usize,
    fluid_state: FluidState,
    beam_state: BeamState,
    segments: Vec<CouplingSegment>,
    blocks: CouplingMatrices,
    /// Coupling force on the beam at the last converged step.
    beam_force: Vec<f64>,
    aitken: Aitken,
    segment_builds: usize,
    beam_solves: usize,
}

impl Simulation {
    pub fn new(setup: Setup) -> Result<Self> {
        let Setup {
            fluid_mesh,
            fluid_params,
            bcs,
            beam_mesh,
            beam,
            algorithm,
            dt,
            t_end,
        } = setup;
        algorithm.validate()?;
        if !(dt > 0.0) || !(t_end >= dt) {
            return Err(FbiError::Config(format!(
                "time.dt must be positive and time.t_end >= time.dt, got dt = {dt}, t_end = {t_end}"
            )));
        }
        let n_steps = (t_end / dt).round() as usize;
        let fluid = FluidSolver::new(fluid_mesh, fluid_params, bcs)?;
        let fluid_state = fluid.initial_state();

        let (integrator, beam_state) = match &beam {
            BeamModel::Rigid(motion) => (None, prescribe_rigid_motion(&beam_mesh, motion, 0.0)),
            BeamModel::Elastic {
                material,
                fixed_dofs,
                rho_inf,
                initial_velocity,
                ..
            } => {
                if !(0.0..=1.0).contains(rho_inf) {
                    return Err(FbiError::Config(format!(
                        "beam.rho_inf must lie in [0, 1], got {rho_inf}"
                    )));
                }
                let integ = BeamIntegrator::new(beam_mesh.clone(), material.clone(), fixed_dofs.clone(), *rho_inf)?;
                let mut state = beam_mesh.reference_state();
                for n in 0..beam_mesh.num_nodes() {
                    state.v[6 * n..6 * n + 3].copy_from_slice(initial_velocity.as_slice());
                }
                for &i in fixed_dofs {
                    state.v[i] = 0.0;
                }
                (Some(integ), state)
            }
        };
        let nb = beam_mesh.num_dofs();
        let aitken = Aitken::new(algorithm.aitken);
        let mut sim = Simulation {
            segments: Vec::new(),
            blocks: assemble_coupling(&[], &beam_mesh, fluid.mesh(), algorithm.epsilon),
            algorithm,
            beam_mesh,
            beam_model: beam,
            integrator,
            fluid,
            dt,
            n_steps,
            step: 0,
            fluid_state,
            beam_state,
            beam_force: vec![0.0; nb],
            aitken,
            segment_builds: 0,
            beam_solves: 0,
        };
        sim.rebuild_coupling()?;
        sim.initialize_beam()?;
        Ok(sim)
    }

    fn rebuild_coupling(&mut self) -> Result<()> {
        let state = self.beam_state.clone();
        let (segments, blocks) = self.couple(&state)?;
        self.segments = segments;
        self.blocks = blocks;
        Ok(())
    }

    fn couple(&mut self, state: &BeamState) -> Result<(Vec<CouplingSegment>, CouplingMatrices)> {
        let mesh = self.fluid.mesh();
        let radius = self.algorithm.search_radius.unwrap_or_else(|| mesh.h_fluid());
        let segments = segment_beam_elements(&self.beam_mesh, state, mesh, radius, self.algorithm.gauss_points)?;
        let blocks = assemble_coupling(&segments, &self.beam_mesh, mesh, self.algorithm.epsilon);
        self.segment_builds += 1;
        Ok((segments, blocks))
    }

    fn base_loads(&self) -> BeamLoads {
        match &self.beam_model {
            BeamModel::Elastic { loads, .. } => loads.clone(),
            BeamModel::Rigid(_) => BeamLoads::none(),
        }
    }

    fn loads_with_force(&self, force: &[f64]) -> BeamLoads {
        let mut loads = self.base_loads();
        let applied = DVector::from_iterator(force.len(), force.iter().map(|f| -f));
        loads.dof_force = Some(match loads.dof_force {
            Some(f) => f + applied,
            None => applied,
        });
        loads
    }

    fn initialize_beam(&mut self) -> Result<()> {
        let Some(integ) = &self.integrator else { return Ok(()) };
        let loads = if self.algorithm.variant == CouplingVariant::FluidToBeam {
            self.beam_force = beam_penalty_force(&self.blocks, &self.fluid_state.v, &self.beam_state.v);
            self.loads_with_force(&self.beam_force)
        } else {
            self.base_loads()
        };
        integ.initial_acceleration(&mut self.beam_state, &loads)
    }

    pub fn time(&self) -> f64 {
        self.fluid_state.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn num_steps(&self) -> usize {
        self.n_steps
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.n_steps
    }

    pub fn algorithm(&self) -> &CouplingAlgorithm {
        &self.algorithm
    }

    pub fn fluid_mesh(&self) -> &Arc<FluidMesh> {
        self.fluid.mesh()
    }

    pub fn fluid_solver(&self) -> &FluidSolver {
        &self.fluid
    }

    pub fn beam_mesh(&self) -> &BeamMesh {
        &self.beam_mesh
    }

    pub fn fluid_state(&self) -> &FluidState {
        &self.fluid_state
    }

    pub fn beam_state(&self) -> &BeamState {
        &self.beam_state
    }

    /// Replaces the fluid state (e.g. to start from a developed flow).
    pub fn set_fluid_state(&mut self, state: FluidState) -> Result<()> {
        if state.num_nodes() != self.fluid.mesh().num_nodes() {
            return Err(FbiError::Config("fluid state does not match the mesh".into()));
        }
        self.fluid_state = state;
        self.initialize_beam()
    }

    /// Replaces the beam state and rebuilds the coupling geometry.
    pub fn set_beam_state(&mut self, state: BeamState) -> Result<()> {
        if state.d.len() != self.beam_mesh.num_dofs() || state.v.len() != state.d.len() {
            return Err(FbiError::Config("beam state does not match the beam mesh".into()));
        }
        self.beam_state = state;
        self.rebuild_coupling()?;
        self.initialize_beam()
    }

    pub fn segments(&self) -> &[CouplingSegment] {
        &self.segments
    }

    /// Coupling blocks of the current geometry.
    pub fn coupling_matrices(&self) -> &CouplingMatrices {
        &self.blocks
    }

    /// Number of segmentations performed so far.
    pub fn segment_builds(&self) -> usize {
        self.segment_builds
    }

    /// Number of beam dynamics solves so far.
    pub fn beam_solves(&self) -> usize {
        self.beam_solves
    }

    /// Advances one time step with the configured algorithm.
    pub fn step(&mut self) -> Result<StepReport> {
        if self.is_finished() {
            return Err(FbiError::Config("simulation already reached time.t_end".into()));
        }
        let mut report = match self.algorithm.variant {
            CouplingVariant::BeamToFluid => self.step_beam_to_fluid()?,
            CouplingVariant::FluidToBeam => self.step_fluid_to_beam()?,
        };
        self.step += 1;
        // snap to the grid so repeated additions of dt do not drift
        let t = self.step as f64 * self.dt;
        self.fluid_state.t = t;
        self.beam_state.t = t;
        report.time = t;
        Ok(report)
    }

    /// Runs to the end, calling `observer` after every step.
    pub fn run(&mut self, mut observer: impl FnMut(&Simulation, &StepReport) -> Result<()>) -> Result<Vec<StepReport>> {
        let mut reports = Vec::with_capacity(self.n_steps - self.step);
        while !self.is_finished() {
            let r = self.step()?;
            observer(self, &r)?;
            reports.push(r);
        }
        Ok(reports)
    }

    fn advance_beam_alone(&mut self, t_new: f64) -> Result<(BeamState, usize)> {
        match (&self.beam_model, &self.integrator) {
            (BeamModel::Rigid(motion), _) => Ok((prescribe_rigid_motion(&self.beam_mesh, motion, t_new), 0)),
            (_, Some(integ)) => {
                let loads = self.base_loads();
                let out = integ.step(&self.beam_state, &loads, &loads, self.dt)?;
                self.beam_solves += 1;
                Ok(out)
            }
            _ => unreachable!("elastic beam without integrator"),
        }
    }

    fn step_beam_to_fluid(&mut self) -> Result<StepReport> {
        let theta = self.fluid.params().theta;
        let t_new = self.fluid_state.t + self.dt;
        let (beam_new, beam_newton) = self.advance_beam_alone(t_new)?;
        let (segments, blocks) = self.couple(&beam_new)?;

        let old_force = fluid_penalty_force(&self.blocks, &self.fluid_state.v, &self.beam_state.v);
        let offset: Vec<f64> = blocks
            .k_fb
            .mul_vec(&beam_new.v)
            .iter()
            .zip(&old_force)
            .map(|(kv, f_old)| -theta * kv + (1.0 - theta) * f_old)
            .collect();
        let coupling = FluidCoupling {
            matrix: blocks.k_ff.scaled(theta),
            offset,
        };
        let (fluid_new, info) = self.fluid.step(&self.fluid_state, self.dt, Some(&coupling))?;

        self.fluid_state = fluid_new;
        self.beam_state = beam_new;
        self.segments = segments;
        self.blocks = blocks;
        Ok(self.report(1, Vec::new(), info.newton_iterations, beam_newton))
    }

    fn step_fluid_to_beam(&mut self) -> Result<StepReport> {
        let integ = self
            .integrator
            .take()
            .ok_or_else(|| FbiError::Config("fluid_to_beam coupling needs an elastic beam".into()))?;
        let result = self.outer_loop(&integ);
        self.integrator = Some(integ);
        result
    }

    fn outer_loop(&mut self, integ: &BeamIntegrator) -> Result<StepReport> {
        let (fluid_new, info) = self.fluid.step(&self.fluid_state, self.dt, None)?;
        let v_f = &fluid_new.v;
        let loads_old = self.loads_with_force(&self.beam_force);

        // start from the force of the last converged geometry and beam velocity
        let mut relaxed = beam_penalty_force(&self.blocks, v_f, &self.beam_state.v);
        self.aitken.reset();
        let tol = self.algorithm.tol_partition;
        let mut beam_newton = 0;
        let mut last_residual = f64::INFINITY;
        for iter in 1..=self.algorithm.max_outer {
            let loads_new = self.loads_with_force(&relaxed);
            let (trial, newton) = integ.step(&self.beam_state, &loads_old, &loads_new, self.dt)?;
            self.beam_solves += 1;
            beam_newton += newton;
            let (segments, blocks) = self.couple(&trial)?;
            let f_new = beam_penalty_force(&blocks, v_f, &trial.v);
            let r_norm = f_new
                .iter()
                .zip(&relaxed)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            last_residual = r_norm;
            let converged = r_norm <= tol * norm2(&f_new) || violation_l2(&blocks, v_f, &trial.v) < tol;
            if converged || self.aitken.relax(&f_new, &mut relaxed) == AitkenStep::Converged {
                self.beam_force = relaxed;
                self.fluid_state = fluid_new;
                self.beam_state = trial;
                self.segments = segments;
                self.blocks = blocks;
                let history = self.aitken.history().to_vec();
                return Ok(self.report(iter, history, info.newton_iterations, beam_newton));
            }
        }
        Err(FbiError::NoConvergence {
            solver: "partitioned fluid-to-beam coupling",
            iterations: self.algorithm.max_outer,
            residual: last_residual,
        })
    }

    fn report(
        &self,
        outer_iters: usize,
        omega_history: Vec<f64>,
        fluid_newton: usize,
        beam_newton: usize,
    ) -> StepReport {
        let (v_f, v_b) = (&self.fluid_state.v, &self.beam_state.v);
        let f_f = fluid_penalty_force(&self.blocks, v_f, v_b);
        let f_b = beam_penalty_force(&self.blocks, v_f, v_b);
        StepReport {
            time: self.fluid_state.t,
            outer_iters,
            violation_unscaled: constraint_violation(&self.blocks, v_f, v_b),
            violation_scaled: violation_l2(&self.blocks, v_f, v_b),
            f_f_norm: norm2(&f_f),
            f_b_norm: norm2(&f_b),
            omega_history,
            fluid_newton,
            beam_newton,
            slip_max: self.slip_max(),
        }
    }

    fn slip_max(&self) -> f64 {
        let mesh = self.fluid.mesh();
        (0..self.beam_mesh.num_nodes())
            .filter_map(|n| {
                let vf = self.fluid_state.sample(mesh, &self.beam_state.node_position(n))?;
                Some((self.beam_state.node_velocity(n) - vf).norm())
            })
            .fold(0.0, f64::max)
    }
}
