//! C interface to the fluid-beam interaction simulator.
//!
//! Every fallible function returns an [`FbiStatus`]; on failure the message
//! is kept per thread and can be read with [`fbi_last_error_message`].
//! Simulations are opaque handles created by [`fbi_simulation_new`] and
//! released with [`fbi_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fbi_core::config::parse_config;
use fbi_core::driver::{Simulation, StepReport};
use fbi_core::{FbiError, Vec3};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Element = 4,
    Convergence = 5,
    LinearSolver = 6,
    Coupling = 7,
    MeshFile = 8,
    Io = 9,
    Finished = 10,
    BufferTooSmall = 11,
    OutsideMesh = 12,
    Panic = 13,
}

/// Diagnostics of one time step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FbiStepReport {
    pub time: f64,
    pub outer_iters: usize,
    pub violation_unscaled: f64,
    pub violation_scaled: f64,
    pub f_f_norm: f64,
    pub f_b_norm: f64,
    pub omega_last: f64,
    pub fluid_newton: usize,
    pub beam_newton: usize,
    pub slip_max: f64,
}

impl From<&StepReport> for FbiStepReport {
    fn from(r: &StepReport) -> Self {
        FbiStepReport {
            time: r.time,
            outer_iters: r.outer_iters,
            violation_unscaled: r.violation_unscaled,
            violation_scaled: r.violation_scaled,
            f_f_norm: r.f_f_norm,
            f_b_norm: r.f_b_norm,
            omega_last: r.omega_last(),
            fluid_newton: r.fluid_newton,
            beam_newton: r.beam_newton,
            slip_max: r.slip_max,
        }
    }
}

/// Opaque simulation handle.
pub struct FbiSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &FbiError) -> FbiStatus {
    match e {
        FbiError::Config(_) | FbiError::Validation(_) => FbiStatus::Config,
        FbiError::Element { .. } | FbiError::SingularBeam { .. } => FbiStatus::Element,
        FbiError::NoConvergence { .. } => FbiStatus::Convergence,
        FbiError::LinearSolver(_) => FbiStatus::LinearSolver,
        FbiError::Coupling(_) => FbiStatus::Coupling,
        FbiError::MeshFile { .. } => FbiStatus::MeshFile,
        FbiError::Io(_) => FbiStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (FbiStatus, String)>) -> FbiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FbiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {msg}"));
            FbiStatus::Panic
        }
    }
}

fn fail(e: FbiError) -> (FbiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FbiStatus, String) {
    (FbiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FbiStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FbiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(p: *const FbiSimulation) -> Result<&'a FbiSimulation, (FbiStatus, String)> {
    p.as_ref().ok_or_else(|| null("simulation handle"))
}

unsafe fn handle_mut<'a>(p: *mut FbiSimulation) -> Result<&'a mut FbiSimulation, (FbiStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation handle"))
}

/// Copies `values` into `buf` of capacity `len`.
unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<(), (FbiStatus, String)> {
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err((
            FbiStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn fbi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a simulation from a config file path or preset name plus
/// `n_overrides` `key=value` strings.
///
/// # Safety
/// `config` must be a NUL-terminated string, `overrides` an array of
/// `n_overrides` NUL-terminated strings (may be null when `n_overrides` is 0),
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_new(
    config: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut FbiSimulation,
) -> FbiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle pointer"));
        }
        *out = ptr::null_mut();
        let source = str_arg(config, "config")?;
        let mut ovs = Vec::with_capacity(n_overrides);
        if n_overrides > 0 {
            if overrides.is_null() {
                return Err(null("overrides"));
            }
            for k in 0..n_overrides {
                ovs.push(str_arg(*overrides.add(k), "override")?.to_string());
            }
        }
        let cfg = parse_config(source, &ovs).map_err(fail)?;
        let sim = Simulation::new(cfg.setup().map_err(fail)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(FbiSimulation { sim }));
        Ok(())
    })
}

/// Releases a simulation; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`fbi_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_free(sim: *mut FbiSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one time step; `report` may be null.
///
/// # Safety
/// `sim` must be a live handle, `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_step(sim: *mut FbiSimulation, report: *mut FbiStepReport) -> FbiStatus {
    guard(|| {
        let h = handle_mut(sim)?;
        if h.sim.is_finished() {
            return Err((FbiStatus::Finished, "simulation already reached time.t_end".into()));
        }
        let r = h.sim.step().map_err(fail)?;
        if let Some(out) = report.as_mut() {
            *out = (&r).into();
        }
        Ok(())
    })
}

/// Runs the remaining steps; the last step's report goes to `report` if non-null.
///
/// # Safety
/// `sim` must be a live handle, `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_run(sim: *mut FbiSimulation, report: *mut FbiStepReport) -> FbiStatus {
    guard(|| {
        let h = handle_mut(sim)?;
        let reports = h.sim.run(|_, _| Ok(())).map_err(fail)?;
        if let (Some(out), Some(last)) = (report.as_mut(), reports.last()) {
            *out = last.into();
        }
        Ok(())
    })
}

/// Current simulation time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_time(sim: *const FbiSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |h| h.sim.time())
}

/// Steps taken so far (0 for a null handle).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_steps_done(sim: *const FbiSimulation) -> usize {
    sim.as_ref().map_or(0, |h| h.sim.steps_done())
}

/// Total number of steps to `time.t_end` (0 for a null handle).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_num_steps(sim: *const FbiSimulation) -> usize {
    sim.as_ref().map_or(0, |h| h.sim.num_steps())
}

/// Number of beam nodes (0 for a null handle).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_num_beam_nodes(sim: *const FbiSimulation) -> usize {
    sim.as_ref().map_or(0, |h| h.sim.beam_mesh().num_nodes())
}

/// Number of fluid mesh nodes (0 for a null handle).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_num_fluid_nodes(sim: *const FbiSimulation) -> usize {
    sim.as_ref().map_or(0, |h| h.sim.fluid_mesh().num_nodes())
}

fn node_vectors(n: usize, f: impl Fn(usize) -> Vec3) -> Vec<f64> {
    (0..n).flat_map(|i| f(i).iter().copied().collect::<Vec<_>>()).collect()
}

/// Writes the beam node positions as `x0 y0 z0 x1 ...` into `buf` (capacity `len`, at least 3 per node).
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_beam_positions(
    sim: *const FbiSimulation,
    buf: *mut f64,
    len: usize,
) -> FbiStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        let v = node_vectors(s.beam_mesh().num_nodes(), |n| s.beam_state().node_position(n));
        copy_out(&v, buf, len)
    })
}

/// Writes the beam node velocities, laid out like [`fbi_simulation_beam_positions`].
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_beam_velocities(
    sim: *const FbiSimulation,
    buf: *mut f64,
    len: usize,
) -> FbiStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        let v = node_vectors(s.beam_mesh().num_nodes(), |n| s.beam_state().node_velocity(n));
        copy_out(&v, buf, len)
    })
}

/// Writes the fluid node velocities, 3 per node in node order.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_fluid_velocities(
    sim: *const FbiSimulation,
    buf: *mut f64,
    len: usize,
) -> FbiStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        copy_out(&s.fluid_state().v, buf, len)
    })
}

/// Samples the fluid velocity at point `x` (3 doubles) into `out` (3 doubles).
///
/// # Safety
/// `sim` must be a live handle, `x` and `out` valid for 3 doubles each.
#[no_mangle]
pub unsafe extern "C" fn fbi_simulation_sample_velocity(
    sim: *const FbiSimulation,
    x: *const f64,
    out: *mut f64,
) -> FbiStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        if x.is_null() {
            return Err(null("point"));
        }
        let p = Vec3::from_column_slice(std::slice::from_raw_parts(x, 3));
        let v = s.fluid_state().sample(s.fluid_mesh(), &p).ok_or_else(|| {
            (
                FbiStatus::OutsideMesh,
                format!("point ({}, {}, {}) lies outside the fluid mesh", p.x, p.y, p.z),
            )
        })?;
        copy_out(v.as_slice(), out, 3)
    })
}
