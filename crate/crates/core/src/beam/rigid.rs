use nalgebra::Rotation3;

use super::{BeamMesh, BeamState};
use crate::time_function::TimeFunction;
use crate::Vec3;

/// Rigid motion `x(t) = x0 + R(omega S(t)) (X - x0) + c S(t)` where `S` is the
/// integral of the time function, so `omega f(t)` is the angular velocity and
/// `c f(t)` the translation velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub center: Vec3,
    pub angular_velocity: Vec3,
    pub velocity: Vec3,
    pub time_function: TimeFunction,
}

impl RigidMotion {
    pub fn at_rest() -> Self {
        RigidMotion {
            center: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            velocity: Vec3::zeros(),
            time_function: TimeFunction::Constant(0.0),
        }
    }
}

/// Beam DoFs, velocities and accelerations of the rigidly moved reference configuration.
pub fn prescribe_rigid_motion(mesh: &BeamMesh, motion: &RigidMotion, t: f64) -> BeamState {
    let f = &motion.time_function;
    let (s, rate, accel) = (f.integral(t), f.value(t), f.derivative(t));
    let rot = Rotation3::new(motion.angular_velocity * s);
    let w = motion.angular_velocity * rate;
    let w_dot = motion.angular_velocity * accel;
    let mut state = mesh.reference_state();
    state.t = t;
    for (n, (x, tan)) in mesh.positions().iter().zip(mesh.tangents()).enumerate() {
        let arm = rot * (x - motion.center);
        let pos = motion.center + arm + motion.velocity * s;
        let vel = w.cross(&arm) + motion.velocity * rate;
        let acc = w_dot.cross(&arm) + w.cross(&w.cross(&arm)) + motion.velocity * accel;
        let t_rot = rot * tan;
        let t_vel = w.cross(&t_rot);
        let t_acc = w_dot.cross(&t_rot) + w.cross(&t_vel);
        for c in 0..3 {
            state.d[6 * n + c] = pos[c];
            state.d[6 * n + 3 + c] = t_rot[c];
            state.v[6 * n + c] = vel[c];
            state.v[6 * n + 3 + c] = t_vel[c];
            state.a[6 * n + c] = acc[c];
            state.a[6 * n + 3 + c] = t_acc[c];
        }
    }
    state
}
