//! Mixed-dimensional fluid-beam interaction.
//!
//! One-dimensional Hermite beam elements are embedded in a three-dimensional
//! stabilized Navier-Stokes background mesh and coupled along the beam
//! centerline with a penalty method.

pub mod app;
pub mod beam;
pub mod config;
pub mod coupling;
pub mod driver;
pub mod error;
pub mod fluid;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod time_function;

pub use error::{FbiError, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
