//! Gauss-point-to-segment penalty coupling between beam centerlines and the
//! fluid background mesh.

mod matrices;
mod segment;

pub use matrices::{
    assemble_coupling, beam_penalty_force, constraint_violation, fluid_penalty_force, violation_l2, CouplingMatrices,
};
pub use segment::{segment_beam_elements, write_segments_csv, CouplingGaussPoint, CouplingSegment, TOL_SEG};

/// Default Gauss points per segment.
pub const COUPLING_GAUSS_POINTS: usize = 6;
