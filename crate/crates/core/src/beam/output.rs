use std::io::Write;

use super::{eval_centerline, eval_velocity, BeamMesh, BeamState};
use crate::error::Result;

const SUBDIVISIONS: usize = 8;

/// Legacy ASCII VTK polyline of the centerline, one line cell per element,
/// with point data "velocity".
pub fn write_beam_vtk(mut w: impl Write, mesh: &BeamMesh, state: &BeamState) -> Result<()> {
    let ne = mesh.num_elements();
    let np = ne * (SUBDIVISIONS + 1);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "beam t={}", state.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {np} double")?;
    let mut vel = Vec::with_capacity(np);
    for e in 0..ne {
        let l = mesh.length(e);
        for k in 0..=SUBDIVISIONS {
            let s = l * k as f64 / SUBDIVISIONS as f64;
            let (r, _, _) = eval_centerline(mesh, state, e, s);
            writeln!(w, "{} {} {}", r.x, r.y, r.z)?;
            vel.push(eval_velocity(mesh, state, e, s));
        }
    }
    writeln!(w, "CELLS {} {}", ne, ne * (SUBDIVISIONS + 2))?;
    for e in 0..ne {
        let ids: Vec<String> = (0..=SUBDIVISIONS)
            .map(|k| (e * (SUBDIVISIONS + 1) + k).to_string())
            .collect();
        writeln!(w, "{} {}", SUBDIVISIONS + 1, ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "4")?;
    }
    writeln!(w, "POINT_DATA {np}")?;
    writeln!(w, "VECTORS velocity double")?;
    for v in vel {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    Ok(())
}
