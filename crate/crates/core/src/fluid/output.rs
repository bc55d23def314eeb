use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::FluidState;
use crate::error::{FbiError, Result};
use crate::mesh::{FluidMesh, LocalCoords};
use crate::Vec3;

/// Legacy ASCII VTK unstructured grid with point data "velocity" and "pressure".
pub fn write_fluid_vtk(mut w: impl Write, mesh: &FluidMesh, state: &FluidState) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "fluid t={}", state.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for p in mesh.nodes() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    let ne = mesh.num_elements();
    writeln!(w, "CELLS {} {}", ne, 9 * ne)?;
    for conn in mesh.elements() {
        let ids: Vec<String> = conn.iter().map(|n| n.to_string()).collect();
        writeln!(w, "8 {}", ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "12")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
    writeln!(w, "VECTORS velocity double")?;
    for n in 0..mesh.num_nodes() {
        let v = state.node_velocity(n);
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in &state.p {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

/// CSV time series of the velocity sampled at fixed points.
pub struct ProbeWriter {
    points: Vec<(Vec3, LocalCoords)>,
    out: BufWriter<File>,
}

impl ProbeWriter {
    pub fn create(path: &Path, mesh: &FluidMesh, points: &[Vec3]) -> Result<Self> {
        let located = points
            .iter()
            .map(|p| {
                mesh.locate_point(p, None)
                    .map(|loc| (*p, loc))
                    .ok_or_else(|| FbiError::Config(format!("probe point {p:?} lies outside the fluid mesh")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "t,x,y,z,vx,vy,vz")?;
        Ok(ProbeWriter { points: located, out })
    }

    pub fn record(&mut self, mesh: &FluidMesh, state: &FluidState) -> Result<()> {
        for (p, loc) in &self.points {
            let v = state.velocity_at(mesh, loc);
            writeln!(self.out, "{},{},{},{},{},{},{}", state.t, p.x, p.y, p.z, v.x, v.y, v.z)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
