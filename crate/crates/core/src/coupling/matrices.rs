use rayon::prelude::*;

use super::CouplingSegment;
use crate::beam::{hermite, BeamMesh};
use crate::linalg::{norm2, CsrMatrix};
use crate::mesh::{hex, FluidMesh};

/// Shape data of one coupling quadrature point.
#[derive(Debug, Clone, PartialEq)]
struct PointData {
    /// Quadrature weight times `|r'|`.
    weight: f64,
    fluid_nodes: [usize; 8],
    n: [f64; 8],
    beam_dofs: [usize; 12],
    phi: [f64; 4],
}

/// The four penalty blocks, each already multiplied by `epsilon`. Fluid
/// indices are velocity DoFs `3 * node + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    pub k_bb: CsrMatrix,
    pub k_ff: CsrMatrix,
    pub k_bf: CsrMatrix,
    pub k_fb: CsrMatrix,
    pub epsilon: f64,
    points: Vec<PointData>,
}

pub fn assemble_coupling(
    segments: &[CouplingSegment],
    beam: &BeamMesh,
    fluid: &FluidMesh,
    epsilon: f64,
) -> CouplingMatrices {
    let points: Vec<PointData> = segments
        .par_iter()
        .flat_map_iter(|seg| {
            let l = beam.length(seg.beam_element);
            let beam_dofs = beam.element_dofs(seg.beam_element);
            let fluid_nodes = fluid.elements()[seg.fluid_element];
            seg.gauss_points.iter().map(move |gp| PointData {
                weight: gp.weight * gp.jacobian,
                fluid_nodes,
                n: hex::shape(&gp.local.xi),
                beam_dofs,
                phi: hermite::shape(gp.s, l).n,
            })
        })
        .collect();

    let mut ff = Vec::new();
    let mut bb = Vec::new();
    let mut fb = Vec::new();
    let mut bf = Vec::new();
    // products are formed symmetrically so K_BB and K_FF come out exactly symmetric
    for p in &points {
        let w = epsilon * p.weight;
        for a in 0..8 {
            for b in 0..8 {
                let v = w * (p.n[a] * p.n[b]);
                for c in 0..3 {
                    ff.push((3 * p.fluid_nodes[a] + c, 3 * p.fluid_nodes[b] + c, v));
                }
            }
        }
        for k in 0..4 {
            for j in 0..4 {
                let v = w * (p.phi[k] * p.phi[j]);
                for c in 0..3 {
                    bb.push((p.beam_dofs[3 * k + c], p.beam_dofs[3 * j + c], v));
                }
            }
        }
        for a in 0..8 {
            for k in 0..4 {
                let v = w * p.n[a] * p.phi[k];
                for c in 0..3 {
                    let (f, bdof) = (3 * p.fluid_nodes[a] + c, p.beam_dofs[3 * k + c]);
                    fb.push((f, bdof, v));
                    bf.push((bdof, f, v));
                }
            }
        }
    }
    let nf = 3 * fluid.num_nodes();
    let nb = beam.num_dofs();
    CouplingMatrices {
        k_bb: CsrMatrix::from_triplets(nb, nb, &bb),
        k_ff: CsrMatrix::from_triplets(nf, nf, &ff),
        k_bf: CsrMatrix::from_triplets(nb, nf, &bf),
        k_fb: CsrMatrix::from_triplets(nf, nb, &fb),
        epsilon,
        points,
    }
}

fn sub(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `f^F = K_FF v_f - K_FB v_b`, the penalty force acting on the fluid.
pub fn fluid_penalty_force(m: &CouplingMatrices, v_f: &[f64], v_b: &[f64]) -> Vec<f64> {
    sub(m.k_ff.mul_vec(v_f), m.k_fb.mul_vec(v_b))
}

/// `f^B = K_BB v_b - K_BF v_f`, the penalty force acting on the beam.
pub fn beam_penalty_force(m: &CouplingMatrices, v_f: &[f64], v_b: &[f64]) -> Vec<f64> {
    sub(m.k_bb.mul_vec(v_b), m.k_bf.mul_vec(v_f))
}

/// `|(K_FF v_f - K_FB v_b) / epsilon|_2`, the weighted kinematic mismatch
/// without the penalty factor. Zero when `epsilon` is zero.
pub fn constraint_violation(m: &CouplingMatrices, v_f: &[f64], v_b: &[f64]) -> f64 {
    if m.epsilon == 0.0 {
        return 0.0;
    }
    norm2(&fluid_penalty_force(m, v_f, v_b)) / m.epsilon.abs()
}

/// `sqrt(int |v_f(r(s)) - v_b(s)|^2 ds)` over the coupled part of the centerline.
pub fn violation_l2(m: &CouplingMatrices, v_f: &[f64], v_b: &[f64]) -> f64 {
    let mut total = 0.0;
    for p in &m.points {
        let mut diff = [0.0; 3];
        for c in 0..3 {
            let vf: f64 = (0..8).map(|a| p.n[a] * v_f[3 * p.fluid_nodes[a] + c]).sum();
            let vb: f64 = (0..4).map(|k| p.phi[k] * v_b[p.beam_dofs[3 * k + c]]).sum();
            diff[c] = vf - vb;
        }
        total += p.weight * (diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]);
    }
    total.sqrt()
}
