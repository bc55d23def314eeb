use nalgebra::{DMatrix, DVector, Matrix3};

use super::{hermite, BeamLoads, BeamMaterial, BeamMesh, BeamState, BEAM_GAUSS_POINTS};
use crate::error::{FbiError, Result};
use crate::quadrature::GaussRule;
use crate::Vec3;

/// Minimum admissible `|r'|` at a quadrature point.
pub const TOL_SINGULAR: f64 = 1e-8;

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Gradient and Hessian of the strain energy density with respect to
/// `a = r'` and `b = r''`.
struct Density {
    ga: Vec3,
    gb: Vec3,
    haa: Matrix3<f64>,
    hab: Matrix3<f64>,
    hbb: Matrix3<f64>,
}

fn energy_density(a: &Vec3, b: &Vec3, ea: f64, ei: f64) -> Density {
    let i3 = Matrix3::identity();
    let aa = a.dot(a);
    let n = aa.sqrt();
    let bb = b.dot(b);
    let ab = a.dot(b);

    // axial: EA/2 (|a| - 1)^2
    let mut ga = a * (ea * (n - 1.0) / n);
    let mut haa = (i3 * (1.0 - 1.0 / n) + a * a.transpose() / (n * n * n)) * ea;

    // bending: EI/2 q g with q = |a|^2 |b|^2 - (a.b)^2 and g = |a|^-4
    let q = aa * bb - ab * ab;
    let q_a = a * (2.0 * bb) - b * (2.0 * ab);
    let q_b = b * (2.0 * aa) - a * (2.0 * ab);
    let q_aa = i3 * (2.0 * bb) - b * b.transpose() * 2.0;
    let q_bb = i3 * (2.0 * aa) - a * a.transpose() * 2.0;
    let q_ab = a * b.transpose() * 4.0 - b * a.transpose() * 2.0 - i3 * (2.0 * ab);
    let g = 1.0 / (aa * aa);
    let g_a = a * (-4.0 / (aa * aa * aa));
    let g_aa = a * a.transpose() * (24.0 / (aa * aa * aa * aa)) - i3 * (4.0 / (aa * aa * aa));
    let c = 0.5 * ei;
    ga += (q_a * g + g_a * q) * c;
    let gb = q_b * (g * c);
    haa += (q_aa * g + q_a * g_a.transpose() + g_a * q_a.transpose() + g_aa * q) * c;
    let hab = (q_ab * g + g_a * q_b.transpose()) * c;
    let hbb = q_bb * (g * c);
    Density { ga, gb, haa, hab, hbb }
}

fn add_block(m: &mut DMatrix<f64>, r0: usize, c0: usize, b: &Matrix3<f64>, scale: f64) {
    for i in 0..3 {
        for j in 0..3 {
            m[(r0 + i, c0 + j)] += b[(i, j)] * scale;
        }
    }
}

/// Internal minus external force and its derivative with respect to the DoFs.
pub fn internal_force(
    mesh: &BeamMesh,
    d: &[f64],
    material: &BeamMaterial,
    loads: &BeamLoads,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let nd = mesh.num_dofs();
    let mut f = DVector::zeros(nd);
    let mut k = DMatrix::zeros(nd, nd);
    let rule = GaussRule::new(BEAM_GAUSS_POINTS);
    for e in 0..mesh.num_elements() {
        let l = mesh.length(e);
        let dofs = mesh.element_dofs(e);
        let q: [Vec3; 4] = std::array::from_fn(|b| Vec3::new(d[dofs[3 * b]], d[dofs[3 * b + 1]], d[dofs[3 * b + 2]]));
        let mut fe = [Vec3::zeros(); 4];
        let mut ke = DMatrix::<f64>::zeros(12, 12);
        for (s, w) in rule.on_interval(0.0, l) {
            let h = hermite::shape(s, l);
            let a = (0..4).fold(Vec3::zeros(), |acc, j| acc + q[j] * h.d1[j]);
            let b = (0..4).fold(Vec3::zeros(), |acc, j| acc + q[j] * h.d2[j]);
            let norm = a.norm();
            if !(norm >= TOL_SINGULAR) {
                return Err(FbiError::SingularBeam { element: e, norm });
            }
            let den = energy_density(&a, &b, material.ea, material.ei);
            let aa = a.dot(&a);
            let m = loads.distributed_moment;
            let fm = m.cross(&a) / aa;
            let dfm = (skew(&m) / aa - fm * a.transpose() * (2.0 / aa)) * -1.0;
            for i in 0..4 {
                fe[i] += (den.ga * h.d1[i] + den.gb * h.d2[i] - fm * h.d1[i] - loads.distributed_force * h.n[i]) * w;
                for j in 0..4 {
                    let blk = den.haa * (h.d1[i] * h.d1[j])
                        + den.hab * (h.d1[i] * h.d2[j])
                        + den.hab.transpose() * (h.d2[i] * h.d1[j])
                        + den.hbb * (h.d2[i] * h.d2[j])
                        + dfm * (h.d1[i] * h.d1[j]);
                    add_block(&mut ke, 3 * i, 3 * j, &blk, w);
                }
            }
        }
        for i in 0..4 {
            for c in 0..3 {
                f[dofs[3 * i + c]] += fe[i][c];
            }
        }
        for r in 0..12 {
            for c in 0..12 {
                k[(dofs[r], dofs[c])] += ke[(r, c)];
            }
        }
    }
    for &(node, force) in &loads.point_forces {
        for c in 0..3 {
            f[6 * node + c] -= force[c];
        }
    }
    for &(node, m) in &loads.point_moments {
        let t = Vec3::new(d[6 * node + 3], d[6 * node + 4], d[6 * node + 5]);
        let tt = t.dot(&t);
        let fm = m.cross(&t) / tt;
        let dfm = skew(&m) / tt - fm * t.transpose() * (2.0 / tt);
        for i in 0..3 {
            f[6 * node + 3 + i] -= fm[i];
            for j in 0..3 {
                k[(6 * node + 3 + i, 6 * node + 3 + j)] -= dfm[(i, j)];
            }
        }
    }
    if let Some(ext) = &loads.dof_force {
        f -= ext;
    }
    Ok((f, k))
}

/// Consistent mass matrix `rho A int H^T H ds`.
pub fn mass_matrix(mesh: &BeamMesh, material: &BeamMaterial) -> DMatrix<f64> {
    let nd = mesh.num_dofs();
    let mut m = DMatrix::zeros(nd, nd);
    let rule = GaussRule::new(BEAM_GAUSS_POINTS);
    let rho_a = material.line_density();
    for e in 0..mesh.num_elements() {
        let l = mesh.length(e);
        let dofs = mesh.element_dofs(e);
        for (s, w) in rule.on_interval(0.0, l) {
            let h = hermite::shape(s, l);
            for i in 0..4 {
                for j in 0..4 {
                    let v = rho_a * h.n[i] * h.n[j] * w;
                    for c in 0..3 {
                        m[(dofs[3 * i + c], dofs[3 * j + c])] += v;
                    }
                }
            }
        }
    }
    m
}

/// Full residual `M a + F_int - F_ext` and the tangent stiffness `dF/dd`.
pub fn assemble_tf_residual(
    mesh: &BeamMesh,
    state: &BeamState,
    material: &BeamMaterial,
    loads: &BeamLoads,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (f, k) = internal_force(mesh, &state.d, material, loads)?;
    let m = mass_matrix(mesh, material);
    let r = m * DVector::from_column_slice(&state.a) + f;
    Ok((r, k))
}
