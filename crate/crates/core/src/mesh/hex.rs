//! Trilinear 8-node hexahedron on the reference cube [-1, 1]^3.

use crate::Vec3;
use nalgebra::Matrix3;

/// Reference coordinates of the corners, right-handed ordering.
pub const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Local node quadruples of the six faces, ordered so the normal points outward.
pub const FACES: [[usize; 4]; 6] = [
    [0, 4, 7, 3],
    [1, 2, 6, 5],
    [0, 1, 5, 4],
    [3, 7, 6, 2],
    [0, 3, 2, 1],
    [4, 5, 6, 7],
];

pub fn shape(xi: &Vec3) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    n
}

/// Derivatives of the shape functions with respect to the reference coordinates.
pub fn shape_deriv(xi: &Vec3) -> [[f64; 3]; 8] {
    let mut d = [[0.0; 3]; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        let fx = 1.0 + c[0] * xi[0];
        let fy = 1.0 + c[1] * xi[1];
        let fz = 1.0 + c[2] * xi[2];
        d[a] = [0.125 * c[0] * fy * fz, 0.125 * fx * c[1] * fz, 0.125 * fx * fy * c[2]];
    }
    d
}

pub fn map(coords: &[Vec3; 8], xi: &Vec3) -> Vec3 {
    let n = shape(xi);
    coords.iter().zip(n).fold(Vec3::zeros(), |acc, (x, na)| acc + x * na)
}

/// `J[i][k] = dx_i / dxi_k`
pub fn jacobian(coords: &[Vec3; 8], xi: &Vec3) -> Matrix3<f64> {
    let d = shape_deriv(xi);
    let mut j = Matrix3::zeros();
    for (x, da) in coords.iter().zip(d) {
        for i in 0..3 {
            for k in 0..3 {
                j[(i, k)] += x[i] * da[k];
            }
        }
    }
    j
}

/// Physical shape-function gradients and the Jacobian determinant at `xi`.
pub fn gradients(coords: &[Vec3; 8], xi: &Vec3) -> Option<([[f64; 3]; 8], f64)> {
    let d = shape_deriv(xi);
    let j = jacobian(coords, xi);
    let det = j.determinant();
    let jinv = j.try_inverse()?;
    let mut g = [[0.0; 3]; 8];
    for a in 0..8 {
        for i in 0..3 {
            // dN/dx_i = sum_k dN/dxi_k dxi_k/dx_i
            g[a][i] = (0..3).map(|k| d[a][k] * jinv[(k, i)]).sum();
        }
    }
    Some((g, det))
}
