//! Element kernel for the stabilized one-step-theta Navier-Stokes residual.
//!
//! Local DoFs are interleaved per node: `4 a + c`, components u, v, w, p.

use crate::error::{FbiError, Result};
use crate::mesh::{hex, FluidMesh};
use crate::Vec3;

pub(crate) const NEN: usize = 8;
pub(crate) const NDOF: usize = 4 * NEN;

const GP: f64 = 0.577_350_269_189_625_8;

/// Shape data at the 2x2x2 Gauss points of one element.
#[derive(Debug, Clone)]
pub(crate) struct ElementGeometry {
    pub n: [[f64; NEN]; 8],
    pub g: [[[f64; 3]; NEN]; 8],
    pub dv: [f64; 8],
    /// Characteristic size (cube root of the volume).
    pub h: f64,
}

impl ElementGeometry {
    pub fn new(mesh: &FluidMesh, e: usize) -> Result<Self> {
        let coords = mesh.element_coords(e);
        let mut geo = ElementGeometry {
            n: [[0.0; NEN]; 8],
            g: [[[0.0; 3]; NEN]; 8],
            dv: [0.0; 8],
            h: 0.0,
        };
        for (q, c) in hex::CORNERS.iter().enumerate() {
            let xi = Vec3::new(c[0] * GP, c[1] * GP, c[2] * GP);
            let (g, det) = hex::gradients(&coords, &xi).ok_or_else(|| FbiError::Element {
                element: e,
                message: "singular Jacobian at a Gauss point".into(),
            })?;
            if !(det > 0.0) {
                return Err(FbiError::Element {
                    element: e,
                    message: format!("non-positive Jacobian determinant {det:e}"),
                });
            }
            geo.n[q] = hex::shape(&xi);
            geo.g[q] = g;
            geo.dv[q] = det;
        }
        geo.h = geo.dv.iter().sum::<f64>().cbrt();
        Ok(geo)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelParams {
    pub rho: f64,
    pub mu: f64,
    pub theta: f64,
    pub dt: f64,
    pub force: Vec3,
    pub c_inv: f64,
    pub grad_div_scale: f64,
    pub stabilization: bool,
}

impl KernelParams {
    /// Returns `(tau_supg_pspg, tau_grad_div)`.
    fn taus(&self, speed: f64, h: f64) -> (f64, f64) {
        let nu = self.mu / self.rho;
        let visc = 4.0 * nu / (h * h);
        let tau = ((2.0 / self.dt).powi(2) + (2.0 * speed / h).powi(2) + self.c_inv * visc * visc).powf(-0.5);
        let re_h = speed * h / (2.0 * nu);
        let tau_c = self.grad_div_scale * self.rho * 0.5 * h * speed * (re_h / 3.0).min(1.0);
        (tau, tau_c)
    }
}

struct PointFields {
    v: Vec3,
    grad: [[f64; 3]; 3],
    p: f64,
    grad_p: Vec3,
}

fn fields(n: &[f64; NEN], g: &[[f64; 3]; NEN], x: &[f64; NDOF]) -> PointFields {
    let mut f = PointFields {
        v: Vec3::zeros(),
        grad: [[0.0; 3]; 3],
        p: 0.0,
        grad_p: Vec3::zeros(),
    };
    for a in 0..NEN {
        for i in 0..3 {
            let va = x[4 * a + i];
            f.v[i] += n[a] * va;
            for j in 0..3 {
                f.grad[i][j] += g[a][j] * va;
            }
        }
        let pa = x[4 * a + 3];
        f.p += n[a] * pa;
        for j in 0..3 {
            f.grad_p[j] += g[a][j] * pa;
        }
    }
    f
}

fn convective(v: &Vec3, grad: &[[f64; 3]; 3]) -> Vec3 {
    Vec3::new(
        (0..3).map(|j| v[j] * grad[0][j]).sum(),
        (0..3).map(|j| v[j] * grad[1][j]).sum(),
        (0..3).map(|j| v[j] * grad[2][j]).sum(),
    )
}

/// Residual and (optionally) Jacobian of one element. `x` is the current
/// iterate at `t^{n+1}`, `xo` the converged state at `t^n`.
pub(crate) fn element_kernel(
    geo: &ElementGeometry,
    x: &[f64; NDOF],
    xo: &[f64; NDOF],
    kp: &KernelParams,
    re: &mut [f64; NDOF],
    ke: Option<&mut [f64]>,
) {
    re.fill(0.0);
    let mut ke = ke;
    if let Some(k) = ke.as_deref_mut() {
        k.fill(0.0);
    }
    let (rho, mu, th, dt) = (kp.rho, kp.mu, kp.theta, kp.dt);
    for q in 0..8 {
        let (n, g, dv) = (&geo.n[q], &geo.g[q], geo.dv[q]);
        let cur = fields(n, g, x);
        let old = fields(n, g, xo);
        let conv = convective(&cur.v, &cur.grad);
        let conv_o = convective(&old.v, &old.grad);
        let div = cur.grad[0][0] + cur.grad[1][1] + cur.grad[2][2];

        // strong momentum residual without second derivatives
        let r_m: Vec3 = (cur.v - old.v) * (rho / dt) + conv * (th * rho) + conv_o * ((1.0 - th) * rho) - kp.force * rho
            + cur.grad_p;
        let (tau, tau_c) = if kp.stabilization {
            kp.taus(cur.v.norm(), geo.h)
        } else {
            (0.0, 0.0)
        };

        let mut adv = [0.0; NEN];
        for a in 0..NEN {
            adv[a] = (0..3).map(|j| cur.v[j] * g[a][j]).sum();
        }

        for a in 0..NEN {
            let ga = &g[a];
            for i in 0..3 {
                let mut visc = 0.0;
                let mut visc_o = 0.0;
                for j in 0..3 {
                    visc += (cur.grad[i][j] + cur.grad[j][i]) * ga[j];
                    visc_o += (old.grad[i][j] + old.grad[j][i]) * ga[j];
                }
                let gal = rho / dt * (cur.v[i] - old.v[i]) * n[a]
                    + th * (mu * visc + rho * conv[i] * n[a])
                    + (1.0 - th) * (mu * visc_o + rho * conv_o[i] * n[a])
                    - rho * kp.force[i] * n[a]
                    - cur.p * ga[i];
                let stab = tau * adv[a] * r_m[i] + tau_c * div * ga[i];
                re[4 * a + i] += dv * (gal + stab);
            }
            let pspg: f64 = (0..3).map(|i| ga[i] * r_m[i]).sum();
            re[4 * a + 3] += dv * (div * n[a] + tau / rho * pspg);
        }

        let Some(k) = ke.as_deref_mut() else { continue };
        // d r_m_i / d v_bk = delta_ik d_b + n_b m_ik
        let mut d = [0.0; NEN];
        for b in 0..NEN {
            d[b] = rho / dt * n[b] + th * rho * adv[b];
        }
        let m = cur.grad.map(|row| row.map(|gij| th * rho * gij));
        for a in 0..NEN {
            let ga = &g[a];
            for b in 0..NEN {
                let gb = &g[b];
                let gagb = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                let diag = rho / dt * n[a] * n[b] + th * mu * gagb + th * rho * n[a] * adv[b] + tau * adv[a] * d[b];
                for i in 0..3 {
                    let row = (4 * a + i) * NDOF + 4 * b;
                    for kk in 0..3 {
                        let mut v = th * mu * gb[i] * ga[kk]
                            + th * rho * n[a] * n[b] * cur.grad[i][kk]
                            + tau * adv[a] * n[b] * m[i][kk]
                            + tau_c * ga[i] * gb[kk];
                        if i == kk {
                            v += diag;
                        }
                        k[row + kk] += dv * v;
                    }
                    k[row + 3] += dv * (-n[b] * ga[i] + tau * adv[a] * gb[i]);
                }
                let row = (4 * a + 3) * NDOF + 4 * b;
                for kk in 0..3 {
                    let mut v = n[a] * gb[kk] + tau / rho * ga[kk] * d[b];
                    for i in 0..3 {
                        v += tau / rho * ga[i] * n[b] * m[i][kk];
                    }
                    k[row + kk] += dv * v;
                }
                k[row + 3] += dv * tau / rho * gagb;
            }
        }
    }
}
