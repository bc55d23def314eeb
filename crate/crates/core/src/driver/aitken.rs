use crate::error::{FbiError, Result};
use crate::linalg::{dot, norm2};

/// Bounds and start value of the dynamic relaxation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitkenParams {
    pub omega_init: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for AitkenParams {
    fn default() -> Self {
        AitkenParams {
            omega_init: 0.5,
            omega_min: 0.05,
            omega_max: 1.0,
        }
    }
}

impl AitkenParams {
    pub fn validate(&self) -> Result<()> {
        let AitkenParams {
            omega_init: i,
            omega_min: lo,
            omega_max: hi,
        } = *self;
        if !(lo > 0.0 && lo <= i && i <= hi && hi <= 2.0) {
            return Err(FbiError::Config(format!(
                "aitken parameters must satisfy 0 < omega_min <= omega_init <= omega_max <= 2, got {lo}, {i}, {hi}"
            )));
        }
        Ok(())
    }
}

/// Outcome of one relaxation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AitkenStep {
    /// The residual or its increment vanished; the iterate was left unchanged.
    Converged,
    Relaxed {
        omega: f64,
    },
}

/// One Aitken update on a fixed-point iterate.
///
/// `r = f_new - f_relaxed_prev`; with the previous residual `r_prev` the factor
/// becomes `-omega_prev <r_prev, r - r_prev> / |r - r_prev|^2`, clamped to the
/// bounds. Without a previous residual `omega_init` is used.
pub fn aitken_update(
    f_new: &[f64],
    f_relaxed_prev: &[f64],
    r_prev: Option<&[f64]>,
    omega_prev: f64,
    params: &AitkenParams,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    assert_eq!(f_new.len(), f_relaxed_prev.len(), "dimension mismatch in relaxation");
    let r: Vec<f64> = f_new.iter().zip(f_relaxed_prev).map(|(a, b)| a - b).collect();
    if r.iter().all(|&v| v == 0.0) {
        return None;
    }
    let omega = match r_prev {
        None => params.omega_init,
        Some(rp) => {
            let dr: Vec<f64> = r.iter().zip(rp).map(|(a, b)| a - b).collect();
            let dd = dot(&dr, &dr);
            if dd == 0.0 {
                return None;
            }
            (-omega_prev * dot(rp, &dr) / dd).clamp(params.omega_min, params.omega_max)
        }
    };
    let relaxed = f_relaxed_prev.iter().zip(&r).map(|(f, ri)| f + omega * ri).collect();
    Some((relaxed, omega, r))
}

/// Stateful wrapper for the iterations of one time step.
#[derive(Debug, Clone)]
pub struct Aitken {
    params: AitkenParams,
    omega: f64,
    residual: Option<Vec<f64>>,
    history: Vec<f64>,
}

impl Aitken {
    pub fn new(params: AitkenParams) -> Self {
        Aitken {
            params,
            omega: params.omega_init,
            residual: None,
            history: Vec::new(),
        }
    }

    /// Forgets the previous residual; the next update starts from `omega_init`.
    pub fn reset(&mut self) {
        self.omega = self.params.omega_init;
        self.residual = None;
        self.history.clear();
    }

    /// Relaxes `relaxed` towards `f_new` in place.
    pub fn relax(&mut self, f_new: &[f64], relaxed: &mut Vec<f64>) -> AitkenStep {
        match aitken_update(f_new, relaxed, self.residual.as_deref(), self.omega, &self.params) {
            None => AitkenStep::Converged,
            Some((next, omega, r)) => {
                *relaxed = next;
                self.omega = omega;
                self.residual = Some(r);
                self.history.push(omega);
                AitkenStep::Relaxed { omega }
            }
        }
    }

    /// Factors used since the last reset.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Norm of the last unrelaxed residual.
    pub fn last_residual_norm(&self) -> f64 {
        self.residual.as_deref().map_or(0.0, norm2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_to_bounds() {
        let p = AitkenParams::default();
        // r_prev = 1, r = 2/3 gives -0.5 * 1 * (-1/3) / (1/9) = 1.5 -> clamp to 1
        let (_, omega, _) = aitken_update(&[1.0 + 2.0 / 3.0], &[1.0], Some(&[1.0]), 0.5, &p).unwrap();
        assert_eq!(omega, 1.0);
    }
}
