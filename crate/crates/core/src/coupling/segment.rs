use std::io::Write;

use rayon::prelude::*;

use crate::beam::{eval_centerline, BeamMesh, BeamState};
use crate::error::{FbiError, Result};
use crate::mesh::{Aabb, FluidMesh, LocalCoords, TOL_GEO};
use crate::quadrature::GaussRule;

/// Bisection tolerance on segment end points, relative to the element length.
pub const TOL_SEG: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingGaussPoint {
    pub s: f64,
    /// Quadrature weight in the arc parameter.
    pub weight: f64,
    pub local: LocalCoords,
    /// `|r'(s)|` in the current configuration.
    pub jacobian: f64,
}

/// Part of one beam element lying inside one fluid element.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSegment {
    pub beam_element: usize,
    pub fluid_element: usize,
    pub s_a: f64,
    pub s_b: f64,
    pub gauss_points: Vec<CouplingGaussPoint>,
}

struct Classifier<'a> {
    beam: &'a BeamMesh,
    state: &'a BeamState,
    fluid: &'a FluidMesh,
    element: usize,
    candidates: Vec<usize>,
}

impl Classifier<'_> {
    fn class(&self, s: f64) -> Option<usize> {
        let (x, _, _) = eval_centerline(self.beam, self.state, self.element, s);
        self.fluid.locate_in(&self.candidates, &x).map(|l| l.element)
    }

    /// Brackets the first class change after `lo`: returns `(a, b)` with
    /// `class(a) == class(lo)`, `class(b) != class(lo)` and `b - a <= tol`.
    fn transition(&self, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
        let c_lo = self.class(lo);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.class(mid) == c_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

/// Splits every beam element at fluid element boundaries. Portions outside
/// the fluid mesh produce no segments.
pub fn segment_beam_elements(
    beam: &BeamMesh,
    state: &BeamState,
    fluid: &FluidMesh,
    search_radius: f64,
    n_gp: usize,
) -> Result<Vec<CouplingSegment>> {
    let per_element: Vec<Result<Vec<CouplingSegment>>> = (0..beam.num_elements())
        .into_par_iter()
        .map(|e| segment_element(beam, state, fluid, search_radius, n_gp, e))
        .collect();
    let mut out = Vec::new();
    for r in per_element {
        out.extend(r?);
    }
    Ok(out)
}

fn segment_element(
    beam: &BeamMesh,
    state: &BeamState,
    fluid: &FluidMesh,
    search_radius: f64,
    n_gp: usize,
    e: usize,
) -> Result<Vec<CouplingSegment>> {
    let l = beam.length(e);
    let n_samples = 4 * n_gp.max(1);
    let samples: Vec<f64> = (0..=n_samples).map(|k| l * k as f64 / n_samples as f64).collect();
    let points: Vec<_> = samples.iter().map(|&s| eval_centerline(beam, state, e, s).0).collect();
    let candidates = fluid.inflate_bbox_candidates(&Aabb::from_points(&points), search_radius);
    let cls = Classifier {
        beam,
        state,
        fluid,
        element: e,
        candidates,
    };
    let tol = TOL_SEG * l;

    // pieces `(start, end, class)`; each ends at the last parameter known to
    // carry its class, so neighbours may leave gaps below `tol`
    let mut pieces: Vec<(f64, f64, Option<usize>)> = vec![(0.0, l, cls.class(0.0))];
    for k in 0..n_samples {
        let end_class = cls.class(samples[k + 1]);
        let mut lo = samples[k];
        while pieces.last().unwrap().2 != end_class {
            let (a, b) = cls.transition(lo, samples[k + 1], tol);
            pieces.last_mut().unwrap().1 = a;
            pieces.push((b, l, cls.class(b)));
            lo = b;
            if b >= samples[k + 1] {
                break;
            }
        }
    }

    let rule = GaussRule::new(n_gp);
    let mut segments = Vec::new();
    for &(s_a, s_b, class) in &pieces {
        let Some(fe) = class else { continue };
        if s_b - s_a <= tol {
            continue;
        }
        let mut gauss_points = Vec::with_capacity(n_gp);
        for (s, w) in rule.on_interval(s_a, s_b) {
            let (x, a, _) = eval_centerline(beam, state, e, s);
            let xi = fluid
                .inverse_map(fe, &x)
                .filter(|xi| xi.amax() <= 1.0 + TOL_GEO)
                .ok_or_else(|| {
                    FbiError::Coupling(format!(
                        "Gauss point s = {s} of beam element {e} does not lie in fluid element {fe}"
                    ))
                })?;
            gauss_points.push(CouplingGaussPoint {
                s,
                weight: w,
                local: LocalCoords { element: fe, xi },
                jacobian: a.norm(),
            });
        }
        segments.push(CouplingSegment {
            beam_element: e,
            fluid_element: fe,
            s_a,
            s_b,
            gauss_points,
        });
    }
    Ok(segments)
}

/// CSV dump `beam_ele,fluid_ele,s_a,s_b`.
pub fn write_segments_csv(mut w: impl Write, segments: &[CouplingSegment]) -> Result<()> {
    writeln!(w, "beam_ele,fluid_ele,s_a,s_b")?;
    for s in segments {
        writeln!(w, "{},{},{},{}", s.beam_element, s.fluid_element, s.s_a, s.s_b)?;
    }
    Ok(())
}
