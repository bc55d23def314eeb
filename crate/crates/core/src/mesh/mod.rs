//! Hexahedral background meshes: generation, boundary patches and point location.

pub mod hex;
mod io;
mod search;

pub use io::{read_mesh, write_mesh};
pub use search::Aabb;

use crate::error::{FbiError, Result};
use crate::Vec3;
use search::BucketGrid;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Tolerance on reference coordinates for "inside element" classification.
pub const TOL_GEO: f64 = 1e-9;
/// Inverse-map residual tolerance relative to the mesh size.
pub const TOL_PROJ: f64 = 1e-12;
const MAX_NEWTON: usize = 20;

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub name: String,
    /// Quadrilateral faces as global node quadruples, outward orientation.
    pub faces: Vec<[usize; 4]>,
}

/// Position of a point in the reference cube of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoords {
    pub element: usize,
    pub xi: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoxFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl BoxFace {
    pub const ALL: [BoxFace; 6] = [
        BoxFace::XMin,
        BoxFace::XMax,
        BoxFace::YMin,
        BoxFace::YMax,
        BoxFace::ZMin,
        BoxFace::ZMax,
    ];

    fn axis(self) -> usize {
        self as usize / 2
    }

    fn is_max(self) -> bool {
        self as usize % 2 == 1
    }
}

impl fmt::Display for BoxFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoxFace::XMin => "x_min",
            BoxFace::XMax => "x_max",
            BoxFace::YMin => "y_min",
            BoxFace::YMax => "y_max",
            BoxFace::ZMin => "z_min",
            BoxFace::ZMax => "z_max",
        };
        f.write_str(s)
    }
}

impl FromStr for BoxFace {
    type Err = FbiError;

    fn from_str(s: &str) -> Result<Self> {
        BoxFace::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| FbiError::Config(format!("unknown box face '{s}'")))
    }
}

/// Named groups of box faces. Every face of the box must be named exactly once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatchSpec {
    pub patches: Vec<(String, Vec<BoxFace>)>,
}

impl PatchSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, faces: &[BoxFace]) -> Self {
        self.patches.push((name.to_string(), faces.to_vec()));
        self
    }

    /// One patch per box face, named after the face.
    pub fn per_face() -> Self {
        PatchSpec {
            patches: BoxFace::ALL.iter().map(|f| (f.to_string(), vec![*f])).collect(),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.patches.iter().map(|(n, _)| n.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        let mut errors = Vec::new();
        for (name, faces) in &self.patches {
            for f in faces {
                if let Some(prev) = seen.insert(*f, name.clone()) {
                    errors.push(format!("box face {f} assigned to both '{prev}' and '{name}'"));
                }
            }
        }
        for f in BoxFace::ALL {
            if !seen.contains_key(&f) {
                errors.push(format!("box face {f} is not assigned to any patch"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }
}

/// Immutable hexahedral background mesh.
#[derive(Debug, Clone)]
pub struct FluidMesh {
    nodes: Vec<Vec3>,
    elements: Vec<[usize; 8]>,
    patches: Vec<BoundaryPatch>,
    h_fluid: f64,
    bounds: Vec<Aabb>,
    grid: BucketGrid,
}

impl FluidMesh {
    /// Builds a mesh from raw data, checking element orientation and that the
    /// patches partition the boundary.
    pub fn new(nodes: Vec<Vec3>, elements: Vec<[usize; 8]>, patches: Vec<BoundaryPatch>) -> Result<Self> {
        if elements.is_empty() {
            return Err(FbiError::Config("mesh has no elements".into()));
        }
        for (e, conn) in elements.iter().enumerate() {
            if let Some(n) = conn.iter().find(|&&n| n >= nodes.len()) {
                return Err(FbiError::Element {
                    element: e,
                    message: format!("references missing node {n}"),
                });
            }
            let coords = conn.map(|n| nodes[n]);
            for c in hex::CORNERS {
                let det = hex::jacobian(&coords, &Vec3::new(c[0], c[1], c[2])).determinant();
                if !(det > 0.0) {
                    return Err(FbiError::Element {
                        element: e,
                        message: format!("non-positive Jacobian determinant {det:e} at a corner"),
                    });
                }
            }
        }
        check_patches(&elements, &patches)?;

        let mut h_fluid = 0.0_f64;
        let bounds: Vec<Aabb> = elements
            .iter()
            .map(|conn| {
                for (a, b) in EDGES {
                    h_fluid = h_fluid.max((nodes[conn[a]] - nodes[conn[b]]).norm());
                }
                Aabb::from_points(conn.iter().map(|&n| &nodes[n]))
            })
            .collect();
        let grid = BucketGrid::new(&bounds);
        Ok(FluidMesh {
            nodes,
            elements,
            patches,
            h_fluid,
            bounds,
            grid,
        })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 8]] {
        &self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn patches(&self) -> &[BoundaryPatch] {
        &self.patches
    }

    pub fn patch(&self, name: &str) -> Option<&BoundaryPatch> {
        self.patches.iter().find(|p| p.name == name)
    }

    /// Sorted, deduplicated node ids touched by a patch.
    pub fn patch_nodes(&self, name: &str) -> Option<Vec<usize>> {
        let p = self.patch(name)?;
        let mut ids: Vec<usize> = p.faces.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        Some(ids)
    }

    /// Largest element edge length.
    pub fn h_fluid(&self) -> f64 {
        self.h_fluid
    }

    pub fn element_coords(&self, e: usize) -> [Vec3; 8] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn element_bounds(&self, e: usize) -> &Aabb {
        &self.bounds[e]
    }

    /// Total number of boundary faces (faces used by exactly one element).
    pub fn boundary_face_count(&self) -> usize {
        boundary_faces(&self.elements).len()
    }

    /// Elements whose bounding box intersects `query` inflated by `inflation`, sorted by id.
    pub fn inflate_bbox_candidates(&self, query: &Aabb, inflation: f64) -> Vec<usize> {
        let q = query.inflated(inflation.max(0.0));
        self.grid
            .query(&q)
            .into_iter()
            .filter(|&e| self.bounds[e].intersects(&q))
            .collect()
    }

    /// Solves `map(xi) = x` in element `e`. Returns the reference coordinates
    /// when Newton converges, regardless of whether they lie in the cube.
    pub fn inverse_map(&self, e: usize, x: &Vec3) -> Option<Vec3> {
        let coords = self.element_coords(e);
        let tol = TOL_PROJ * self.h_fluid + 4.0 * f64::EPSILON * x.amax();
        let mut xi = Vec3::zeros();
        let mut r = hex::map(&coords, &xi) - x;
        let mut rn = r.norm();
        for _ in 0..MAX_NEWTON {
            if rn <= tol {
                return Some(xi);
            }
            let step = hex::jacobian(&coords, &xi).try_inverse()? * r;
            let mut alpha = 1.0;
            loop {
                let trial = xi - step * alpha;
                let rt = hex::map(&coords, &trial) - x;
                if rt.norm() < rn || alpha < 1e-4 {
                    xi = trial;
                    r = rt;
                    rn = r.norm();
                    break;
                }
                alpha *= 0.5;
            }
            if xi.amax() > 10.0 {
                return None;
            }
        }
        (rn <= tol).then_some(xi)
    }

    /// Finds the element containing `x`. A hint is accepted only when the point
    /// is strictly inside it; otherwise the lowest-id containing element wins.
    pub fn locate_point(&self, x: &Vec3, hint: Option<usize>) -> Option<LocalCoords> {
        if let Some(h) = hint.filter(|&h| h < self.elements.len()) {
            if let Some(xi) = self.inverse_map(h, x) {
                if xi.amax() < 1.0 - TOL_GEO {
                    return Some(LocalCoords { element: h, xi });
                }
            }
        }
        let slack = TOL_GEO * self.h_fluid;
        self.locate_in(&self.inflate_bbox_candidates(&Aabb::point(*x), slack), x)
    }

    /// Like [`FluidMesh::locate_point`] but restricted to `candidates`, which
    /// must be sorted by id.
    pub fn locate_in(&self, candidates: &[usize], x: &Vec3) -> Option<LocalCoords> {
        let slack = TOL_GEO * self.h_fluid;
        for &e in candidates {
            if !self.bounds[e].inflated(slack).contains(x) {
                continue;
            }
            if let Some(xi) = self.inverse_map(e, x) {
                if xi.amax() <= 1.0 + TOL_GEO {
                    return Some(LocalCoords { element: e, xi });
                }
            }
        }
        None
    }
}

fn face_key(f: &[usize; 4]) -> [usize; 4] {
    let mut k = *f;
    k.sort_unstable();
    k
}

fn boundary_faces(elements: &[[usize; 8]]) -> BTreeMap<[usize; 4], usize> {
    let mut count: BTreeMap<[usize; 4], usize> = BTreeMap::new();
    for conn in elements {
        for lf in hex::FACES {
            *count.entry(face_key(&lf.map(|a| conn[a]))).or_default() += 1;
        }
    }
    count.retain(|_, c| *c == 1);
    count
}

fn check_patches(elements: &[[usize; 8]], patches: &[BoundaryPatch]) -> Result<()> {
    let mut owner: BTreeMap<[usize; 4], &str> = boundary_faces(elements).into_keys().map(|k| (k, "")).collect();
    let mut errors = Vec::new();
    for p in patches {
        for f in &p.faces {
            match owner.get_mut(&face_key(f)) {
                None => errors.push(format!("patch '{}': face {f:?} is not a boundary face", p.name)),
                Some(o) if !o.is_empty() => errors.push(format!("face {f:?} belongs to both '{o}' and '{}'", p.name)),
                Some(o) => *o = &p.name,
            }
        }
    }
    let missing = owner.values().filter(|o| o.is_empty()).count();
    if missing > 0 {
        errors.push(format!("{missing} boundary faces are not assigned to any patch"));
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(FbiError::Validation(errors))
    }
}

/// Structured axis-aligned box `[0,dims]` split into `counts` cells per direction.
pub fn build_box_mesh(dims: [f64; 3], counts: [usize; 3], spec: &PatchSpec) -> Result<FluidMesh> {
    let mut errors = Vec::new();
    for k in 0..3 {
        if !(dims[k] > 0.0) || !dims[k].is_finite() {
            errors.push(format!("mesh.dims[{k}] must be positive, got {}", dims[k]));
        }
        if counts[k] == 0 {
            errors.push(format!("mesh.cells[{k}] must be at least 1"));
        }
    }
    if !errors.is_empty() {
        return Err(FbiError::Validation(errors));
    }
    spec.validate()?;

    let [nx, ny, nz] = counts;
    let node = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(Vec3::new(
                    dims[0] * i as f64 / nx as f64,
                    dims[1] * j as f64 / ny as f64,
                    dims[2] * k as f64 / nz as f64,
                ));
            }
        }
    }
    let mut elements = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push(hex::CORNERS.map(|c| {
                    node(
                        i + (c[0] > 0.0) as usize,
                        j + (c[1] > 0.0) as usize,
                        k + (c[2] > 0.0) as usize,
                    )
                }));
            }
        }
    }

    let elem = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let faces_on = |face: BoxFace| -> Vec<[usize; 4]> {
        let axis = face.axis();
        let local = hex::FACES[face as usize];
        let mut out = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = [i, j, k];
                    let edge = if face.is_max() { counts[axis] - 1 } else { 0 };
                    if idx[axis] == edge {
                        let conn = &elements[elem(i, j, k)];
                        out.push(local.map(|a| conn[a]));
                    }
                }
            }
        }
        out
    };
    let patches = spec
        .patches
        .iter()
        .map(|(name, faces)| BoundaryPatch {
            name: name.clone(),
            faces: faces.iter().flat_map(|&f| faces_on(f)).collect(),
        })
        .collect();
    FluidMesh::new(nodes, elements, patches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let m = build_box_mesh([1.0; 3], [1, 1, 1], &PatchSpec::per_face()).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.num_nodes(), 8);
        assert_eq!(m.boundary_face_count(), 6);
        assert_eq!(m.h_fluid(), 1.0);
    }

    #[test]
    fn rejects_bad_dims_and_incomplete_spec() {
        assert!(build_box_mesh([0.0, 1.0, 1.0], [1, 1, 1], &PatchSpec::per_face()).is_err());
        assert!(build_box_mesh([1.0; 3], [1, 0, 1], &PatchSpec::per_face()).is_err());
        let partial = PatchSpec::new().with("a", &[BoxFace::XMin]);
        assert!(matches!(
            build_box_mesh([1.0; 3], [1, 1, 1], &partial),
            Err(FbiError::Validation(v)) if v.len() == 5
        ));
        let twice = PatchSpec::per_face().with("dup", &[BoxFace::ZMax]);
        assert!(build_box_mesh([1.0; 3], [1, 1, 1], &twice).is_err());
    }

    #[test]
    fn box_face_names_round_trip() {
        for f in BoxFace::ALL {
            assert_eq!(f.to_string().parse::<BoxFace>().unwrap(), f);
        }
        assert!("x_mid".parse::<BoxFace>().is_err());
    }

    #[test]
    fn inverted_element_is_rejected() {
        let m = build_box_mesh([1.0; 3], [1, 1, 1], &PatchSpec::per_face()).unwrap();
        let mut conn = m.elements()[0];
        conn.swap(0, 1);
        let err = FluidMesh::new(m.nodes().to_vec(), vec![conn], vec![]).unwrap_err();
        assert!(matches!(err, FbiError::Element { element: 0, .. }));
    }
}
