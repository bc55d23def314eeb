use crate::Vec3;

/// Axis-aligned bounding box; intervals are closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Aabb { min, max }
    }

    pub fn point(p: Vec3) -> Self {
        Aabb { min: p, max: p }
    }

    pub fn inflated(&self, by: f64) -> Self {
        Aabb {
            min: self.min.add_scalar(-by),
            max: self.max.add_scalar(by),
        }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
pub struct BucketGrid {
    origin: Vec3,
    cell: Vec3,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    pub fn new(boxes: &[Aabb]) -> Self {
        let all = boxes.iter().fold(
            Aabb {
                min: Vec3::repeat(f64::INFINITY),
                max: Vec3::repeat(f64::NEG_INFINITY),
            },
            |acc, b| Aabb {
                min: acc.min.inf(&b.min),
                max: acc.max.sup(&b.max),
            },
        );
        let extent = all.max - all.min;
        // roughly one element per bucket along each axis
        let per_axis = (boxes.len().max(1) as f64).cbrt().ceil().max(1.0);
        let mean = boxes.iter().fold(Vec3::zeros(), |acc, b| acc + (b.max - b.min)) / boxes.len().max(1) as f64;
        let mut dims = [1usize; 3];
        let mut cell = Vec3::zeros();
        for k in 0..3 {
            let by_size = if mean[k] > 0.0 {
                (extent[k] / mean[k]).round()
            } else {
                per_axis
            };
            dims[k] = by_size.clamp(1.0, 4.0 * per_axis) as usize;
            cell[k] = if extent[k] > 0.0 {
                extent[k] / dims[k] as f64
            } else {
                1.0
            };
        }
        let mut grid = BucketGrid {
            origin: all.min,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        };
        for (id, b) in boxes.iter().enumerate() {
            let (lo, hi) = grid.range(b);
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let idx = grid.index(i, j, k);
                        grid.buckets[idx].push(id);
                    }
                }
            }
        }
        grid
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Inclusive bucket index range overlapped by `b`, clamped to the grid.
    fn range(&self, b: &Aabb) -> ([usize; 3], [usize; 3]) {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for k in 0..3 {
            let max_idx = self.dims[k] as f64 - 1.0;
            let a = ((b.min[k] - self.origin[k]) / self.cell[k]).floor();
            let z = ((b.max[k] - self.origin[k]) / self.cell[k]).floor();
            lo[k] = a.clamp(0.0, max_idx) as usize;
            hi[k] = z.clamp(0.0, max_idx) as usize;
        }
        (lo, hi)
    }

    /// Element ids whose buckets overlap `query` (a superset; may contain duplicates removed here).
    pub fn query(&self, query: &Aabb) -> Vec<usize> {
        let (lo, hi) = self.range(query);
        let mut out = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    out.extend_from_slice(&self.buckets[self.index(i, j, k)]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
