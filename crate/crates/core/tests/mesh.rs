use fbi_core::mesh::{build_box_mesh, hex, read_mesh, write_mesh, Aabb, BoxFace, FluidMesh, PatchSpec, TOL_GEO};
use fbi_core::{FbiError, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn channel() -> PatchSpec {
    PatchSpec::new()
        .with("inflow", &[BoxFace::XMin])
        .with("outflow", &[BoxFace::XMax])
        .with("walls", &[BoxFace::YMin, BoxFace::YMax, BoxFace::ZMin, BoxFace::ZMax])
}

/// Box mesh with interior nodes moved by up to `amp` times the cell size per
/// component. `amp < 1/6` keeps every corner Jacobian diagonally dominant.
fn distorted(counts: [usize; 3], amp: f64, seed: u64) -> FluidMesh {
    let base = build_box_mesh([1.0, 1.0, 1.0], counts, &PatchSpec::per_face()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = Vec3::new(1.0 / counts[0] as f64, 1.0 / counts[1] as f64, 1.0 / counts[2] as f64);
    let nodes: Vec<Vec3> = base
        .nodes()
        .iter()
        .map(|p| {
            let interior = (0..3).all(|c| p[c] > 1e-12 && p[c] < 1.0 - 1e-12);
            if interior {
                p + Vec3::from_fn(|c, _| amp * h[c] * rng.random_range(-1.0..1.0))
            } else {
                *p
            }
        })
        .collect();
    FluidMesh::new(nodes, base.elements().to_vec(), base.patches().to_vec()).unwrap()
}

fn contains(mesh: &FluidMesh, e: usize, x: &Vec3) -> Option<Vec3> {
    mesh.inverse_map(e, x).filter(|xi| xi.amax() <= 1.0 + TOL_GEO)
}

#[test]
fn box_mesh_layout() {
    let m = build_box_mesh([3.0, 1.0, 1.0], [24, 8, 8], &channel()).unwrap();
    assert_eq!(m.num_nodes(), 25 * 9 * 9);
    assert_eq!(m.num_elements(), 24 * 8 * 8);
    assert_eq!(m.boundary_face_count(), 2 * (24 * 8 * 2 + 8 * 8));
    assert!((m.h_fluid() - 0.125).abs() < 1e-15);
    // x varies fastest
    assert_eq!(m.nodes()[1], Vec3::new(0.125, 0.0, 0.0));
    assert_eq!(m.nodes()[25], Vec3::new(0.0, 0.125, 0.0));
    assert_eq!(m.patch("inflow").unwrap().faces.len(), 64);
    assert_eq!(m.patch("walls").unwrap().faces.len(), 4 * 24 * 8);
    assert_eq!(m.patch_nodes("inflow").unwrap().len(), 81);
    assert!(m.patch("nope").is_none());

    // outward orientation of patch faces
    for p in m.patches() {
        for f in &p.faces {
            let x = f.map(|n| m.nodes()[n]);
            let normal = (x[2] - x[0]).cross(&(x[3] - x[1]));
            let c = (x[0] + x[1] + x[2] + x[3]) / 4.0;
            let center = Vec3::new(1.5, 0.5, 0.5);
            assert!(normal.dot(&(c - center)) > 0.0, "inward face in {}", p.name);
        }
    }
}

#[test]
fn mesh_file_round_trip_is_exact() {
    let m = distorted([3, 4, 2], 0.3, 7);
    let mut buf = Vec::new();
    write_mesh(&m, &mut buf).unwrap();
    let back = read_mesh(buf.as_slice()).unwrap();
    assert_eq!(back.nodes(), m.nodes());
    assert_eq!(back.elements(), m.elements());
    assert_eq!(back.patches(), m.patches());
    let mut again = Vec::new();
    write_mesh(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn mesh_file_errors_carry_line_numbers() {
    let m = build_box_mesh([1.0, 1.0, 1.0], [1, 1, 1], &PatchSpec::per_face()).unwrap();
    let mut buf = Vec::new();
    write_mesh(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();

    let line_of = |err: FbiError| match err {
        FbiError::MeshFile { line, .. } => line,
        e => panic!("unexpected error {e}"),
    };

    let bad_number = text.replacen("1 1 0 0", "1 x 0 0", 1);
    assert_eq!(line_of(read_mesh(bad_number.as_bytes()).unwrap_err()), 3);

    let bad_id = text.replacen("\n2 0 1 0", "\n5 0 1 0", 1);
    assert_eq!(line_of(read_mesh(bad_id.as_bytes()).unwrap_err()), 4);

    let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    assert!(matches!(
        read_mesh(truncated.as_bytes()),
        Err(FbiError::MeshFile { .. })
    ));

    // comments and blank lines are skipped
    let commented = format!("# header\n\n{text}");
    read_mesh(commented.as_bytes()).unwrap();

    // dropping a patch leaves boundary faces unassigned
    let cut = text.find("PATCH z_max").unwrap();
    let err = read_mesh(text[..cut].as_bytes()).unwrap_err();
    assert!(err.to_string().contains("not assigned"), "{err}");

    // element referencing a node that does not exist
    let start = text.find("HEX8 1\n").unwrap() + "HEX8 1\n".len();
    let end = start + text[start..].find('\n').unwrap();
    let last_space = text[start..end].rfind(' ').unwrap();
    let bad_node = format!("{} 99{}", &text[..start + last_space], &text[end..]);
    let err = read_mesh(bad_node.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("missing node 99"), "{err}");
}

#[test]
fn shared_face_points_go_to_lowest_element() {
    let m = build_box_mesh([2.0, 1.0, 1.0], [2, 1, 1], &PatchSpec::per_face()).unwrap();
    let loc = m.locate_point(&Vec3::new(1.0, 0.3, 0.6), None).unwrap();
    assert_eq!(loc.element, 0);
    assert!((loc.xi.x - 1.0).abs() < 1e-12);
    // a hint is only accepted for interior points
    let loc = m.locate_point(&Vec3::new(1.0, 0.3, 0.6), Some(1)).unwrap();
    assert_eq!(loc.element, 0);
    let loc = m.locate_point(&Vec3::new(1.5, 0.3, 0.6), Some(1)).unwrap();
    assert_eq!(loc.element, 1);
    assert!(m.locate_point(&Vec3::new(2.0 + 1e-6, 0.5, 0.5), None).is_none());
    assert!(m.locate_point(&Vec3::new(2.0, 0.5, 0.5), None).is_some());
}

#[test]
fn locate_matches_brute_force_on_distorted_mesh() {
    let m = distorted([4, 3, 5], 0.25, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let x = Vec3::from_fn(|_, _| rng.random_range(-0.05..1.05));
        let brute = (0..m.num_elements()).find_map(|e| contains(&m, e, &x).map(|xi| (e, xi)));
        let found = m.locate_point(&x, None);
        match (brute, found) {
            (None, None) => {}
            (Some((e, _)), Some(loc)) => {
                assert_eq!(loc.element, e, "point {x:?}");
                let back = hex::map(&m.element_coords(e), &loc.xi);
                assert!((back - x).norm() < 1e-10);
            }
            (b, f) => panic!("point {x:?}: brute force {b:?}, search {f:?}"),
        }
    }
}

#[test]
fn candidates_are_sorted_superset_of_intersecting_boxes() {
    let m = distorted([5, 5, 5], 0.2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let a = Vec3::from_fn(|_, _| rng.random_range(-0.2..1.2));
        let b = a + Vec3::from_fn(|_, _| rng.random_range(0.0..0.3));
        let q = Aabb::from_points([&a, &b]);
        let r = rng.random_range(0.0..0.1);
        let cands = m.inflate_bbox_candidates(&q, r);
        assert!(cands.windows(2).all(|w| w[0] < w[1]));
        let brute: Vec<usize> = (0..m.num_elements())
            .filter(|&e| m.element_bounds(e).intersects(&q.inflated(r)))
            .collect();
        assert_eq!(cands, brute);
    }
}

#[test]
fn inverted_elements_are_rejected() {
    let base = build_box_mesh([1.0, 1.0, 1.0], [1, 1, 1], &PatchSpec::per_face()).unwrap();
    let mut nodes = base.nodes().to_vec();
    nodes[7] = Vec3::new(-1.0, -1.0, -1.0);
    let err = FluidMesh::new(nodes, base.elements().to_vec(), base.patches().to_vec()).unwrap_err();
    assert!(matches!(err, FbiError::Element { element: 0, .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_map_recovers_reference_coordinates(
        seed in 0u64..1000,
        xi in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let m = distorted([2, 2, 2], 0.15, seed);
        let xi = Vec3::new(xi[0], xi[1], xi[2]);
        for e in 0..m.num_elements() {
            let x = hex::map(&m.element_coords(e), &xi);
            let back = m.inverse_map(e, &x).unwrap();
            prop_assert!((back - xi).norm() < 1e-9, "element {}: {:?} vs {:?}", e, back, xi);
        }
    }

    #[test]
    fn located_points_lie_in_their_element(
        seed in 0u64..1000,
        p in prop::array::uniform3(0.0f64..1.0),
    ) {
        let m = distorted([3, 3, 3], 0.15, seed);
        let x = Vec3::new(p[0], p[1], p[2]);
        let loc = m.locate_point(&x, None);
        prop_assert!(loc.is_some(), "interior point {:?} not found", x);
        let loc = loc.unwrap();
        prop_assert!(loc.xi.amax() <= 1.0 + TOL_GEO);
        // no lower element contains it
        for e in 0..loc.element {
            prop_assert!(contains(&m, e, &x).is_none());
        }
    }

    #[test]
    fn round_trip_any_box(nx in 1usize..4, ny in 1usize..4, nz in 1usize..4, lx in 0.1f64..10.0) {
        let m = build_box_mesh([lx, 1.0, 2.0], [nx, ny, nz], &channel()).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back.nodes(), m.nodes());
        prop_assert_eq!(back.patches(), m.patches());
    }
}
