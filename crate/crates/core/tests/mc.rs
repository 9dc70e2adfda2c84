mod common;

use std::collections::{HashMap, HashSet};

use common::*;
use proptest::prelude::*;
use rand::Rng;
use volren_core::mc::{
    cube_index, edge_vertex, extract_cell, extract_isosurface, extract_isosurface_with, load_mesh,
    save_mesh, ExtractMode, IsoConfig, TriangleMesh, EDGE_TABLE, TRI_TABLE,
};
use volren_core::volume::{PhantomKind, PhantomParams};
use volren_core::{ScalarVolume, Vec3};

fn bits(v: Vec3) -> [u64; 3] {
    v.to_array().map(f64::to_bits)
}

fn check_mesh_invariants(mesh: &TriangleMesh) {
    assert_eq!(mesh.normals.len(), mesh.vertices.len());
    for n in &mesh.normals {
        assert!((n.length() - 1.0).abs() <= 1e-6, "normal {n:?}");
    }
    let count = mesh.vertices.len() as u32;
    for t in &mesh.triangles {
        assert!(t.iter().all(|&i| i < count), "{t:?}");
        assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2], "{t:?}");
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
        assert!((b - a).cross(c - a) != Vec3::ZERO);
    }
    // every vertex is referenced
    let used: HashSet<u32> = mesh.triangles.iter().flatten().copied().collect();
    assert_eq!(used.len(), mesh.vertices.len());
}

/// Grid edges whose endpoints fall on opposite sides of `t`.
fn crossed_edges(vol: &ScalarVolume, t: f64) -> usize {
    let [nx, ny, nz] = vol.dims();
    let inside = |i, j, k| vol.get(i, j, k) >= t;
    let mut n = 0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let here = inside(i, j, k);
                if i + 1 < nx && inside(i + 1, j, k) != here {
                    n += 1;
                }
                if j + 1 < ny && inside(i, j + 1, k) != here {
                    n += 1;
                }
                if k + 1 < nz && inside(i, j, k + 1) != here {
                    n += 1;
                }
            }
        }
    }
    n
}

fn sphere_volume(n: usize) -> ScalarVolume {
    phantom(PhantomKind::Sphere, n)
}

#[test]
fn cube_index_examples() {
    assert_eq!(cube_index(&[0.0; 8], 0.5), 0);
    assert_eq!(cube_index(&[0.9; 8], 0.5), 255);
    let mut v = [0.0; 8];
    v[0] = 0.7;
    assert_eq!(cube_index(&v, 0.5), 1);
    v[0] = 0.5;
    assert_eq!(cube_index(&v, 0.5), 1, "ties count as inside");
}

#[test]
fn edge_vertex_examples() {
    let (a, b) = (Vec3::new(1.0, -2.0, 3.0), Vec3::new(5.0, 6.0, -1.0));
    assert_eq!(edge_vertex(a, b, 0.0, 1.0, 0.5), (a + b) * 0.5);
    assert_eq!(edge_vertex(a, b, 0.0, 1.0, 0.0), a);
    assert_eq!(
        edge_vertex(Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0), 2.0, 6.0, 3.0),
        Vec3::new(1.0, 0.0, 0.0)
    );
}

#[test]
fn case_tables_are_consistent() {
    assert_eq!(EDGE_TABLE[0], 0);
    assert_eq!(EDGE_TABLE[255], 0);
    assert_eq!(TRI_TABLE[0][0], -1);
    assert_eq!(TRI_TABLE[255][0], -1);
    for k in 0..256 {
        assert_eq!(EDGE_TABLE[k], EDGE_TABLE[255 - k], "case {k}");
        let mut listed = 0u16;
        for &e in TRI_TABLE[k].iter().take_while(|&&e| e >= 0) {
            listed |= 1 << e;
        }
        assert_eq!(listed, EDGE_TABLE[k], "case {k}");
        let tris = TRI_TABLE[k].iter().take_while(|&&e| e >= 0).count();
        assert_eq!(tris % 3, 0);
        assert!(tris <= 15);
    }
}

#[test]
fn single_corner_gives_one_triangle() {
    for corner in 0..8 {
        let mut data = vec![0.0; 8];
        let (i, j, k) = match corner {
            0 => (0, 0, 0),
            1 => (1, 0, 0),
            2 => (1, 1, 0),
            3 => (0, 1, 0),
            4 => (0, 0, 1),
            5 => (1, 0, 1),
            6 => (1, 1, 1),
            _ => (0, 1, 1),
        };
        data[i + 2 * (j + 2 * k)] = 1.0;
        let vol = ScalarVolume::new([2, 2, 2], [1.0; 3], data).unwrap();
        let mesh = extract_isosurface(&vol, &IsoConfig::new(0.5));
        assert_eq!(mesh.triangles.len(), 1, "corner {corner}");
        let inside = vol.voxel_center(i, j, k);
        let [a, b, c] = mesh.triangle(0);
        // every vertex sits at an edge midpoint next to the inside corner
        for v in [a, b, c] {
            assert!(((v - inside).length() - 0.5).abs() < 1e-12);
        }
        // winding and normals face away from the inside corner
        let centroid = (a + b + c) * (1.0 / 3.0);
        assert!((b - a).cross(c - a).dot(centroid - inside) > 0.0);
        for n in &mesh.normals {
            assert!(n.dot(centroid - inside) > 0.0);
        }
    }
}

#[test]
fn constant_volume_is_empty() {
    let vol = ScalarVolume::new([5; 3], [1.0; 3], vec![2.0; 125]).unwrap();
    for t in [1.0, 2.0, 3.0] {
        assert!(extract_isosurface(&vol, &IsoConfig::new(t)).is_empty());
    }
}

#[test]
fn sphere_vertices_and_normals_match_analytic_sphere() {
    let n = 64;
    let vol = sphere_volume(n);
    let (mesh, stats) = extract_isosurface_with(&vol, &IsoConfig::new(0.0), ExtractMode::Serial);
    assert!(!mesh.is_empty());
    assert!(stats.cells_intersected > 0);
    check_mesh_invariants(&mesh);

    let center = vol.center();
    let radius = PhantomParams::default().radius * n as f64;
    let diag = 3f64.sqrt();
    let cos5 = 5f64.to_radians().cos();
    let mut worst_r = 0.0f64;
    let mut worst_cos = 1.0f64;
    for (v, nrm) in mesh.vertices.iter().zip(&mesh.normals) {
        let d = *v - center;
        worst_r = worst_r.max((d.length() - radius).abs());
        worst_cos = worst_cos.min(nrm.dot(d.normalize()));
    }
    assert!(worst_r <= diag, "radius error {worst_r}");
    assert!(
        worst_cos >= cos5,
        "normal error {} deg",
        worst_cos.acos().to_degrees()
    );

    // closed surface: area near 4 pi r^2
    let area = 4.0 * std::f64::consts::PI * radius * radius;
    assert!(
        (mesh.area() / area - 1.0).abs() < 0.02,
        "area {}",
        mesh.area()
    );
    // winding agrees with the normals
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t);
        assert!((b - a).cross(c - a).dot((a + b + c) * (1.0 / 3.0) - center) > 0.0);
    }
}

#[test]
fn closed_surface_has_every_edge_shared_twice() {
    let vol = sphere_volume(32);
    let mesh = extract_isosurface(&vol, &IsoConfig::new(0.0));
    let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
    for t in &mesh.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            // directed edges cancel against their reverse
            *edges.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
        }
    }
    assert!(edges.values().all(|&c| c == 0));
    // Euler characteristic of a sphere
    let e = edges.len() as i64;
    let chi = mesh.vertices.len() as i64 - e + mesh.triangles.len() as i64;
    assert_eq!(chi, 2);
}

#[test]
fn shared_edge_vertices_are_bit_identical() {
    let vol = random_volume([9, 8, 7], 17);
    let cfg = IsoConfig::new(0.5);
    let (mesh, stats) = extract_isosurface_with(&vol, &cfg, ExtractMode::Parallel);
    assert_eq!(stats.degenerate_dropped, 0);
    let [nx, ny, nz] = vol.dims();
    let mut from_cells: HashSet<[u64; 3]> = HashSet::new();
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                for tri in extract_cell(&vol, &cfg, [i, j, k]) {
                    from_cells.extend(tri.iter().map(|&v| bits(v)));
                }
            }
        }
    }
    let global: HashSet<[u64; 3]> = mesh.vertices.iter().map(|&v| bits(v)).collect();
    // one vertex per crossed grid edge, however many cells share it
    assert_eq!(global.len(), mesh.vertices.len());
    assert_eq!(from_cells, global);
    assert_eq!(global.len(), crossed_edges(&vol, 0.5));
}

#[test]
fn extraction_modes_agree() {
    for (dims, seed) in [([20, 17, 33], 1), ([8, 8, 8], 2), ([5, 40, 19], 3)] {
        let vol = random_volume(dims, seed);
        let cfg = IsoConfig::new(0.45);
        let serial = extract_isosurface_with(&vol, &cfg, ExtractMode::Serial);
        let parallel = extract_isosurface_with(&vol, &cfg, ExtractMode::Parallel);
        let streaming = extract_isosurface_with(&vol, &cfg, ExtractMode::Streaming);
        assert_eq!(serial.0, parallel.0);
        assert_eq!(serial.0, streaming.0);
        assert_eq!(serial.1.cells_intersected, parallel.1.cells_intersected);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| extract_isosurface(&vol, &cfg));
        assert_eq!(single, parallel.0);
    }
}

#[test]
fn streaming_memory_is_independent_of_depth() {
    let peaks: Vec<usize> = [8, 32, 128]
        .iter()
        .map(|&nz| {
            let vol = random_volume([16, 12, nz], nz as u64);
            extract_isosurface_with(&vol, &IsoConfig::new(0.5), ExtractMode::Streaming)
                .1
                .peak_cache_entries
        })
        .collect();
    assert!(peaks.iter().all(|&p| p == peaks[0]), "{peaks:?}");
    assert!(peaks[0] <= 8 * 16 * 12, "{peaks:?}");
}

#[test]
fn complement_gives_same_vertices_reversed() {
    let vol = random_volume([10, 9, 11], 5);
    let neg = vol.map(|v| -v);
    let t = 0.37;
    let a = extract_isosurface(&vol, &IsoConfig::new(t));
    let b = extract_isosurface(&neg, &IsoConfig::new(-t));
    assert_eq!(a.vertices.len(), b.vertices.len());
    let normals_a: HashMap<[u64; 3], Vec3> = a
        .vertices
        .iter()
        .zip(&a.normals)
        .map(|(v, n)| (bits(*v), *n))
        .collect();
    for (v, n) in b.vertices.iter().zip(&b.normals) {
        let na = normals_a
            .get(&bits(*v))
            .expect("vertex missing from complement");
        assert!((*na + *n).length() < 1e-12, "{na:?} vs {n:?}");
    }
    // ambiguous faces triangulate differently under complement, so only
    // vertices and normals are compared
}

#[test]
fn translation_moves_vertices_by_one_voxel() {
    for spacing in [[1.0; 3], [0.7, 1.3, 0.9]] {
        let n = 10;
        let base = random_volume([n; 3], 8);
        // at least two zero planes on each side keep the one-sided border
        // gradients away from crossed edges
        let pad = |shift: usize| {
            ScalarVolume::from_fn([n + 5, n, n], spacing, |i, j, k| {
                if i < shift || i - shift >= n {
                    0.0
                } else {
                    base.get(i - shift, j, k)
                }
            })
            .unwrap()
        };
        let cfg = IsoConfig::new(0.6);
        let a = extract_isosurface_with(&pad(2), &cfg, ExtractMode::Serial).0;
        let b = extract_isosurface_with(&pad(3), &cfg, ExtractMode::Serial).0;
        // serial extraction visits the shifted cells in the same order
        assert_eq!(a.triangles, b.triangles);
        let step = Vec3::new(spacing[0], 0.0, 0.0);
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            assert!((*va + step - *vb).length() <= 1e-12, "{va:?} {vb:?}");
        }
        for (na, nb) in a.normals.iter().zip(&b.normals) {
            assert!((*na - *nb).length() <= 1e-12, "{na:?} {nb:?}");
        }
    }
}

#[test]
fn mesh_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");

    save_mesh(&TriangleMesh::default(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.lines().any(|l| l.starts_with("v ")));
    assert!(load_mesh(&path).unwrap().is_empty());

    let mesh = extract_isosurface(&sphere_volume(24), &IsoConfig::new(0.0));
    save_mesh(&mesh, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.triangles.len(), mesh.triangles.len());
    assert_eq!(back, mesh);

    let text = std::fs::read_to_string(&path).unwrap();
    let first_face = text.lines().find(|l| l.starts_with("f ")).unwrap();
    assert!(first_face
        .split_whitespace()
        .skip(1)
        .all(|t| !t.starts_with('0')));
}

#[test]
fn malformed_mesh_files_rejected() {
    for text in [
        "v 1 2\n",
        "f 1 2 3\n",
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n",
        "x 1\n",
    ] {
        assert!(TriangleMesh::parse_obj(text).is_err(), "{text:?}");
    }
}

#[test]
fn ties_at_threshold_drop_degenerate_triangles() {
    // integer-valued field hit exactly at the threshold
    let vol = ScalarVolume::from_fn([6; 3], [1.0; 3], |i, j, k| ((i + j + k) % 3) as f64).unwrap();
    let (mesh, _) = extract_isosurface_with(&vol, &IsoConfig::new(1.0), ExtractMode::Serial);
    check_mesh_invariants(&mesh);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_field_vertices_lie_on_the_plane(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -1.0f64..1.0,
        sx in 0.5f64..2.0, sy in 0.5f64..2.0, sz in 0.5f64..2.0,
    ) {
        prop_assume!(a.abs() + b.abs() + c.abs() > 0.1);
        let vol = ScalarVolume::from_fn([7, 6, 8], [sx, sy, sz], |i, j, k| {
            a * i as f64 + b * j as f64 + c * k as f64 + d
        })
        .unwrap();
        let t = a * 2.7 + b * 2.2 + c * 3.1 + d;
        let mesh = extract_isosurface(&vol, &IsoConfig::new(t));
        for v in &mesh.vertices {
            let r = vol.sample_trilinear(*v) - t;
            prop_assert!(r.abs() <= 1e-9, "residual {}", r);
        }
    }

    #[test]
    fn random_meshes_satisfy_invariants(seed in 0u64..10_000, t in 0.1f64..0.9) {
        let mut r = rng(seed);
        let dims = [r.random_range(2..9), r.random_range(2..9), r.random_range(2..9)];
        let vol = random_volume(dims, seed);
        let mesh = extract_isosurface(&vol, &IsoConfig::new(t));
        check_mesh_invariants(&mesh);
        // each vertex lies on a segment between two neighbouring voxel centers
        for v in &mesh.vertices {
            let c = vol.world_to_index(*v).to_array();
            let off_grid = c.iter().filter(|x| (*x - x.round()).abs() > 1e-12).count();
            prop_assert!(off_grid <= 1);
        }
    }
}
