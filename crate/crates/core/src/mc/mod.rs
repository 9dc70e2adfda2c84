//! Marching cubes isosurface extraction.
//!
//! Cells are marched one z layer at a time. Vertices are cached per grid
//! edge in two plane-sized caches plus one for the z edges between them,
//! so working memory is `O(nx * ny)` regardless of depth, and every edge
//! vertex is computed exactly once from its lower endpoint. Parallel
//! extraction splits the layers into slabs and merges them in order, which
//! reproduces the serial mesh exactly.

pub mod generate;
mod mesh;
mod tables;

pub use mesh::{load_mesh, save_mesh, TriangleMesh};
pub use tables::{EDGE_TABLE, TRI_TABLE};

use std::collections::HashMap;

use rayon::prelude::*;

use crate::math::Vec3;
use crate::volume::ScalarVolume;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsoConfig {
    /// Samples `>= threshold` are inside.
    pub threshold: f64,
}

impl IsoConfig {
    pub fn new(threshold: f64) -> Self {
        IsoConfig { threshold }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtractMode {
    Serial,
    Parallel,
    /// Serial, reporting peak cache usage.
    Streaming,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub cells_intersected: usize,
    /// Largest number of vertex-cache slots alive at once.
    pub peak_cache_entries: usize,
    pub degenerate_dropped: usize,
}

/// Lower-endpoint offset and axis of each cube edge on the voxel grid.
const EDGE_GRID: [([usize; 3], usize); 12] = [
    ([0, 0, 0], 0),
    ([1, 0, 0], 1),
    ([0, 1, 0], 0),
    ([0, 0, 0], 1),
    ([0, 0, 1], 0),
    ([1, 0, 1], 1),
    ([0, 1, 1], 0),
    ([0, 0, 1], 1),
    ([0, 0, 0], 2),
    ([1, 0, 0], 2),
    ([1, 1, 0], 2),
    ([0, 1, 0], 2),
];

const LAYERS_PER_SLAB: usize = 8;
const EMPTY: u32 = u32::MAX;

/// Case index: bit `i` set iff corner `i` is inside (`>= t`).
pub fn cube_index(values: &[f64; 8], t: f64) -> u8 {
    values
        .iter()
        .enumerate()
        .fold(0u8, |acc, (i, &v)| if v >= t { acc | 1 << i } else { acc })
}

/// Point where the linear interpolant between `(pi, fi)` and `(pj, fj)`
/// equals `t`.
#[inline]
pub fn edge_vertex(pi: Vec3, pj: Vec3, fi: f64, fj: f64, t: f64) -> Vec3 {
    pi + (pj - pi) * ((t - fi) / (fj - fi))
}

pub fn extract_isosurface(vol: &ScalarVolume, cfg: &IsoConfig) -> TriangleMesh {
    extract_isosurface_with(vol, cfg, ExtractMode::Parallel).0
}

pub fn extract_isosurface_with(
    vol: &ScalarVolume,
    cfg: &IsoConfig,
    mode: ExtractMode,
) -> (TriangleMesh, ExtractStats) {
    let layers = vol.dims()[2] - 1;
    let t = cfg.threshold;
    let partials: Vec<Partial> = match mode {
        ExtractMode::Serial | ExtractMode::Streaming => vec![march_layers(vol, t, 0, layers)],
        ExtractMode::Parallel => {
            let slabs: Vec<(usize, usize)> = (0..layers)
                .step_by(LAYERS_PER_SLAB)
                .map(|z0| (z0, (z0 + LAYERS_PER_SLAB).min(layers)))
                .collect();
            slabs
                .into_par_iter()
                .map(|(z0, z1)| march_layers(vol, t, z0, z1))
                .collect()
        }
    };
    let mut stats = ExtractStats {
        cells_intersected: partials.iter().map(|p| p.cells_intersected).sum(),
        peak_cache_entries: partials
            .iter()
            .map(|p| p.peak_cache_entries)
            .max()
            .unwrap_or(0),
        degenerate_dropped: 0,
    };
    let (mesh, dropped) = finish(merge(partials));
    stats.degenerate_dropped = dropped;
    (mesh, stats)
}

/// Triangles of a single cell computed in isolation, for consistency checks.
pub fn extract_cell(vol: &ScalarVolume, cfg: &IsoConfig, cell: [usize; 3]) -> Vec<[Vec3; 3]> {
    let values = corner_values(vol, cell);
    let case = usize::from(cube_index(&values, cfg.threshold));
    TRI_TABLE[case]
        .chunks_exact(3)
        .take_while(|tri| tri[0] >= 0)
        .map(|tri| [0, 1, 2].map(|s| edge_point(vol, cfg.threshold, cell, tri[s] as usize).0))
        .collect()
}

fn corner_values(vol: &ScalarVolume, [i, j, k]: [usize; 3]) -> [f64; 8] {
    generate::CORNERS.map(|c| {
        vol.get(
            i + usize::from(c[0]),
            j + usize::from(c[1]),
            k + usize::from(c[2]),
        )
    })
}

/// Vertex position and interpolated gradient on cube edge `e` of `cell`,
/// always interpolated from the edge's lower grid endpoint.
fn edge_point(vol: &ScalarVolume, t: f64, cell: [usize; 3], e: usize) -> (Vec3, Vec3) {
    let (off, axis) = EDGE_GRID[e];
    let a = [cell[0] + off[0], cell[1] + off[1], cell[2] + off[2]];
    let mut b = a;
    b[axis] += 1;
    let (fa, fb) = (vol.get(a[0], a[1], a[2]), vol.get(b[0], b[1], b[2]));
    let (pa, pb) = (
        vol.voxel_center(a[0], a[1], a[2]),
        vol.voxel_center(b[0], b[1], b[2]),
    );
    let p = edge_vertex(pa, pb, fa, fb, t);
    let mu = (t - fa) / (fb - fa);
    let ga = vol.gradient_at(a[0], a[1], a[2]);
    let gb = vol.gradient_at(b[0], b[1], b[2]);
    (p, ga.lerp(gb, mu))
}

struct Partial {
    vertices: Vec<Vec3>,
    gradients: Vec<Vec3>,
    edge_ids: Vec<u64>,
    triangles: Vec<[u32; 3]>,
    cells_intersected: usize,
    peak_cache_entries: usize,
}

fn march_layers(vol: &ScalarVolume, t: f64, z0: usize, z1: usize) -> Partial {
    let [nx, ny, _] = vol.dims();
    let plane = nx * ny;
    // x and y edges of the planes below and above the layer, z edges between
    let mut below = vec![EMPTY; 2 * plane];
    let mut above = vec![EMPTY; 2 * plane];
    let mut zcache = vec![EMPTY; plane];
    let mut out = Partial {
        vertices: Vec::new(),
        gradients: Vec::new(),
        edge_ids: Vec::new(),
        triangles: Vec::new(),
        cells_intersected: 0,
        peak_cache_entries: below.len() + above.len() + zcache.len(),
    };
    for k in z0..z1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let cell = [i, j, k];
                let values = corner_values(vol, cell);
                let case = usize::from(cube_index(&values, t));
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                out.cells_intersected += 1;
                for tri in TRI_TABLE[case]
                    .chunks_exact(3)
                    .take_while(|tri| tri[0] >= 0)
                {
                    let mut idx = [0u32; 3];
                    for (slot, &e) in idx.iter_mut().zip(tri) {
                        let e = e as usize;
                        let (off, axis) = EDGE_GRID[e];
                        let (gi, gj) = (i + off[0], j + off[1]);
                        let node = gi + nx * gj;
                        let entry = match (axis, off[2]) {
                            (2, _) => &mut zcache[node],
                            (a, 0) => &mut below[a * plane + node],
                            (a, _) => &mut above[a * plane + node],
                        };
                        if *entry == EMPTY {
                            let (p, g) = edge_point(vol, t, cell, e);
                            *entry = out.vertices.len() as u32;
                            out.vertices.push(p);
                            out.gradients.push(g);
                            let gk = k + off[2];
                            out.edge_ids
                                .push(3 * (node + plane * gk) as u64 + axis as u64);
                        }
                        *slot = *entry;
                    }
                    out.triangles.push(idx);
                }
            }
        }
        std::mem::swap(&mut below, &mut above);
        above.fill(EMPTY);
        zcache.fill(EMPTY);
    }
    out
}

/// Concatenates slab results in order, sharing vertices on slab borders.
fn merge(mut partials: Vec<Partial>) -> Partial {
    if partials.len() == 1 {
        return partials.pop().unwrap();
    }
    let mut out = Partial {
        vertices: Vec::new(),
        gradients: Vec::new(),
        edge_ids: Vec::new(),
        triangles: Vec::new(),
        cells_intersected: 0,
        peak_cache_entries: 0,
    };
    let mut seen: HashMap<u64, u32> = HashMap::new();
    for p in partials {
        let remap: Vec<u32> = p
            .edge_ids
            .iter()
            .enumerate()
            .map(|(local, &id)| {
                *seen.entry(id).or_insert_with(|| {
                    out.vertices.push(p.vertices[local]);
                    out.gradients.push(p.gradients[local]);
                    out.edge_ids.push(id);
                    (out.vertices.len() - 1) as u32
                })
            })
            .collect();
        out.triangles
            .extend(p.triangles.iter().map(|t| t.map(|v| remap[v as usize])));
    }
    out
}

/// Drops zero-area triangles, compacts vertices and turns gradients into
/// outward unit normals.
fn finish(p: Partial) -> (TriangleMesh, usize) {
    let before = p.triangles.len();
    let triangles: Vec<[u32; 3]> = p
        .triangles
        .into_iter()
        .filter(|t| {
            let [a, b, c] = t.map(|i| p.vertices[i as usize]);
            (b - a).cross(c - a) != Vec3::ZERO
        })
        .collect();
    let dropped = before - triangles.len();

    let mut remap = vec![EMPTY; p.vertices.len()];
    let mut mesh = TriangleMesh::default();
    let mut grads = Vec::new();
    for t in &triangles {
        let mapped = t.map(|v| {
            let slot = &mut remap[v as usize];
            if *slot == EMPTY {
                *slot = mesh.vertices.len() as u32;
                mesh.vertices.push(p.vertices[v as usize]);
                grads.push(p.gradients[v as usize]);
            }
            *slot
        });
        mesh.triangles.push(mapped);
    }

    let mut fallback = vec![Vec3::ZERO; mesh.vertices.len()];
    if grads.iter().any(|g| g.try_normalize().is_none()) {
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            let n = (b - a).cross(c - a);
            for &v in t {
                fallback[v as usize] += n;
            }
        }
    }
    mesh.normals = grads
        .iter()
        .zip(&fallback)
        .map(|(g, f)| {
            (-*g)
                .try_normalize()
                .or_else(|| f.try_normalize())
                .unwrap_or(Vec3::Z)
        })
        .collect();
    (mesh, dropped)
}

#[cfg(test)]
mod tests {
    use super::generate::{CORNERS, EDGES};
    use super::*;

    #[test]
    fn edge_grid_matches_numbering() {
        for (e, &[a, b]) in EDGES.iter().enumerate() {
            let (pa, pb) = (CORNERS[usize::from(a)], CORNERS[usize::from(b)]);
            let lower = [0, 1, 2].map(|k| usize::from(pa[k].min(pb[k])));
            let axis = (0..3).find(|&k| pa[k] != pb[k]).unwrap();
            assert_eq!(EDGE_GRID[e], (lower, axis), "edge {e}");
        }
    }

    #[test]
    fn cube_index_bits() {
        assert_eq!(cube_index(&[0.0; 8], 0.5), 0);
        assert_eq!(cube_index(&[1.0; 8], 0.5), 255);
        let mut v = [0.0; 8];
        v[0] = 1.0;
        assert_eq!(cube_index(&v, 0.5), 1);
        assert_eq!(cube_index(&[0.5; 8], 0.5), 255);
    }

    #[test]
    fn edge_vertex_examples() {
        let (a, b) = (Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0));
        assert_eq!(edge_vertex(a, b, 0.0, 1.0, 0.5), Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(edge_vertex(a, b, 0.0, 1.0, 0.0), a);
        assert_eq!(edge_vertex(a, b, 2.0, 6.0, 3.0), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn one_corner_gives_one_triangle() {
        let mut data = vec![0.0; 8];
        data[0] = 1.0;
        let vol = ScalarVolume::new([2, 2, 2], [1.0; 3], data).unwrap();
        let mesh = extract_isosurface(&vol, &IsoConfig::new(0.5));
        assert_eq!(mesh.triangles.len(), 1);
        assert_eq!(mesh.vertices.len(), 3);
        // the normal points away from the inside corner
        for n in &mesh.normals {
            assert!(n.dot(Vec3::splat(1.0)) > 0.0);
        }
        let [a, b, c] = mesh.triangle(0);
        assert!((b - a).cross(c - a).dot(Vec3::splat(1.0)) > 0.0);
    }

    #[test]
    fn constant_volume_is_empty() {
        let vol = ScalarVolume::new([4, 4, 4], [1.0; 3], vec![3.0; 64]).unwrap();
        assert!(extract_isosurface(&vol, &IsoConfig::new(3.0)).is_empty());
        assert!(extract_isosurface(&vol, &IsoConfig::new(5.0)).is_empty());
    }
}
