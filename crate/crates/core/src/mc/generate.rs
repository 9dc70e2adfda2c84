//! Builds the 256-entry case tables from the 15 base configurations by
//! applying the 24 cube rotations and inside/outside complement, then
//! orients every triangle so its winding faces away from the inside
//! corners.

/// Corner offsets `(x, y, z)` in the classic numbering.
pub const CORNERS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Corner pairs joined by each of the 12 cube edges.
pub const EDGES: [[u8; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// The 15 base configurations: corner mask and triangles as edge triples.
pub const BASE_CASES: [(u8, &[u8]); 15] = [
    (0, &[]),
    (1, &[0, 8, 3]),
    (3, &[1, 8, 3, 9, 8, 1]),
    (5, &[0, 8, 3, 1, 2, 10]),
    (7, &[2, 8, 3, 2, 10, 8, 10, 9, 8]),
    (15, &[9, 8, 10, 10, 8, 11]),
    (20, &[1, 2, 10, 8, 4, 7]),
    (21, &[3, 4, 7, 3, 0, 4, 1, 2, 10]),
    (23, &[2, 10, 9, 2, 9, 7, 2, 7, 3, 7, 9, 4]),
    (26, &[9, 0, 1, 8, 4, 7, 2, 3, 11]),
    (27, &[4, 7, 11, 9, 4, 11, 9, 11, 2, 9, 2, 1]),
    (29, &[1, 11, 10, 1, 4, 11, 1, 0, 4, 7, 11, 4]),
    (30, &[4, 7, 8, 9, 0, 11, 9, 11, 10, 11, 0, 3]),
    (60, &[9, 5, 8, 8, 5, 7, 10, 1, 3, 10, 3, 11]),
    (90, &[0, 1, 9, 4, 7, 8, 2, 3, 11, 5, 10, 6]),
];

/// All 24 proper rotations of the cube as signed permutation matrices.
fn rotations() -> Vec<[[i8; 3]; 3]> {
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for p in perms {
        for signs in 0..8u8 {
            let mut m = [[0i8; 3]; 3];
            for (row, &col) in p.iter().enumerate() {
                m[row][col] = if signs >> row & 1 == 1 { -1 } else { 1 };
            }
            if det(&m) == 1 {
                out.push(m);
            }
        }
    }
    out
}

fn det(m: &[[i8; 3]; 3]) -> i32 {
    let m = m.map(|r| r.map(i32::from));
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn corner_index(p: [u8; 3]) -> usize {
    CORNERS
        .iter()
        .position(|&c| c == p)
        .expect("corner on unit cube")
}

fn edge_index(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| {
            let (x, y) = (usize::from(e[0]), usize::from(e[1]));
            (x, y) == (a, b) || (x, y) == (b, a)
        })
        .expect("corners share an edge")
}

/// Corner permutation induced by a rotation about the cube center.
fn corner_map(m: &[[i8; 3]; 3]) -> [usize; 8] {
    let mut out = [0; 8];
    for (i, c) in CORNERS.iter().enumerate() {
        // doubled coordinates centered on the cube: -1 or +1
        let q = c.map(|v| 2 * i8::try_from(v).unwrap() - 1);
        let mut r = [0u8; 3];
        for (row, rv) in r.iter_mut().enumerate() {
            let s: i8 = (0..3).map(|k| m[row][k] * q[k]).sum();
            *rv = u8::try_from((s + 1) / 2).unwrap();
        }
        out[i] = corner_index(r);
    }
    out
}

pub struct Tables {
    pub edge_table: [u16; 256],
    pub tri_table: [[i8; 16]; 256],
}

pub fn generate() -> Tables {
    let mut tris: Vec<Option<Vec<u8>>> = vec![None; 256];
    let rots = rotations();
    debug_assert_eq!(rots.len(), 24);
    for &(mask, base) in &BASE_CASES {
        for m in &rots {
            let cmap = corner_map(m);
            let mut idx = 0usize;
            for (c, &to) in cmap.iter().enumerate() {
                if mask >> c & 1 == 1 {
                    idx |= 1 << to;
                }
            }
            if tris[idx].is_none() {
                let mapped = base
                    .iter()
                    .map(|&e| {
                        let [a, b] = EDGES[usize::from(e)];
                        edge_index(cmap[usize::from(a)], cmap[usize::from(b)]) as u8
                    })
                    .collect();
                tris[idx] = Some(mapped);
            }
        }
    }
    for idx in 0..256 {
        if tris[idx].is_none() {
            tris[idx] = tris[255 - idx].clone();
        }
    }

    let mut edge_table = [0u16; 256];
    let mut tri_table = [[-1i8; 16]; 256];
    for (idx, entry) in tris.into_iter().enumerate() {
        let mut list = entry.expect("every configuration reachable");
        for t in list.chunks_exact_mut(3) {
            orient(idx, t);
        }
        for (slot, &e) in list.iter().enumerate() {
            tri_table[idx][slot] = e as i8;
            edge_table[idx] |= 1 << e;
        }
    }
    Tables {
        edge_table,
        tri_table,
    }
}

/// Reorders a triangle so that, with vertices at edge midpoints, its
/// right-handed normal points from the inside corners towards the outside.
fn orient(mask: usize, tri: &mut [u8]) {
    let mid = |e: u8| -> [f64; 3] {
        let [a, b] = EDGES[usize::from(e)];
        let (pa, pb) = (CORNERS[usize::from(a)], CORNERS[usize::from(b)]);
        [0, 1, 2].map(|k| (f64::from(pa[k]) + f64::from(pb[k])) * 0.5)
    };
    let outward = |e: u8| -> [f64; 3] {
        let [a, b] = EDGES[usize::from(e)];
        let (inside, outside) = if mask >> a & 1 == 1 { (a, b) } else { (b, a) };
        let (pi, po) = (CORNERS[usize::from(inside)], CORNERS[usize::from(outside)]);
        [0, 1, 2].map(|k| f64::from(po[k]) - f64::from(pi[k]))
    };
    let (p0, p1, p2) = (mid(tri[0]), mid(tri[1]), mid(tri[2]));
    let u = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let v = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let mut dir = [0.0; 3];
    for &e in tri.iter() {
        let o = outward(e);
        for k in 0..3 {
            dir[k] += o[k];
        }
    }
    let dot = n[0] * dir[0] + n[1] * dir[1] + n[2] * dir[2];
    assert!(
        dot != 0.0,
        "triangle orientation undetermined for case {mask}"
    );
    if dot < 0.0 {
        tri.swap(1, 2);
    }
}

/// Renders the tables as Rust source, matching the checked-in file.
pub fn render_source(t: &Tables) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    s.push_str("// Generated by mc::generate; do not edit by hand.\n\n");
    s.push_str("#[rustfmt::skip]\npub const EDGE_TABLE: [u16; 256] = [\n");
    for row in t.edge_table.chunks(8) {
        s.push_str("   ");
        for v in row {
            let _ = write!(s, " 0x{v:03x},");
        }
        s.push('\n');
    }
    s.push_str("];\n\n#[rustfmt::skip]\npub const TRI_TABLE: [[i8; 16]; 256] = [\n");
    for row in &t.tri_table {
        s.push_str("    [");
        let items: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&items.join(", "));
        s.push_str("],\n");
    }
    s.push_str("];\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_tables_match_generator() {
        let src = render_source(&generate());
        assert_eq!(src, include_str!("tables.rs"));
    }

    #[test]
    fn rotation_group_has_24_elements() {
        let rots = rotations();
        assert_eq!(rots.len(), 24);
        let maps: std::collections::HashSet<[usize; 8]> = rots.iter().map(corner_map).collect();
        assert_eq!(maps.len(), 24);
    }

    #[test]
    fn table_invariants() {
        let t = generate();
        assert_eq!(t.edge_table[0], 0);
        assert_eq!(t.edge_table[255], 0);
        for k in 0..256 {
            assert_eq!(t.edge_table[k], t.edge_table[255 - k], "complement {k}");
            // the used edges are exactly the sign-changing ones
            let mut crossing = 0u16;
            for (e, &[a, b]) in EDGES.iter().enumerate() {
                if (k >> a & 1) != (k >> b & 1) {
                    crossing |= 1 << e;
                }
            }
            assert_eq!(t.edge_table[k], crossing, "case {k}");
            let row = &t.tri_table[k];
            let n = row.iter().position(|&v| v < 0).unwrap_or(16);
            assert_eq!(n % 3, 0);
            assert!(n <= 15);
            assert!(row[n..].iter().all(|&v| v == -1));
            for &e in &row[..n] {
                assert!(t.edge_table[k] >> e & 1 == 1);
            }
        }
    }
}
