//! Indexed triangle meshes and their OBJ-style text form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Sum of triangle areas.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                (b - a).cross(c - a).length() * 0.5
            })
            .sum()
    }

    /// `v`, `vn` and 1-based `f i//i j//j k//k` lines. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for n in &self.normals {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
        }
        s
    }

    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut mesh = TriangleMesh::default();
        let bad =
            |line: usize, what: &str| Error::format("<mesh>", format!("line {}: {what}", line + 1));
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let Some(tag) = it.next() else { continue };
            match tag {
                "v" | "vn" => {
                    let vals: Vec<f64> = it
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(lineno, "bad coordinate"))?;
                    if vals.len() != 3 {
                        return Err(bad(lineno, "expected 3 coordinates"));
                    }
                    let v = Vec3::new(vals[0], vals[1], vals[2]);
                    if tag == "v" {
                        mesh.vertices.push(v);
                    } else {
                        mesh.normals.push(v);
                    }
                }
                "f" => {
                    let idx: Vec<u32> = it
                        .map(|tok| tok.split('/').next().unwrap_or("").parse::<u32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(lineno, "bad face index"))?;
                    if idx.len() != 3 || idx.contains(&0) {
                        return Err(bad(lineno, "expected 3 one-based indices"));
                    }
                    mesh.triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
                }
                _ if tag.starts_with('#') => {}
                _ => return Err(bad(lineno, "unknown record")),
            }
        }
        let n = mesh.vertices.len() as u32;
        if mesh.triangles.iter().flatten().any(|&i| i >= n) {
            return Err(Error::format("<mesh>", "face index out of range"));
        }
        Ok(mesh)
    }
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh.to_obj())?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    TriangleMesh::parse_obj(&text).map_err(|e| match e {
        Error::Format { reason, .. } => Error::format(path, reason),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mesh_has_no_vertex_lines() {
        assert_eq!(TriangleMesh::default().to_obj(), "");
    }

    #[test]
    fn single_triangle_round_trip() {
        let mesh = TriangleMesh {
            vertices: vec![
                Vec3::new(0.1, 0.2, 0.3),
                Vec3::new(1.0 / 3.0, 0.0, 0.0),
                Vec3::new(0.0, 1e-9, 2.5),
            ],
            normals: vec![Vec3::Z; 3],
            triangles: vec![[0, 1, 2]],
        };
        assert_eq!(TriangleMesh::parse_obj(&mesh.to_obj()).unwrap(), mesh);
    }

    #[test]
    fn rejects_out_of_range_faces() {
        assert!(TriangleMesh::parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }
}
