//! Surface points visible from the six axis directions, drawn as
//! depth-buffered square splats.

use crate::camera::{Camera, Projection};
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::math::Vec3;
use crate::shading::Phong;
use crate::stats::RenderStats;
use crate::transfer::Rgba;
use crate::volume::ScalarVolume;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryVoxel {
    pub coords: [usize; 3],
    /// Outward unit normal.
    pub normal: Vec3,
    pub density: f64,
}

/// Voxels at or above `threshold` seen first along some axis-parallel
/// line, scanning each line from both ends. Sorted by index, no
/// duplicates. Normals are the negated central-difference gradient, or
/// the scan's facing direction where the gradient vanishes.
pub fn extract_boundary_voxels(vol: &ScalarVolume, threshold: f64) -> Vec<BoundaryVoxel> {
    let dims = vol.dims();
    let mut facing: Vec<Option<Vec3>> = vec![None; vol.len()];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for b in 0..dims[v] {
            for a in 0..dims[u] {
                for forward in [true, false] {
                    let n = dims[axis];
                    let hit = (0..n)
                        .map(|s| if forward { s } else { n - 1 - s })
                        .find(|&s| {
                            let mut c = [0; 3];
                            c[axis] = s;
                            c[u] = a;
                            c[v] = b;
                            vol.get(c[0], c[1], c[2]) >= threshold
                        });
                    if let Some(s) = hit {
                        let mut c = [0; 3];
                        c[axis] = s;
                        c[u] = a;
                        c[v] = b;
                        let slot = &mut facing[vol.index(c[0], c[1], c[2])];
                        if slot.is_none() {
                            let mut dir = [0.0; 3];
                            dir[axis] = if forward { -1.0 } else { 1.0 };
                            *slot = Some(Vec3::from_array(dir));
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                if let Some(fallback) = facing[vol.index(i, j, k)] {
                    let normal = (-vol.gradient_at(i, j, k))
                        .try_normalize()
                        .unwrap_or(fallback);
                    out.push(BoundaryVoxel {
                        coords: [i, j, k],
                        normal,
                        density: vol.get(i, j, k),
                    });
                }
            }
        }
    }
    out
}

/// Half-space removal: points with `(p - point) . normal > 0` are cut away.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuttingPlane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl CuttingPlane {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        let normal = normal
            .try_normalize()
            .ok_or_else(|| Error::InvalidParameter("cutting plane normal is zero".into()))?;
        Ok(CuttingPlane { point, normal })
    }

    #[inline]
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.point).dot(self.normal)
    }
}

/// Draws front-facing boundary voxels as shaded squares covering each
/// voxel's projected extent. With a cutting plane, voxels beyond it are
/// dropped and object voxels straddling it are drawn with their density
/// as gray level.
pub fn render_points(
    vol: &ScalarVolume,
    voxels: &[BoundaryVoxel],
    threshold: f64,
    cam: &Camera,
    plane: Option<&CuttingPlane>,
) -> Result<(FrameBuffer, RenderStats)> {
    let (w, h) = cam.image_dims;
    let mut fb = FrameBuffer::new(w, h);
    let mut depth = vec![f64::INFINITY; w * h];
    let mut stats = RenderStats {
        voxels_nontransparent: voxels.len() as u64,
        ..Default::default()
    };
    let phong = Phong::default();
    let spacing = vol.spacing_vec();
    let (du, dv) = cam.pixel_size();
    let half_u = 0.5 * cam.right.abs().dot(spacing) / du;
    let half_v = 0.5 * cam.up.abs().dot(spacing) / dv;
    let perspective = matches!(cam.projection, Projection::Perspective { .. });

    let splat = |p: Vec3, color: [f64; 3], depth_buf: &mut [f64], fb: &mut FrameBuffer| {
        let (x, y, z) = cam.project(p);
        if perspective && z <= 0.0 {
            return false;
        }
        let scale = if perspective { 1.0 / z } else { 1.0 };
        let (hx, hy) = ((half_u * scale).max(0.5), (half_v * scale).max(0.5));
        let x0 = (x - hx - 0.5).ceil().max(0.0);
        let x1 = (x + hx - 0.5).floor().min(w as f64 - 1.0);
        let y0 = (y - hy - 0.5).ceil().max(0.0);
        let y1 = (y + hy - 0.5).floor().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            return false;
        }
        for py in y0 as usize..=y1 as usize {
            for px in x0 as usize..=x1 as usize {
                let i = py * w + px;
                if z < depth_buf[i] {
                    depth_buf[i] = z;
                    fb.set(px, py, Rgba::new(color[0], color[1], color[2], 1.0));
                }
            }
        }
        true
    };

    for v in voxels {
        let p = vol.voxel_center(v.coords[0], v.coords[1], v.coords[2]);
        if plane.is_some_and(|pl| pl.signed_distance(p) > 0.0) {
            continue;
        }
        let view = if perspective {
            (p - cam.eye).normalize()
        } else {
            cam.forward
        };
        if v.normal.dot(view) > 0.0 {
            continue;
        }
        let color = phong.shade([1.0; 3], v.normal, view);
        if splat(p, color, &mut depth, &mut fb) {
            stats.voxels_composited += 1;
        }
    }

    if let Some(pl) = plane {
        let (lo, hi) = vol.value_range();
        let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
        let reach = 0.5 * pl.normal.abs().dot(spacing);
        let [nx, ny, nz] = vol.dims();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let d = vol.get(i, j, k);
                    if d < threshold {
                        continue;
                    }
                    let p = vol.voxel_center(i, j, k);
                    if pl.signed_distance(p).abs() > reach {
                        continue;
                    }
                    let g = ((d - lo) * scale).clamp(0.0, 1.0);
                    if splat(p, [g; 3], &mut depth, &mut fb) {
                        stats.voxels_composited += 1;
                    }
                }
            }
        }
    }
    fb.set_depth(depth);
    Ok((fb, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel_is_its_own_boundary() {
        let mut data = vec![0.0; 512];
        data[4 + 8 * (4 + 8 * 4)] = 1.0;
        let vol = ScalarVolume::new([8; 3], [1.0; 3], data).unwrap();
        let list = extract_boundary_voxels(&vol, 0.5);
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].coords, [4, 4, 4]);
        assert_eq!(list[0].density, 1.0);
    }

    #[test]
    fn plane_requires_normal() {
        assert!(CuttingPlane::new(Vec3::ZERO, Vec3::ZERO).is_err());
        let p = CuttingPlane::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(p.signed_distance(Vec3::new(1.0, 1.0, 3.0)), 3.0);
    }
}
