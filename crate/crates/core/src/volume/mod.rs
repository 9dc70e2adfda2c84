//! Volume data model: scalar grids, gradients and resampling.
//!
//! Sample `(i, j, k)` sits at the world point
//! `((i + 0.5) dx, (j + 0.5) dy, (k + 0.5) dz)`, so a volume occupies the
//! box `[0, n * spacing]` on every axis. Continuous "index coordinates"
//! are world coordinates divided by spacing minus one half: voxel centers
//! land on integers.

mod io;
mod phantom;

pub use io::{load_volume, save_volume};
pub use phantom::{
    make_phantom, phantom_value, PhantomKind, PhantomParams, OPAQUE_CORE_HALF_WIDTH,
    TWO_SPHERES_FAR, TWO_SPHERES_NEAR, TWO_SPHERES_RADIUS,
};

use crate::error::{Error, Result};
use crate::math::{Aabb, Fingerprint, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<f64>,
    value_range: (f64, f64),
}

impl ScalarVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f64>) -> Result<Self> {
        validate_geometry(dims, spacing)?;
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "volume sample {bad} is not finite"
            )));
        }
        let value_range = scan_range(&data);
        Ok(ScalarVolume {
            dims,
            spacing,
            data,
            value_range,
        })
    }

    /// Builds a volume by evaluating `f(i, j, k)` at every voxel, x fastest.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        validate_geometry(dims, spacing)?;
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        ScalarVolume::new(dims, spacing, data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn spacing_vec(&self) -> Vec3 {
        Vec3::from_array(self.spacing)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[0].min(self.spacing[1]).min(self.spacing[2])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn extent(&self) -> Vec3 {
        Vec3::new(
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        )
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(Vec3::ZERO, self.extent())
    }

    pub fn center(&self) -> Vec3 {
        self.extent() * 0.5
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            (i as f64 + 0.5) * self.spacing[0],
            (j as f64 + 0.5) * self.spacing[1],
            (k as f64 + 0.5) * self.spacing[2],
        )
    }

    /// Converts a world point to continuous index coordinates.
    #[inline]
    pub fn world_to_index(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x / self.spacing[0] - 0.5,
            p.y / self.spacing[1] - 0.5,
            p.z / self.spacing[2] - 0.5,
        )
    }

    /// Trilinear reconstruction at a world point. Points outside the volume
    /// box read 0; inside the half-voxel margin the nearest boundary samples
    /// are used.
    pub fn sample_trilinear(&self, p: Vec3) -> f64 {
        if !self.bounds().contains(p) {
            return 0.0;
        }
        self.sample_index(self.world_to_index(p))
    }

    /// Trilinear reconstruction at index coordinates, clamped to the grid.
    #[inline]
    pub fn sample_index(&self, c: Vec3) -> f64 {
        let (i, tx) = locate(c.x, self.dims[0]);
        let (j, ty) = locate(c.y, self.dims[1]);
        let (k, tz) = locate(c.z, self.dims[2]);
        let sx = 1;
        let sy = self.dims[0];
        let sz = self.dims[0] * self.dims[1];
        let base = self.index(i, j, k);
        let d = &self.data;
        let c00 = lerp(d[base], d[base + sx], tx);
        let c10 = lerp(d[base + sy], d[base + sy + sx], tx);
        let c01 = lerp(d[base + sz], d[base + sz + sx], tx);
        let c11 = lerp(d[base + sz + sy], d[base + sz + sy + sx], tx);
        lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz)
    }

    /// Affine rescale to `[0, 1]`. Constant volumes map to all zeros.
    pub fn normalize(&self) -> ScalarVolume {
        let (lo, hi) = self.value_range;
        let data = if hi > lo {
            let scale = hi - lo;
            self.data.iter().map(|v| (v - lo) / scale).collect()
        } else {
            vec![0.0; self.data.len()]
        };
        ScalarVolume::new(self.dims, self.spacing, data).expect("geometry already validated")
    }

    /// Central-difference gradient; boundary voxels use one-sided differences.
    pub fn gradient_central(&self) -> GradientVolume {
        let [nx, ny, nz] = self.dims;
        let mut vectors = Vec::with_capacity(self.data.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    vectors.push(self.gradient_at(i, j, k));
                }
            }
        }
        GradientVolume {
            dims: self.dims,
            vectors,
        }
    }

    /// Gradient of a single voxel, same stencil as [`Self::gradient_central`].
    pub fn gradient_at(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let axis = |n: usize, idx: usize, delta: f64, at: &dyn Fn(usize) -> f64| -> f64 {
            if idx == 0 {
                (at(1) - at(0)) / delta
            } else if idx == n - 1 {
                (at(n - 1) - at(n - 2)) / delta
            } else {
                (at(idx + 1) - at(idx - 1)) / (2.0 * delta)
            }
        };
        let [nx, ny, nz] = self.dims;
        Vec3::new(
            axis(nx, i, self.spacing[0], &|x| self.get(x, j, k)),
            axis(ny, j, self.spacing[1], &|y| self.get(i, y, k)),
            axis(nz, k, self.spacing[2], &|z| self.get(i, j, z)),
        )
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarVolume {
        let data = self.data.iter().map(|&v| f(v)).collect();
        ScalarVolume::new(self.dims, self.spacing, data).expect("geometry already validated")
    }

    /// Content hash over geometry and samples.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::new();
        for d in self.dims {
            h.write_u64(d as u64);
        }
        for s in self.spacing {
            h.write_f64(s);
        }
        for &v in &self.data {
            h.write_f64(v);
        }
        h.finish()
    }

    /// Half-resolution volume where each sample averages the (up to eight)
    /// voxels of its 2x2x2 block; spacing doubles.
    pub fn downsample_average(&self) -> ScalarVolume {
        let dims = self.dims.map(|n| n.div_ceil(2).max(2));
        let spacing = self.spacing.map(|s| s * 2.0);
        let [nx, ny, nz] = self.dims;
        ScalarVolume::from_fn(dims, spacing, |i, j, k| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for dz in 0..2 {
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (x, y, z) = (2 * i + dx, 2 * j + dy, 2 * k + dz);
                        if x < nx && y < ny && z < nz {
                            sum += self.get(x, y, z);
                            count += 1;
                        }
                    }
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .expect("downsampled geometry is valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientVolume {
    dims: [usize; 3],
    vectors: Vec<Vec3>,
}

impl GradientVolume {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.vectors[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    /// Trilinear interpolation of the gradient field at index coordinates.
    pub fn sample_index(&self, c: Vec3) -> Vec3 {
        let (i, tx) = locate(c.x, self.dims[0]);
        let (j, ty) = locate(c.y, self.dims[1]);
        let (k, tz) = locate(c.z, self.dims[2]);
        let g = |di, dj, dk| self.get(i + di, j + dj, k + dk);
        let c00 = g(0, 0, 0).lerp(g(1, 0, 0), tx);
        let c10 = g(0, 1, 0).lerp(g(1, 1, 0), tx);
        let c01 = g(0, 0, 1).lerp(g(1, 0, 1), tx);
        let c11 = g(0, 1, 1).lerp(g(1, 1, 1), tx);
        c00.lerp(c10, ty).lerp(c01.lerp(c11, ty), tz)
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Lower cell corner and fractional offset of a clamped index coordinate.
#[inline]
pub(crate) fn locate(c: f64, n: usize) -> (usize, f64) {
    let max = (n - 1) as f64;
    let c = c.clamp(0.0, max);
    let i = (c.floor() as usize).min(n - 2);
    (i, c - i as f64)
}

fn validate_geometry(dims: [usize; 3], spacing: [f64; 3]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(dims));
    }
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(())
}

fn scan_range(data: &[f64]) -> (f64, f64) {
    data.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}
