//! Analytic test volumes. Fields are evaluated at voxel centers in
//! normalized coordinates `((i + 0.5) / nx, ...)` with unit spacing, and
//! rounded to f32 so a phantom survives a save/load round trip unchanged.

use std::fmt;
use std::str::FromStr;

use super::ScalarVolume;
use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhantomKind {
    /// `radius - |p - c|`: positive inside, zero on the surface.
    Sphere,
    /// Two solid balls on the z axis: density 0.6 near (z = 0.3) and 0.9
    /// far (z = 0.7).
    TwoSpheres,
    /// Solid cube of density 1 with the given half width.
    Box,
    /// `exp(-|p - c|^2 / (2 sigma^2))`.
    GaussianBlob,
    /// A box filling most of the volume, for early termination tests.
    OpaqueCore,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 5] = [
        PhantomKind::Sphere,
        PhantomKind::TwoSpheres,
        PhantomKind::Box,
        PhantomKind::GaussianBlob,
        PhantomKind::OpaqueCore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::Sphere => "sphere",
            PhantomKind::TwoSpheres => "two-spheres",
            PhantomKind::Box => "box",
            PhantomKind::GaussianBlob => "gaussian-blob",
            PhantomKind::OpaqueCore => "opaque-core",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPhantom(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhantomParams {
    pub radius: f64,
    pub sigma: f64,
    pub half_width: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            radius: 0.3,
            sigma: 0.2,
            half_width: 0.25,
        }
    }
}

pub const TWO_SPHERES_NEAR: (f64, f64) = (0.3, 0.6);
pub const TWO_SPHERES_FAR: (f64, f64) = (0.7, 0.9);
pub const TWO_SPHERES_RADIUS: f64 = 0.15;
pub const OPAQUE_CORE_HALF_WIDTH: f64 = 0.47;

/// Evaluates the analytic field of `kind` at a normalized point.
pub fn phantom_value(kind: PhantomKind, params: &PhantomParams, p: Vec3) -> f64 {
    let c = Vec3::splat(0.5);
    match kind {
        PhantomKind::Sphere => params.radius - (p - c).length(),
        PhantomKind::TwoSpheres => {
            let ball = |z: f64| (p - Vec3::new(0.5, 0.5, z)).length() <= TWO_SPHERES_RADIUS;
            if ball(TWO_SPHERES_NEAR.0) {
                TWO_SPHERES_NEAR.1
            } else if ball(TWO_SPHERES_FAR.0) {
                TWO_SPHERES_FAR.1
            } else {
                0.0
            }
        }
        PhantomKind::Box => cube(p, params.half_width),
        PhantomKind::OpaqueCore => cube(p, OPAQUE_CORE_HALF_WIDTH),
        PhantomKind::GaussianBlob => {
            (-(p - c).length_squared() / (2.0 * params.sigma * params.sigma)).exp()
        }
    }
}

fn cube(p: Vec3, half_width: f64) -> f64 {
    if (p - Vec3::splat(0.5)).abs().max_component() <= half_width {
        1.0
    } else {
        0.0
    }
}

pub fn make_phantom(
    kind: PhantomKind,
    dims: [usize; 3],
    params: &PhantomParams,
) -> Result<ScalarVolume> {
    if dims.iter().any(|&d| d < 8) {
        return Err(Error::InvalidDims(dims));
    }
    ScalarVolume::from_fn(dims, [1.0; 3], |i, j, k| {
        let p = Vec3::new(
            (i as f64 + 0.5) / dims[0] as f64,
            (j as f64 + 0.5) / dims[1] as f64,
            (k as f64 + 0.5) / dims[2] as f64,
        );
        phantom_value(kind, params, p) as f32 as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind_name() {
        for k in PhantomKind::ALL {
            assert_eq!(k.name().parse::<PhantomKind>().unwrap(), k);
        }
        assert!(matches!(
            "torus".parse::<PhantomKind>(),
            Err(Error::UnknownPhantom(_))
        ));
    }

    #[test]
    fn sphere_center_exceeds_boundary() {
        let v = make_phantom(PhantomKind::Sphere, [32; 3], &PhantomParams::default()).unwrap();
        assert!(v.get(16, 16, 16) > v.get(0, 16, 16));
        assert!(v.get(16, 16, 16) > 0.0 && v.get(0, 0, 0) < 0.0);
    }

    #[test]
    fn blob_peaks_at_center() {
        let v = make_phantom(
            PhantomKind::GaussianBlob,
            [17; 3],
            &PhantomParams::default(),
        )
        .unwrap();
        let peak = v.get(8, 8, 8);
        assert!(v.data().iter().all(|&x| x <= peak));
    }

    #[test]
    fn small_dims_rejected() {
        assert!(make_phantom(PhantomKind::Box, [7, 8, 8], &PhantomParams::default()).is_err());
    }
}
