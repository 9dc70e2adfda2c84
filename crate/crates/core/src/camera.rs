//! View specification shared by all renderers.
//!
//! `right = forward x up`. Pixel `(px, py)` has `py = 0` at the top row;
//! its center maps to the screen offset
//! `((px + 0.5 - w/2) * width/w, (h/2 - py - 0.5) * height/h)`.

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    /// Parallel rays; `width`/`height` are the world extents of the image.
    Orthographic { width: f64, height: f64 },
    /// Rays from `eye`; vertical field of view in radians.
    Perspective { fov_y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub eye: Vec3,
    pub forward: Vec3,
    pub up: Vec3,
    pub right: Vec3,
    pub projection: Projection,
    pub image_dims: (usize, usize),
}

impl Camera {
    /// Builds a camera, orthonormalizing `up` against `forward`.
    pub fn new(
        eye: Vec3,
        forward: Vec3,
        up: Vec3,
        projection: Projection,
        image_dims: (usize, usize),
    ) -> Result<Self> {
        let forward = forward
            .try_normalize()
            .ok_or_else(|| Error::InvalidCamera("zero forward vector".into()))?;
        let right = forward
            .cross(up)
            .try_normalize()
            .ok_or_else(|| Error::InvalidCamera("up is parallel to forward".into()))?;
        let up = right.cross(forward);
        if image_dims.0 == 0 || image_dims.1 == 0 {
            return Err(Error::InvalidCamera(format!(
                "image dims {image_dims:?} must be at least 1x1"
            )));
        }
        match projection {
            Projection::Orthographic { width, height } => {
                if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
                    return Err(Error::InvalidCamera(format!(
                        "orthographic extent {width}x{height} must be positive"
                    )));
                }
            }
            Projection::Perspective { fov_y } => {
                if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
                    return Err(Error::InvalidCamera(format!(
                        "field of view {fov_y} must lie in (0, pi)"
                    )));
                }
            }
        }
        if !eye.x.is_finite() || !eye.y.is_finite() || !eye.z.is_finite() {
            return Err(Error::InvalidCamera("eye is not finite".into()));
        }
        Ok(Camera {
            eye,
            forward,
            up,
            right,
            projection,
            image_dims,
        })
    }

    /// Orthographic camera looking along `forward` at a sphere of radius
    /// `radius` around `center`; the image covers the sphere's diameter
    /// along its shorter side.
    pub fn framing(
        center: Vec3,
        radius: f64,
        forward: Vec3,
        up: Vec3,
        image_dims: (usize, usize),
    ) -> Result<Self> {
        let (w, h) = image_dims;
        let side = 2.0 * radius;
        let (width, height) = if w >= h {
            (side * w as f64 / h.max(1) as f64, side)
        } else {
            (side, side * h as f64 / w.max(1) as f64)
        };
        let dir = forward.normalize();
        Camera::new(
            center - dir * (2.0 * radius),
            forward,
            up,
            Projection::Orthographic { width, height },
            image_dims,
        )
    }

    /// Orbit camera: azimuth about +y measured from +z, elevation towards
    /// +y, both in radians. The eye sits on the orbit sphere and looks at
    /// `center`.
    pub fn orbit(
        center: Vec3,
        radius: f64,
        azimuth: f64,
        elevation: f64,
        projection: Projection,
        image_dims: (usize, usize),
    ) -> Result<Self> {
        let offset = Vec3::new(
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
            elevation.cos() * azimuth.cos(),
        );
        let eye = center + offset * (2.0 * radius);
        let up = if elevation.cos().abs() < 1e-9 {
            Vec3::Z
        } else {
            Vec3::Y
        };
        Camera::new(eye, -offset, up, projection, image_dims)
    }

    pub fn is_orthographic(&self) -> bool {
        matches!(self.projection, Projection::Orthographic { .. })
    }

    /// Requires an orthographic projection, naming `what` in the error.
    pub fn require_orthographic(&self, what: &'static str) -> Result<(f64, f64)> {
        match self.projection {
            Projection::Orthographic { width, height } => Ok((width, height)),
            Projection::Perspective { .. } => Err(Error::OrthographicOnly(what)),
        }
    }

    pub fn width(&self) -> usize {
        self.image_dims.0
    }

    pub fn height(&self) -> usize {
        self.image_dims.1
    }

    /// World size of one pixel on the image plane (orthographic), or on the
    /// unit-distance plane (perspective).
    pub fn pixel_size(&self) -> (f64, f64) {
        let (w, h) = (self.image_dims.0 as f64, self.image_dims.1 as f64);
        match self.projection {
            Projection::Orthographic { width, height } => (width / w, height / h),
            Projection::Perspective { fov_y } => {
                let s = 2.0 * (fov_y * 0.5).tan() / h;
                (s, s)
            }
        }
    }

    /// Screen-plane offset of a (possibly fractional) pixel center.
    #[inline]
    pub fn screen_offset(&self, px: f64, py: f64) -> (f64, f64) {
        let (w, h) = (self.image_dims.0 as f64, self.image_dims.1 as f64);
        let (du, dv) = self.pixel_size();
        ((px + 0.5 - w * 0.5) * du, (h * 0.5 - py - 0.5) * dv)
    }

    /// Origin and unit direction of the ray through pixel `(px, py)`.
    pub fn ray(&self, px: usize, py: usize) -> (Vec3, Vec3) {
        let (sx, sy) = self.screen_offset(px as f64, py as f64);
        match self.projection {
            Projection::Orthographic { .. } => {
                (self.eye + self.right * sx + self.up * sy, self.forward)
            }
            Projection::Perspective { .. } => (
                self.eye,
                (self.forward + self.right * sx + self.up * sy).normalize(),
            ),
        }
    }

    /// Continuous image coordinates of a world point: pixel `(px, py)`
    /// covers `[px, px + 1) x [py, py + 1)`. The third component is the
    /// distance along `forward` from the eye.
    pub fn project(&self, p: Vec3) -> (f64, f64, f64) {
        let d = p - self.eye;
        let depth = d.dot(self.forward);
        let (mut u, mut v) = (d.dot(self.right), d.dot(self.up));
        if let Projection::Perspective { .. } = self.projection {
            u /= depth;
            v /= depth;
        }
        let (du, dv) = self.pixel_size();
        let (w, h) = (self.image_dims.0 as f64, self.image_dims.1 as f64);
        (u / du + w * 0.5, h * 0.5 - v / dv, depth)
    }

    /// Same view at a different resolution; world extents are unchanged.
    pub fn with_dims(&self, image_dims: (usize, usize)) -> Result<Self> {
        Camera::new(self.eye, self.forward, self.up, self.projection, image_dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ortho() -> Camera {
        Camera::new(
            Vec3::new(0.0, 0.0, -10.0),
            Vec3::Z,
            Vec3::Y,
            Projection::Orthographic {
                width: 4.0,
                height: 2.0,
            },
            (4, 2),
        )
        .unwrap()
    }

    #[test]
    fn frame_is_orthonormal() {
        let c = Camera::new(
            Vec3::ZERO,
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(0.3, 1.0, 0.0),
            Projection::Perspective { fov_y: 1.0 },
            (8, 8),
        )
        .unwrap();
        for (a, b) in [(c.forward, c.up), (c.up, c.right), (c.right, c.forward)] {
            assert!(a.dot(b).abs() < 1e-12);
        }
        for v in [c.forward, c.up, c.right] {
            assert!((v.length() - 1.0).abs() < 1e-12);
        }
        assert!((c.right - c.forward.cross(c.up)).length() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        let p = Projection::Orthographic {
            width: 1.0,
            height: 1.0,
        };
        assert!(Camera::new(Vec3::ZERO, Vec3::ZERO, Vec3::Y, p, (1, 1)).is_err());
        assert!(Camera::new(Vec3::ZERO, Vec3::Y, Vec3::Y, p, (1, 1)).is_err());
        assert!(Camera::new(Vec3::ZERO, Vec3::Z, Vec3::Y, p, (0, 1)).is_err());
    }

    #[test]
    fn pixel_centers() {
        let c = ortho();
        let (o, d) = c.ray(0, 0);
        assert_eq!(d, Vec3::Z);
        // right = z x y = -x, top row is +y
        assert_eq!(o, Vec3::new(1.5, 0.5, -10.0));
        let (o, _) = c.ray(3, 1);
        assert_eq!(o, Vec3::new(-1.5, -0.5, -10.0));
    }

    #[test]
    fn project_inverts_ray_origin() {
        let c = ortho();
        for (px, py) in [(0, 0), (2, 1), (3, 0)] {
            let (o, _) = c.ray(px, py);
            let (x, y, depth) = c.project(o + c.forward * 3.0);
            assert!((x - (px as f64 + 0.5)).abs() < 1e-12);
            assert!((y - (py as f64 + 0.5)).abs() < 1e-12);
            assert!((depth - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perspective_corners_mirror() {
        let c = Camera::new(
            Vec3::ZERO,
            Vec3::Z,
            Vec3::Y,
            Projection::Perspective { fov_y: 0.8 },
            (6, 6),
        )
        .unwrap();
        let (_, a) = c.ray(0, 0);
        let (_, b) = c.ray(5, 5);
        assert!((a.dot(c.forward) - b.dot(c.forward)).abs() < 1e-12);
        assert!((a.dot(c.right) + b.dot(c.right)).abs() < 1e-12);
        assert!((a.dot(c.up) + b.dot(c.up)).abs() < 1e-12);
    }

    #[test]
    fn orbit_looks_at_center() {
        let p = Projection::Orthographic {
            width: 2.0,
            height: 2.0,
        };
        let c = Camera::orbit(Vec3::splat(1.0), 1.0, 0.7, 0.3, p, (3, 3)).unwrap();
        let to_center = (Vec3::splat(1.0) - c.eye).normalize();
        assert!((to_center - c.forward).length() < 1e-12);
    }
}
