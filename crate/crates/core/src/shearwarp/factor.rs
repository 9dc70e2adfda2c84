//! Splitting an orthographic view into a per-slice shear and a 2D warp.

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::math::Vec3;

pub type Mat4 = [[f64; 4]; 4];
pub type Mat3 = [[f64; 3]; 3];

/// Object coordinates are voxel indices permuted to `(u, v, w)` with `w`
/// along the major axis: Z gives (X, Y), X gives (Y, Z), Y gives (Z, X).
/// Slice `w` lands on the base plane shifted by
/// `(shear_u * w + trans_u, shear_v * w + trans_v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearWarpFactorization {
    /// World to eye coordinates (right, up, forward; origin at the eye).
    pub view: Mat4,
    pub major_axis: usize,
    pub shear: [f64; 2],
    pub trans: [f64; 2],
    /// Base-plane `(x, y, 1)` to continuous image coordinates.
    pub warp: Mat3,
    /// Base-plane size in pixels, `[width, height]`.
    pub base_dims: [usize; 2],
    /// Slices visited in increasing `w` when true.
    pub front_to_back_increasing: bool,
    /// Opacity correction exponent: world length of one slice step along
    /// a ray, in units of the smallest spacing.
    pub slice_step: f64,
    pub(crate) vol_dims: [usize; 3],
    pub(crate) spacing: [f64; 3],
    pub(crate) camera: Camera,
}

/// The in-slice axes for a major axis.
#[inline]
pub fn slice_axes(major: usize) -> (usize, usize) {
    ((major + 1) % 3, (major + 2) % 3)
}

pub fn factorize(
    cam: &Camera,
    vol_dims: [usize; 3],
    spacing: [f64; 3],
) -> Result<ShearWarpFactorization> {
    cam.require_orthographic("shear-warp")?;
    let s = Vec3::from_array(spacing);
    let d = cam.forward.div_elem(s);
    if d.length_squared() == 0.0 || !d.length_squared().is_finite() {
        return Err(Error::InvalidCamera("degenerate view direction".into()));
    }
    let a = d.abs().dominant_axis();
    let (ua, va) = slice_axes(a);
    let shear = [-d[ua] / d[a], -d[va] / d[a]];
    let depth = (vol_dims[a] - 1) as f64;
    let trans = shear.map(|sh| (-sh * depth).max(0.0));
    let base_dims = [
        vol_dims[ua] + (shear[0].abs() * depth).ceil() as usize,
        vol_dims[va] + (shear[1].abs() * depth).ceil() as usize,
    ];
    let min_spacing = spacing.iter().copied().fold(f64::INFINITY, f64::min);
    let slice_step = 1.0 / d[a].abs() / min_spacing;

    let view = [
        [
            cam.right.x,
            cam.right.y,
            cam.right.z,
            -cam.right.dot(cam.eye),
        ],
        [cam.up.x, cam.up.y, cam.up.z, -cam.up.dot(cam.eye)],
        [
            cam.forward.x,
            cam.forward.y,
            cam.forward.z,
            -cam.forward.dot(cam.eye),
        ],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut fac = ShearWarpFactorization {
        view,
        major_axis: a,
        shear,
        trans,
        warp: [[0.0; 3]; 3],
        base_dims,
        front_to_back_increasing: d[a] > 0.0,
        slice_step,
        vol_dims,
        spacing,
        camera: *cam,
    };
    // a base-plane point is any point of its ray; take the one on slice 0
    let image = |bx: f64, by: f64| {
        let (x, y, _) = cam.project(fac.object_to_world([bx - trans[0], by - trans[1], 0.0]));
        (x, y)
    };
    let (x0, y0) = image(0.0, 0.0);
    let (xu, yu) = image(1.0, 0.0);
    let (xv, yv) = image(0.0, 1.0);
    fac.warp = [
        [xu - x0, xv - x0, x0],
        [yu - y0, yv - y0, y0],
        [0.0, 0.0, 1.0],
    ];
    Ok(fac)
}

impl ShearWarpFactorization {
    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn vol_dims(&self) -> [usize; 3] {
        self.vol_dims
    }

    /// Slice extents `[n_u, n_v, n_w]`.
    pub fn object_dims(&self) -> [usize; 3] {
        let (ua, va) = slice_axes(self.major_axis);
        [
            self.vol_dims[ua],
            self.vol_dims[va],
            self.vol_dims[self.major_axis],
        ]
    }

    /// Object coordinates `(u, v, w)` of a world point.
    pub fn world_to_object(&self, p: Vec3) -> [f64; 3] {
        let c = [
            p.x / self.spacing[0] - 0.5,
            p.y / self.spacing[1] - 0.5,
            p.z / self.spacing[2] - 0.5,
        ];
        let (ua, va) = slice_axes(self.major_axis);
        [c[ua], c[va], c[self.major_axis]]
    }

    pub fn object_to_world(&self, o: [f64; 3]) -> Vec3 {
        let (ua, va) = slice_axes(self.major_axis);
        let mut c = [0.0; 3];
        c[ua] = o[0];
        c[va] = o[1];
        c[self.major_axis] = o[2];
        Vec3::new(
            (c[0] + 0.5) * self.spacing[0],
            (c[1] + 0.5) * self.spacing[1],
            (c[2] + 0.5) * self.spacing[2],
        )
    }

    /// Offset of slice `w` on the base plane.
    #[inline]
    pub fn slice_offset(&self, w: f64) -> [f64; 2] {
        [
            self.shear[0] * w + self.trans[0],
            self.shear[1] * w + self.trans[1],
        ]
    }

    /// Base-plane position of a world point: shear, then drop `w`.
    pub fn to_base(&self, p: Vec3) -> (f64, f64) {
        let [u, v, w] = self.world_to_object(p);
        let [ou, ov] = self.slice_offset(w);
        (u + ou, v + ov)
    }

    pub fn warp_point(&self, bx: f64, by: f64) -> (f64, f64) {
        let m = &self.warp;
        (
            m[0][0] * bx + m[0][1] * by + m[0][2],
            m[1][0] * bx + m[1][1] * by + m[1][2],
        )
    }

    /// Inverse warp: image coordinates to base-plane coordinates.
    pub fn unwarp_point(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.warp;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let (dx, dy) = (x - m[0][2], y - m[1][2]);
        (
            (m[1][1] * dx - m[0][1] * dy) / det,
            (m[0][0] * dy - m[1][0] * dx) / det,
        )
    }

    /// Shear as a 4x4 matrix on homogeneous object coordinates.
    pub fn shear_matrix(&self) -> Mat4 {
        [
            [1.0, 0.0, self.shear[0], self.trans[0]],
            [0.0, 1.0, self.shear[1], self.trans[1]],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}
