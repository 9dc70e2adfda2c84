//! Reconstruction kernels and their footprint tables.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Quadrature points used to integrate a kernel along the view axis.
pub const QUADRATURE_POINTS: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pm) = (p1, p0);
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integral of `f` over `[a, b]` with `QUADRATURE_POINTS` Gauss-Legendre nodes.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(QUADRATURE_POINTS);
    }
    RULE.with(|(x, w)| {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| wi * f(m + h * xi))
            .sum::<f64>()
            * h
    })
}

/// Voxel reconstruction kernels, in voxel units, each with unit integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// Truncated isotropic Gaussian.
    Gaussian { sigma: f64, extent: f64 },
    /// Radial cone `1 - r / extent`.
    Cone { extent: f64 },
    /// Separable tent `(1-|x|)(1-|y|)(1-|z|)`, the trilinear kernel.
    Bilinear,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Gaussian {
            sigma: 0.42,
            extent: 2.0,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Cone { .. } => "cone",
            Kernel::Bilinear => "bilinear",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Kernel::default()),
            "cone" => Ok(Kernel::Cone { extent: 1.5 }),
            "bilinear" | "tent" => Ok(Kernel::Bilinear),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel `{other}` (expected gaussian, cone or bilinear)"
            ))),
        }
    }
}

impl Kernel {
    /// Half-width of the support along each axis.
    pub fn extent(&self) -> f64 {
        match *self {
            Kernel::Gaussian { extent, .. } | Kernel::Cone { extent } => extent,
            Kernel::Bilinear => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Gaussian { sigma, extent } => sigma > 0.0 && extent > 0.0,
            Kernel::Cone { extent } => extent > 0.0,
            Kernel::Bilinear => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid kernel parameters {self:?}"
            )))
        }
    }

    /// Unnormalized radial profile for the radial kernels.
    fn radial(&self, r: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma, extent } if r < extent => {
                (-r * r / (2.0 * sigma * sigma)).exp()
            }
            Kernel::Cone { extent } if r < extent => 1.0 - r / extent,
            _ => 0.0,
        }
    }

    /// Integral over all of space of the unnormalized kernel.
    fn mass(&self) -> f64 {
        match self {
            Kernel::Bilinear => 1.0,
            _ => {
                let r = self.extent();
                integrate(|s| 4.0 * PI * s * s * self.radial(s), 0.0, r)
            }
        }
    }

    /// Normalized kernel value at a point.
    pub fn eval(&self, p: Vec3) -> f64 {
        match self {
            Kernel::Bilinear => {
                let t = |v: f64| (1.0 - v.abs()).max(0.0);
                t(p.x) * t(p.y) * t(p.z)
            }
            _ => self.radial(p.length()) / self.mass(),
        }
    }

    /// Normalized integral along the z axis through `(x, y)`.
    pub fn line_integral(&self, x: f64, y: f64) -> f64 {
        self.line_integral_with_mass(x, y, self.mass())
    }

    fn line_integral_with_mass(&self, x: f64, y: f64, mass: f64) -> f64 {
        match self {
            Kernel::Bilinear => {
                let t = |v: f64| (1.0 - v.abs()).max(0.0);
                let (tx, ty) = (t(x), t(y));
                if tx == 0.0 || ty == 0.0 {
                    return 0.0;
                }
                // split at the kink so each half is polynomial
                let along = integrate(t, -1.0, 0.0) + integrate(t, 0.0, 1.0);
                tx * ty * along
            }
            _ => {
                let r = self.extent();
                let rho2 = x * x + y * y;
                if rho2 >= r * r {
                    return 0.0;
                }
                let half = (r * r - rho2).sqrt();
                let f = |u: f64| self.radial((rho2 + u * u).sqrt());
                (integrate(f, -half, 0.0) + integrate(f, 0.0, half)) / mass
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TableSampling {
    Nearest,
    #[default]
    Bilinear,
}

impl fmt::Display for TableSampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableSampling::Nearest => "nearest",
            TableSampling::Bilinear => "bilinear",
        })
    }
}

impl FromStr for TableSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(TableSampling::Nearest),
            "bilinear" => Ok(TableSampling::Bilinear),
            other => Err(Error::InvalidParameter(format!(
                "unknown table sampling `{other}` (expected nearest or bilinear)"
            ))),
        }
    }
}

/// Square table of footprint values. Cell `(i, j)` holds the value at
/// offset `((i - half) / resolution, (j - half) / resolution)`, so the
/// center cell lies on the kernel axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FootprintTable {
    pub kernel: Kernel,
    /// Support half-width in table units (voxels for the generic table,
    /// pixels for a view table).
    pub extent: [f64; 2],
    /// Table cells per unit.
    pub resolution: usize,
    half: [usize; 2],
    weights: Vec<f64>,
}

impl FootprintTable {
    pub fn size(&self) -> [usize; 2] {
        [2 * self.half[0] + 1, 2 * self.half[1] + 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.size()[0] + i]
    }

    /// Offset of cell `(i, j)` in table units.
    pub fn cell_offset(&self, i: usize, j: usize) -> (f64, f64) {
        let r = self.resolution as f64;
        (
            (i as f64 - self.half[0] as f64) / r,
            (j as f64 - self.half[1] as f64) / r,
        )
    }

    /// Sum of weights times cell area: the table's integral.
    pub fn mass(&self) -> f64 {
        let r = self.resolution as f64;
        self.weights.iter().sum::<f64>() / (r * r)
    }

    /// Footprint at an offset in table units; zero outside the table.
    #[inline]
    pub fn sample(&self, x: f64, y: f64, mode: TableSampling) -> f64 {
        let r = self.resolution as f64;
        let fx = x * r + self.half[0] as f64;
        let fy = y * r + self.half[1] as f64;
        let [nx, ny] = self.size();
        match mode {
            TableSampling::Nearest => {
                let (i, j) = (fx.round(), fy.round());
                if i < 0.0 || j < 0.0 || i >= nx as f64 || j >= ny as f64 {
                    0.0
                } else {
                    self.get(i as usize, j as usize)
                }
            }
            TableSampling::Bilinear => {
                if fx <= -1.0 || fy <= -1.0 || fx >= nx as f64 || fy >= ny as f64 {
                    return 0.0;
                }
                let (x0, y0) = (fx.floor(), fy.floor());
                let (tx, ty) = (fx - x0, fy - y0);
                let at = |i: f64, j: f64| {
                    if i < 0.0 || j < 0.0 || i >= nx as f64 || j >= ny as f64 {
                        0.0
                    } else {
                        self.get(i as usize, j as usize)
                    }
                };
                let a = at(x0, y0) + (at(x0 + 1.0, y0) - at(x0, y0)) * tx;
                let b = at(x0, y0 + 1.0) + (at(x0 + 1.0, y0 + 1.0) - at(x0, y0 + 1.0)) * tx;
                a + (b - a) * ty
            }
        }
    }
}

/// Tabulates the kernel's line integral on a grid with `resolution` cells
/// per voxel.
pub fn build_generic_footprint(kernel: Kernel, resolution: usize) -> Result<FootprintTable> {
    kernel.validate()?;
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "footprint resolution {resolution} must be at least 2"
        )));
    }
    let extent = kernel.extent();
    let half = (extent * resolution as f64).ceil() as usize;
    let n = 2 * half + 1;
    let mass = kernel.mass();
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = (i as f64 - half as f64) / resolution as f64;
            let y = (j as f64 - half as f64) / resolution as f64;
            weights.push(kernel.line_integral_with_mass(x, y, mass));
        }
    }
    Ok(FootprintTable {
        kernel,
        extent: [extent; 2],
        resolution,
        half: [half; 2],
        weights,
    })
}

/// Screen-space footprint of one voxel for an orthographic view of a grid
/// with the given spacing, in pixel offsets (`y` grows downwards). A point
/// at world offset `s` from the voxel sees `F(M s) / |A^-1 d|`, where `A`
/// scales voxel to world units, `d` is the view direction and `M` maps
/// screen offsets onto the kernel plane orthogonal to `A^-1 d`.
pub fn view_transform_footprint(
    generic: &FootprintTable,
    cam: &Camera,
    spacing: [f64; 3],
) -> Result<FootprintTable> {
    cam.require_orthographic("splatting")?;
    let inv = Vec3::new(1.0 / spacing[0], 1.0 / spacing[1], 1.0 / spacing[2]);
    let b = cam.forward.mul_elem(inv);
    let b_len = b.length();
    let bh = b / b_len;
    let (du, dv) = cam.pixel_size();
    // screen pixel offsets to kernel-space vectors
    let pu = cam.right.mul_elem(inv) * du;
    let pv = -cam.up.mul_elem(inv) * dv;
    let perp = |v: Vec3| v - bh * v.dot(bh);
    let (qu, qv) = (perp(pu), perp(pv));
    let (e1, e2) = orthonormal_basis(bh);
    let m = [[qu.dot(e1), qv.dot(e1)], [qu.dot(e2), qv.dot(e2)]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::InvalidCamera("degenerate view for footprint".into()));
    }
    let minv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    // the kernel support is a disk (square for the tent) of radius R; its
    // preimage is bounded by R times the row norms of M^-1 (L1 for squares)
    let r = generic.extent[0];
    let reach = |row: [f64; 2]| match generic.kernel {
        Kernel::Bilinear => r * (row[0].abs() + row[1].abs()),
        _ => r * (row[0] * row[0] + row[1] * row[1]).sqrt(),
    };
    let ext = [reach(minv[0]), reach(minv[1])];
    let res = generic.resolution;
    let half = ext.map(|e| (e * res as f64).ceil() as usize);
    let n = half.map(|h| 2 * h + 1);
    let mut weights = Vec::with_capacity(n[0] * n[1]);
    for j in 0..n[1] {
        for i in 0..n[0] {
            let ox = (i as f64 - half[0] as f64) / res as f64;
            let oy = (j as f64 - half[1] as f64) / res as f64;
            let gx = m[0][0] * ox + m[0][1] * oy;
            let gy = m[1][0] * ox + m[1][1] * oy;
            weights.push(generic.sample(gx, gy, TableSampling::Bilinear) / b_len);
        }
    }
    Ok(FootprintTable {
        kernel: generic.kernel,
        extent: ext,
        resolution: res,
        half,
        weights,
    })
}

/// Two unit vectors completing `n` to an orthonormal basis. For axis
/// directions they are the remaining axes in cyclic order.
fn orthonormal_basis(n: Vec3) -> (Vec3, Vec3) {
    let a = n.abs().dominant_axis();
    let helper = match a {
        0 => Vec3::Y,
        1 => Vec3::Z,
        _ => Vec3::X,
    };
    let e1 = (helper - n * helper.dot(n)).normalize();
    let e2 = n.cross(e1);
    (e1, e2)
}
