//! Object-order rendering: voxels are projected back to front as
//! precomputed footprints and composited sheet by sheet.

mod footprint;

pub use footprint::{
    build_generic_footprint, gauss_legendre, integrate, view_transform_footprint, FootprintTable,
    Kernel, TableSampling, QUADRATURE_POINTS,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::shading::Phong;
use crate::stats::RenderStats;
use crate::transfer::{Rgba, TransferFunction};
use crate::volume::{GradientVolume, ScalarVolume};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SplatMode {
    #[default]
    Composite,
    /// Additive footprints of raw densities, no opacity.
    XRay,
}

impl fmt::Display for SplatMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplatMode::Composite => "composite",
            SplatMode::XRay => "xray",
        })
    }
}

impl FromStr for SplatMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composite" => Ok(SplatMode::Composite),
            "xray" => Ok(SplatMode::XRay),
            other => Err(Error::InvalidParameter(format!(
                "unknown splat mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatQuality {
    pub kernel: Kernel,
    /// Footprint table cells per voxel (generic) and per pixel (view).
    pub table_res: usize,
    pub sampling: TableSampling,
}

impl Default for SplatQuality {
    fn default() -> Self {
        SplatQuality {
            kernel: Kernel::default(),
            table_res: 16,
            sampling: TableSampling::Bilinear,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatConfig {
    pub mode: SplatMode,
    pub quality: SplatQuality,
    pub shading: Option<Phong>,
    /// Voxels with opacity at or below this are not splatted.
    pub threshold: f64,
}

impl Default for SplatConfig {
    fn default() -> Self {
        SplatConfig {
            mode: SplatMode::Composite,
            quality: SplatQuality::default(),
            shading: Some(Phong::default()),
            threshold: 1.0 / 255.0,
        }
    }
}

/// Image rows handled together; fixed so results do not depend on the
/// worker count.
const BAND: usize = 8;

/// A classified voxel projected onto the screen.
#[derive(Clone, Copy, Debug)]
struct Splat {
    x: f64,
    y: f64,
    /// Premultiplied color (composite) or density (x-ray, in `rgb[0]`).
    rgb: [f64; 3],
    alpha: f64,
}

/// Deepest hierarchy level: the coarsest grid still has at least two
/// samples along its shortest axis.
pub fn max_level(dims: [usize; 3]) -> usize {
    let m = dims.into_iter().min().unwrap_or(2).max(2);
    (usize::BITS - 1 - m.leading_zeros()) as usize - 1
}

/// Splats every significant voxel of `vol`.
pub fn render_splat(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &SplatConfig,
) -> Result<(FrameBuffer, RenderStats)> {
    let (image, stats) = accumulate(vol, grads, tf, cam, cfg)?;
    let (w, h) = cam.image_dims;
    let pixels: Vec<Rgba> = match cfg.mode {
        SplatMode::XRay => {
            let m = image.iter().map(|p| p[0]).fold(0.0, f64::max);
            let scale = if m > 0.0 { 1.0 / m } else { 1.0 };
            image
                .iter()
                .map(|p| {
                    let g = (p[0] * scale).clamp(0.0, 1.0);
                    Rgba::new(g, g, g, 1.0)
                })
                .collect()
        }
        SplatMode::Composite => image
            .iter()
            .map(|p| {
                Rgba::new(
                    p[0].clamp(0.0, 1.0),
                    p[1].clamp(0.0, 1.0),
                    p[2].clamp(0.0, 1.0),
                    p[3].clamp(0.0, 1.0),
                )
            })
            .collect(),
    };
    Ok((FrameBuffer::from_pixels(w, h, pixels), stats))
}

/// Unnormalized density line integrals per pixel, in world units.
pub fn xray_projection(
    vol: &ScalarVolume,
    cam: &Camera,
    quality: &SplatQuality,
) -> Result<Vec<f64>> {
    let cfg = SplatConfig {
        mode: SplatMode::XRay,
        quality: *quality,
        shading: None,
        threshold: 0.0,
    };
    let tf = TransferFunction::ramp();
    let (image, _) = accumulate(vol, None, &tf, cam, &cfg)?;
    Ok(image.into_iter().map(|p| p[0]).collect())
}

fn accumulate(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &SplatConfig,
) -> Result<(Vec<[f64; 4]>, RenderStats)> {
    cam.require_orthographic("splatting")?;
    let generic = build_generic_footprint(cfg.quality.kernel, cfg.quality.table_res)?;
    let view = view_transform_footprint(&generic, cam, vol.spacing())?;
    let computed;
    let grads = match (cfg.mode, cfg.shading, grads) {
        (SplatMode::Composite, Some(_), None) => {
            computed = vol.gradient_central();
            Some(&computed)
        }
        _ => grads,
    };
    let (w, h) = cam.image_dims;
    let dims = vol.dims();
    let axis = cam.forward.abs().dominant_axis();
    let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
    let back_to_front: Vec<usize> = if cam.forward[axis] > 0.0 {
        (0..dims[axis]).rev().collect()
    } else {
        (0..dims[axis]).collect()
    };
    let weight_scale = match cfg.mode {
        SplatMode::Composite => vol.min_spacing(),
        SplatMode::XRay => 1.0,
    };
    let ext = view.extent;
    let bands = h.div_ceil(BAND);
    let mut image = vec![[0.0f64; 4]; w * h];
    let mut sheet = vec![[0.0f64; 4]; w * h];
    let mut stats = RenderStats::default();

    for k in back_to_front {
        let splats = sheet_splats(vol, grads, tf, cam, cfg, axis, ua, va, k);
        if splats.is_empty() {
            continue;
        }
        stats.voxels_composited += splats.len() as u64;
        stats.voxels_nontransparent += splats.len() as u64;
        let mut per_band: Vec<Vec<u32>> = vec![Vec::new(); bands];
        for (idx, s) in splats.iter().enumerate() {
            let y0 = (s.y - ext[1] - 0.5).ceil().max(0.0);
            let y1 = (s.y + ext[1] - 0.5).floor().min(h as f64 - 1.0);
            if y0 > y1 {
                continue;
            }
            for band in &mut per_band[y0 as usize / BAND..=y1 as usize / BAND] {
                band.push(idx as u32);
            }
        }
        sheet
            .par_chunks_mut(BAND * w)
            .zip(per_band.par_iter())
            .enumerate()
            .for_each(|(b, (rows, members))| {
                rows.iter_mut().for_each(|p| *p = [0.0; 4]);
                let row0 = b * BAND;
                let nrows = rows.len() / w;
                for &idx in members {
                    let s = &splats[idx as usize];
                    let x0 = (s.x - ext[0] - 0.5).ceil().max(0.0);
                    let x1 = (s.x + ext[0] - 0.5).floor().min(w as f64 - 1.0);
                    let y0 = (s.y - ext[1] - 0.5).ceil().max(row0 as f64);
                    let y1 = (s.y + ext[1] - 0.5)
                        .floor()
                        .min((row0 + nrows) as f64 - 1.0);
                    if x0 > x1 || y0 > y1 {
                        continue;
                    }
                    for py in y0 as usize..=y1 as usize {
                        let oy = py as f64 + 0.5 - s.y;
                        for px in x0 as usize..=x1 as usize {
                            let ox = px as f64 + 0.5 - s.x;
                            let wgt = view.sample(ox, oy, cfg.quality.sampling) * weight_scale;
                            if wgt == 0.0 {
                                continue;
                            }
                            let p = &mut rows[(py - row0) * w + px];
                            p[0] += wgt * s.rgb[0];
                            p[1] += wgt * s.rgb[1];
                            p[2] += wgt * s.rgb[2];
                            p[3] += wgt * s.alpha;
                        }
                    }
                }
            });
        let mode = cfg.mode;
        image
            .par_iter_mut()
            .zip(sheet.par_iter())
            .for_each(|(dst, src)| match mode {
                SplatMode::XRay => dst[0] += src[0],
                SplatMode::Composite => {
                    let mut s = *src;
                    if s[3] > 1.0 {
                        let inv = 1.0 / s[3];
                        for c in &mut s {
                            *c *= inv;
                        }
                    }
                    let keep = 1.0 - s[3];
                    for c in 0..4 {
                        dst[c] = s[c] + keep * dst[c];
                    }
                }
            });
    }

    Ok((image, stats))
}

/// Classified, projected voxels of slice `k` along `axis`.
#[allow(clippy::too_many_arguments)]
fn sheet_splats(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &SplatConfig,
    axis: usize,
    ua: usize,
    va: usize,
    k: usize,
) -> Vec<Splat> {
    let dims = vol.dims();
    let mut out = Vec::new();
    for b in 0..dims[va] {
        for a in 0..dims[ua] {
            let mut c = [0usize; 3];
            c[axis] = k;
            c[ua] = a;
            c[va] = b;
            let d = vol.get(c[0], c[1], c[2]);
            let (rgb, alpha) = match cfg.mode {
                SplatMode::XRay => {
                    if d == 0.0 {
                        continue;
                    }
                    ([d, 0.0, 0.0], 0.0)
                }
                SplatMode::Composite => {
                    let e = tf.eval(d);
                    if e.a <= cfg.threshold {
                        continue;
                    }
                    let color = match (cfg.shading, grads) {
                        (Some(p), Some(g)) => {
                            p.shade(e.rgb(), g.get(c[0], c[1], c[2]), cam.forward)
                        }
                        _ => e.rgb(),
                    };
                    (color.map(|v| v * e.a), e.a)
                }
            };
            let (x, y, _) = cam.project(vol.voxel_center(c[0], c[1], c[2]));
            out.push(Splat { x, y, rgb, alpha });
        }
    }
    out
}

/// Splats level `level` of the averaging pyramid; footprints grow with
/// the doubled spacing of each level.
pub fn render_splat_hierarchical(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &SplatConfig,
    level: usize,
) -> Result<(FrameBuffer, RenderStats)> {
    let max = max_level(vol.dims());
    if level > max {
        return Err(Error::InvalidParameter(format!(
            "splat level {level} exceeds the pyramid depth {max}"
        )));
    }
    if level == 0 {
        return render_splat(vol, None, tf, cam, cfg);
    }
    let mut coarse = vol.downsample_average();
    for _ in 1..level {
        coarse = coarse.downsample_average();
    }
    render_splat(&coarse, None, tf, cam, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_limits() {
        assert_eq!(max_level([64; 3]), 5);
        assert_eq!(max_level([8, 64, 64]), 2);
        assert_eq!(max_level([9, 9, 9]), 2);
    }

    #[test]
    fn rejects_perspective_and_deep_levels() {
        let vol = ScalarVolume::new([8; 3], [1.0; 3], vec![0.0; 512]).unwrap();
        let tf = TransferFunction::ramp();
        let cam = Camera::new(
            crate::math::Vec3::new(4.0, 4.0, -10.0),
            crate::math::Vec3::Z,
            crate::math::Vec3::Y,
            crate::camera::Projection::Perspective { fov_y: 0.5 },
            (8, 8),
        )
        .unwrap();
        assert!(matches!(
            render_splat(&vol, None, &tf, &cam, &SplatConfig::default()),
            Err(Error::OrthographicOnly(_))
        ));
        let ortho = Camera::framing(
            vol.center(),
            7.0,
            crate::math::Vec3::Z,
            crate::math::Vec3::Y,
            (8, 8),
        )
        .unwrap();
        assert!(render_splat_hierarchical(&vol, &tf, &ortho, &SplatConfig::default(), 3).is_err());
    }
}
