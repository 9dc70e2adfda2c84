//! Shear-warp rendering: slices of a run-length encoded volume are
//! sheared onto a base plane, composited front to back while skipping
//! transparent voxel runs and opaque pixel runs, then warped to the image.

mod factor;
mod rle;

pub use factor::{factorize, slice_axes, Mat3, Mat4, ShearWarpFactorization};
pub use rle::{
    rle_encode, shade_index, shade_normal, RleEncoding, RleVolume, RleVoxel, Run, SHADE_BINS,
    SHADE_ENTRIES, SHADE_NONE,
};

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::shading::Phong;
use crate::stats::RenderStats;
use crate::transfer::{Rgba, TransferFunction};
use crate::volume::ScalarVolume;

pub const DEFAULT_OPAQUE_THRESHOLD: f64 = 0.98;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShearWarpConfig {
    /// Base-plane pixels at or above this opacity are skipped; 1.0 only
    /// skips fully opaque pixels.
    pub opaque_threshold: f64,
    pub shading: Option<Phong>,
    /// Opacity reference length in units of the smallest spacing.
    pub reference_step: f64,
}

impl Default for ShearWarpConfig {
    fn default() -> Self {
        ShearWarpConfig {
            opaque_threshold: DEFAULT_OPAQUE_THRESHOLD,
            shading: Some(Phong::default()),
            reference_step: 1.0,
        }
    }
}

impl ShearWarpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.opaque_threshold > 0.0 && self.opaque_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "opaque threshold {} must lie in (0, 1]",
                self.opaque_threshold
            )));
        }
        if self.reference_step.is_nan() || self.reference_step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reference step {} must be positive",
                self.reference_step
            )));
        }
        Ok(())
    }
}

/// Per-view lighting factors for every shade cell: `(k, s)` with
/// shaded color `c * k + s`.
pub fn shade_table(phong: Option<&Phong>, view_dir: crate::math::Vec3) -> Vec<(f64, f64)> {
    (0..SHADE_ENTRIES as u16)
        .map(|i| {
            phong
                .zip(shade_normal(i))
                .and_then(|(p, n)| p.factors(n, view_dir))
                .unwrap_or((1.0, 0.0))
        })
        .collect()
}

/// Intermediate image aligned with the slices. Pixel `(x, y)` sits at
/// base-plane coordinates `(x, y)`.
#[derive(Clone, Debug)]
pub struct BasePlane {
    pub dims: [usize; 2],
    /// Premultiplied color and opacity.
    pub pixels: Vec<[f64; 4]>,
    opaque_threshold: f64,
    /// Per row: `links[x] == x` for open pixels, otherwise a pointer
    /// towards the next open pixel; the extra slot is a sentinel.
    links: Vec<u32>,
}

impl BasePlane {
    fn new(dims: [usize; 2], opaque_threshold: f64) -> Self {
        let stride = dims[0] + 1;
        let links = (0..dims[1]).flat_map(|_| 0..stride as u32).collect();
        BasePlane {
            dims,
            pixels: vec![[0.0; 4]; dims[0] * dims[1]],
            opaque_threshold,
            links,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 4] {
        self.pixels[y * self.dims[0] + x]
    }

    pub fn is_opaque(&self, x: usize, y: usize) -> bool {
        self.links[y * (self.dims[0] + 1) + x] as usize != x
    }

    pub fn opaque_threshold(&self) -> f64 {
        self.opaque_threshold
    }

    /// Runs `(start, len)` of opaque pixels in row `y`.
    pub fn opaque_runs(&self, y: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for x in 0..self.dims[0] {
            if self.is_opaque(x, y) {
                match out.last_mut() {
                    Some((s, l)) if *s + *l == x => *l += 1,
                    _ => out.push((x, 1)),
                }
            }
        }
        out
    }
}

/// First open pixel at or after `x`, compressing the path behind it.
#[inline]
fn find_open(links: &mut [u32], x: usize) -> usize {
    let mut r = x;
    while links[r] as usize != r {
        r = links[r] as usize;
    }
    let mut c = x;
    while links[c] as usize != c {
        let next = links[c] as usize;
        links[c] = r as u32;
        c = next;
    }
    r
}

/// Composites all slices onto the base plane.
pub fn composite_base_plane(
    rle: &RleVolume,
    fac: &ShearWarpFactorization,
    tf: &TransferFunction,
    cfg: &ShearWarpConfig,
) -> Result<(BasePlane, RenderStats)> {
    cfg.validate()?;
    if rle.dims != fac.vol_dims() || rle.spacing != fac.spacing {
        return Err(Error::Mismatch(
            "shear-warp factorization was built for a different volume".into(),
        ));
    }
    if rle.tf_fingerprint != tf.fingerprint() {
        return Err(Error::Mismatch(
            "RLE volume was encoded under a different transfer function".into(),
        ));
    }
    let enc = rle.encoding(fac.major_axis);
    let [nu, nv, nw] = enc.dims();
    let bw = fac.base_dims[0];
    let mut base = BasePlane::new(fac.base_dims, cfg.opaque_threshold);
    let shades = shade_table(cfg.shading.as_ref(), fac.camera().forward);
    let exponent = fac.slice_step / cfg.reference_step;
    let mut stats = RenderStats {
        voxels_nontransparent: enc.voxel_count() as u64,
        ..Default::default()
    };

    let order: Vec<usize> = if fac.front_to_back_increasing {
        (0..nw).collect()
    } else {
        (0..nw).rev().collect()
    };
    let mut slice = vec![[0.0f64; 4]; nu * nv];
    let mut line_empty = vec![true; nv];
    for w in order {
        // classify the slice into a dense premultiplied buffer
        slice
            .par_chunks_mut(nu)
            .zip(line_empty.par_iter_mut())
            .enumerate()
            .for_each(|(v, (line, empty))| {
                line.fill([0.0; 4]);
                *empty = enc.runs(v, w).is_empty();
                enc.for_each_voxel(v, w, |u, vox| {
                    let e = tf.eval(vox.density as f64);
                    let a = correct(e.a, exponent);
                    let (k, s) = shades[vox.shade as usize];
                    let c = e.rgb().map(|c| (c * k + s).clamp(0.0, 1.0) * a);
                    line[u] = [c[0], c[1], c[2], a];
                });
            });
        let [ou, ov] = fac.slice_offset(w as f64);
        let (flu, flv) = (ou.floor(), ov.floor());
        let (fu, fv) = (ou - flu, ov - flv);
        let (flu, flv) = (flu as isize, flv as isize);
        // weights of the lower and upper neighbor along each axis
        let wu = [fu, 1.0 - fu];
        let wv = [fv, 1.0 - fv];
        let used: Vec<AtomicBool> = (0..nu * nv).map(|_| AtomicBool::new(false)).collect();
        let tau = cfg.opaque_threshold;

        base.pixels
            .par_chunks_mut(bw)
            .zip(base.links.par_chunks_mut(bw + 1))
            .enumerate()
            .for_each(|(y, (row, links))| {
                let v0 = y as isize - flv - 1;
                let lines: Vec<(usize, f64)> = [(v0, wv[0]), (v0 + 1, wv[1])]
                    .into_iter()
                    .filter(|&(v, wt)| wt > 0.0 && v >= 0 && (v as usize) < nv)
                    .map(|(v, wt)| (v as usize, wt))
                    .filter(|&(v, _)| !line_empty[v])
                    .collect();
                if lines.is_empty() {
                    return;
                }
                // pixels touched by some voxel run of either line
                let mut spans: Vec<(usize, usize)> = Vec::new();
                for &(v, _) in &lines {
                    let mut u = 0usize;
                    for r in enc.runs(v, w) {
                        u += r.skip as usize;
                        let lo = u as isize + flu;
                        let hi = (u + r.len as usize - 1) as isize + flu + isize::from(fu > 0.0);
                        spans.push((lo.max(0) as usize, (hi.min(bw as isize - 1)) as usize));
                        u += r.len as usize;
                    }
                }
                spans.sort_unstable();
                let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
                for (lo, hi) in spans {
                    match merged.last_mut() {
                        Some((_, h)) if lo <= *h + 1 => *h = (*h).max(hi),
                        _ => merged.push((lo, hi)),
                    }
                }
                for (lo, hi) in merged {
                    let mut x = find_open(links, lo);
                    while x <= hi {
                        let u0 = x as isize - flu - 1;
                        let mut acc = [0.0f64; 4];
                        for &(v, wtv) in &lines {
                            for (du, wtu) in wu.iter().enumerate() {
                                let u = u0 + du as isize;
                                if *wtu == 0.0 || u < 0 || u as usize >= nu {
                                    continue;
                                }
                                let s = slice[v * nu + u as usize];
                                if s[3] == 0.0 {
                                    continue;
                                }
                                used[v * nu + u as usize].store(true, Ordering::Relaxed);
                                let wt = wtu * wtv;
                                for c in 0..4 {
                                    acc[c] += wt * s[c];
                                }
                            }
                        }
                        let p = &mut row[x];
                        let keep = 1.0 - p[3];
                        for c in 0..4 {
                            p[c] += keep * acc[c];
                        }
                        if p[3] >= tau {
                            links[x] = (x + 1) as u32;
                        }
                        x = find_open(links, x + 1);
                    }
                }
            });
        stats.voxels_composited += used.iter().filter(|b| b.load(Ordering::Relaxed)).count() as u64;
    }
    Ok((base, stats))
}

#[inline]
fn correct(alpha: f64, exponent: f64) -> f64 {
    if exponent == 1.0 || alpha <= 0.0 || alpha >= 1.0 {
        alpha
    } else {
        1.0 - (1.0 - alpha).powf(exponent)
    }
}

/// Resamples the base plane into the final image with bilinear weights.
/// Image pixels whose preimage lies off the base plane are background.
pub fn warp(base: &BasePlane, fac: &ShearWarpFactorization) -> FrameBuffer {
    let (w, h) = fac.camera().image_dims;
    let [bw, bh] = base.dims;
    let pixels: Vec<Rgba> = (0..h)
        .into_par_iter()
        .flat_map_iter(|py| {
            (0..w).map(move |px| {
                let (bx, by) = fac.unwarp_point(px as f64 + 0.5, py as f64 + 0.5);
                if !(bx >= -0.5 && by >= -0.5 && bx <= bw as f64 - 0.5 && by <= bh as f64 - 0.5) {
                    return Rgba::TRANSPARENT;
                }
                let (bx, by) = (
                    bx.clamp(0.0, (bw - 1) as f64),
                    by.clamp(0.0, (bh - 1) as f64),
                );
                let (x0, y0) = (bx.floor() as usize, by.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(bw - 1), (y0 + 1).min(bh - 1));
                let (tx, ty) = (bx - x0 as f64, by - y0 as f64);
                let mut c = [0.0; 4];
                for (i, ci) in c.iter_mut().enumerate() {
                    let a = base.get(x0, y0)[i] + (base.get(x1, y0)[i] - base.get(x0, y0)[i]) * tx;
                    let b = base.get(x0, y1)[i] + (base.get(x1, y1)[i] - base.get(x0, y1)[i]) * tx;
                    *ci = (a + (b - a) * ty).clamp(0.0, 1.0);
                }
                Rgba::new(c[0], c[1], c[2], c[3])
            })
        })
        .collect();
    FrameBuffer::from_pixels(w, h, pixels)
}

/// Renders a pre-encoded volume with a factorization of `cam`.
pub fn render_shearwarp(
    rle: &RleVolume,
    fac: &ShearWarpFactorization,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &ShearWarpConfig,
) -> Result<(FrameBuffer, RenderStats)> {
    if fac.camera() != cam {
        return Err(Error::Mismatch(
            "shear-warp factorization does not match the camera".into(),
        ));
    }
    let (base, stats) = composite_base_plane(rle, fac, tf, cfg)?;
    Ok((warp(&base, fac), stats))
}

/// Encodes, factorizes and renders in one call.
pub fn render(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &ShearWarpConfig,
) -> Result<(FrameBuffer, RenderStats)> {
    let fac = factorize(cam, vol.dims(), vol.spacing())?;
    let rle = rle_encode(vol, tf);
    render_shearwarp(&rle, &fac, tf, cam, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skip_links_find_next_open_pixel() {
        let mut links: Vec<u32> = (0..9).collect();
        for x in [1, 2, 3, 5] {
            links[x] = (x + 1) as u32;
        }
        assert_eq!(find_open(&mut links, 0), 0);
        assert_eq!(find_open(&mut links, 1), 4);
        assert_eq!(links[1], 4);
        assert_eq!(find_open(&mut links, 5), 6);
        links[8 - 1] = 8;
        assert_eq!(find_open(&mut links, 7), 8);
    }

    #[test]
    fn shade_table_matches_phong() {
        let p = Phong::default();
        let view = crate::math::Vec3::new(0.3, -0.2, 0.9).normalize();
        let t = shade_table(Some(&p), view);
        assert_eq!(t.len(), SHADE_ENTRIES);
        for i in [0u16, 77, 700, 1535] {
            let n = shade_normal(i).unwrap();
            let want = p.shade([0.4, 0.5, 0.6], n, view);
            let (k, s) = t[i as usize];
            for (c, w) in [0.4, 0.5, 0.6].into_iter().zip(want) {
                assert!(((c * k + s).clamp(0.0, 1.0) - w).abs() < 1e-12);
            }
        }
        assert_eq!(t[SHADE_NONE as usize], (1.0, 0.0));
    }
}
