//! Image-order rendering: one ray per pixel, five traversal schemes.
//!
//! Every ray samples the fixed lattice `t_k = t_enter + (k + 0.5) * step`
//! for `k < n`, `n = round(length / step)`. Acceleration structures only
//! decide which lattice samples to evaluate, so they reproduce brute-force
//! images exactly.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::camera::{Camera, Projection};
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::math::{Aabb, Vec3};
use crate::shading::Phong;
use crate::stats::RenderStats;
use crate::transfer::{Rgba, TransferFunction};
use crate::volume::{GradientVolume, ScalarVolume};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RayMode {
    /// First crossing of the isovalue, refined by bisection and shaded.
    FirstHit { iso: f64 },
    /// Density integral along the ray.
    XRay,
    /// Maximum intensity projection.
    Mip,
    /// First local maximum at or above `threshold`.
    Lmip { threshold: f64 },
    /// Front-to-back emission/absorption compositing.
    Composite,
}

impl RayMode {
    pub fn name(&self) -> &'static str {
        match self {
            RayMode::FirstHit { .. } => "iso",
            RayMode::XRay => "xray",
            RayMode::Mip => "mip",
            RayMode::Lmip { .. } => "lmip",
            RayMode::Composite => "composite",
        }
    }
}

impl fmt::Display for RayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositeConfig {
    pub mode: RayMode,
    /// Sampling distance in voxels (of the smallest spacing).
    pub step: f64,
    /// Rays stop once accumulated opacity reaches this value.
    pub ert_threshold: f64,
    pub shading: Option<Phong>,
    /// Step length, in voxels, at which tabulated opacities apply unchanged.
    pub reference_step: f64,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            mode: RayMode::Composite,
            step: 1.0,
            ert_threshold: 1.0,
            shading: Some(Phong::default()),
            reference_step: 1.0,
        }
    }
}

impl CompositeConfig {
    pub fn with_mode(mode: RayMode) -> Self {
        CompositeConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step {} must be positive",
                self.step
            )));
        }
        if !(self.ert_threshold > 0.0 && self.ert_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ert threshold {} must lie in (0, 1]",
                self.ert_threshold
            )));
        }
        if self.reference_step.is_nan() || self.reference_step <= 0.0 {
            return Err(Error::InvalidParameter(
                "reference step must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl FromStr for RayMode {
    type Err = Error;

    /// Parses the parameterless modes; `iso` and `lmip` take default
    /// parameters that callers usually override.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iso" | "first-hit" => Ok(RayMode::FirstHit { iso: 0.5 }),
            "xray" => Ok(RayMode::XRay),
            "mip" => Ok(RayMode::Mip),
            "lmip" => Ok(RayMode::Lmip { threshold: 0.5 }),
            "composite" => Ok(RayMode::Composite),
            other => Err(Error::InvalidParameter(format!(
                "unknown ray mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    /// `(t_enter, t_exit)` against the volume box, `None` on a miss.
    pub span: Option<(f64, f64)>,
}

/// Ray through the center of pixel `(px, py)`, clipped to `bounds`.
/// Orthographic rays extend in both directions from the image plane.
pub fn generate_ray(cam: &Camera, bounds: &Aabb, px: usize, py: usize) -> Ray {
    let (origin, dir) = cam.ray(px, py);
    let t_min = match cam.projection {
        Projection::Orthographic { .. } => f64::NEG_INFINITY,
        Projection::Perspective { .. } => 0.0,
    };
    Ray {
        origin,
        dir,
        span: bounds.intersect(origin, dir, t_min),
    }
}

/// Sample positions of one ray, in index coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Lattice {
    pub origin_index: Vec3,
    pub dir_index: Vec3,
    pub t0: f64,
    pub step: f64,
    pub n: usize,
}

impl Lattice {
    pub fn new(vol: &ScalarVolume, ray: &Ray, step_voxels: f64) -> Option<Lattice> {
        let (t_enter, t_exit) = ray.span?;
        let step = step_voxels * vol.min_spacing();
        let n = ((t_exit - t_enter) / step + 0.5).floor();
        if n < 1.0 {
            return None;
        }
        Some(Lattice {
            origin_index: vol.world_to_index(ray.origin),
            dir_index: ray.dir.div_elem(vol.spacing_vec()),
            t0: t_enter,
            step,
            n: n as usize,
        })
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.step
    }

    #[inline]
    pub fn index_pos(&self, k: usize) -> Vec3 {
        self.origin_index + self.dir_index * self.t(k)
    }

    /// Index position at an arbitrary ray parameter.
    #[inline]
    pub fn index_at(&self, t: f64) -> Vec3 {
        self.origin_index + self.dir_index * t
    }
}

/// Everything a traversal needs besides the ray.
pub struct Shader<'a> {
    pub vol: &'a ScalarVolume,
    pub grads: Option<&'a GradientVolume>,
    pub tf: &'a TransferFunction,
    pub cfg: &'a CompositeConfig,
    opacity_exponent: f64,
}

impl<'a> Shader<'a> {
    pub fn new(
        vol: &'a ScalarVolume,
        grads: Option<&'a GradientVolume>,
        tf: &'a TransferFunction,
        cfg: &'a CompositeConfig,
    ) -> Self {
        Shader {
            vol,
            grads,
            tf,
            cfg,
            opacity_exponent: cfg.step / cfg.reference_step,
        }
    }

    /// Opacity corrected for the step length.
    #[inline]
    pub fn correct_opacity(&self, a: f64) -> f64 {
        if self.opacity_exponent == 1.0 || a == 0.0 || a == 1.0 {
            a
        } else {
            1.0 - (1.0 - a).powf(self.opacity_exponent)
        }
    }

    /// Shaded color and corrected opacity for a density; `None` when the
    /// sample is fully transparent.
    #[inline]
    pub fn classify(&self, density: f64, at: Vec3, view_dir: Vec3) -> Option<([f64; 3], f64)> {
        let c = self.tf.eval(density);
        let alpha = self.correct_opacity(c.a);
        if alpha == 0.0 {
            return None;
        }
        let color = match (self.cfg.shading, self.grads) {
            (Some(phong), Some(g)) => phong.shade(c.rgb(), g.sample_index(at), view_dir),
            _ => c.rgb(),
        };
        Some((color, alpha))
    }

    /// Classified lattice sample `k`.
    #[inline]
    pub fn sample(&self, lat: &Lattice, k: usize, view_dir: Vec3) -> Option<([f64; 3], f64)> {
        let at = lat.index_pos(k);
        self.classify(self.vol.sample_index(at), at, view_dir)
    }
}

/// Front-to-back accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accum {
    pub color: [f64; 3],
    pub alpha: f64,
}

impl Accum {
    /// Adds one sample behind everything accumulated so far.
    #[inline]
    pub fn over(&mut self, color: [f64; 3], alpha: f64) {
        let w = (1.0 - self.alpha) * alpha;
        for (acc, c) in self.color.iter_mut().zip(color) {
            *acc += w * c;
        }
        self.alpha += w;
    }
}

/// Composites `(color, alpha)` samples front to back, stopping once alpha
/// reaches `ert`. Returns the accumulation and the number of samples used.
pub fn composite_front_to_back(samples: &[([f64; 3], f64)], ert: f64) -> (Accum, usize) {
    let mut acc = Accum::default();
    for (i, &(c, a)) in samples.iter().enumerate() {
        acc.over(c, a);
        if acc.alpha >= ert {
            return (acc, i + 1);
        }
    }
    (acc, samples.len())
}

/// Classified samples along a ray (transparent samples included with
/// alpha 0), for inspection and oracle comparisons.
pub fn ray_samples(shader: &Shader, ray: &Ray) -> Vec<([f64; 3], f64)> {
    let Some(lat) = Lattice::new(shader.vol, ray, shader.cfg.step) else {
        return Vec::new();
    };
    (0..lat.n)
        .map(|k| shader.sample(&lat, k, ray.dir).unwrap_or(([0.0; 3], 0.0)))
        .collect()
}

/// Decides which lattice samples may contribute.
pub trait Skipper: Sync {
    /// First index `>= k` that may hold a contributing sample (or `n`).
    fn next(&self, lat: &Lattice, k: usize) -> usize;
}

pub struct NoSkip;

impl Skipper for NoSkip {
    #[inline]
    fn next(&self, _lat: &Lattice, k: usize) -> usize {
        k
    }
}

/// Result of one ray.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RayResult {
    pub color: [f64; 3],
    pub alpha: f64,
    /// Raw scalar for integral modes (integral, maximum, local maximum).
    pub value: f64,
    pub depth: f64,
    pub stats: RenderStats,
}

/// Front-to-back compositing along a ray with optional skipping.
pub fn traverse_composite(shader: &Shader, ray: &Ray, skip: &dyn Skipper) -> RayResult {
    let mut out = RayResult {
        depth: f64::INFINITY,
        ..Default::default()
    };
    let Some(lat) = Lattice::new(shader.vol, ray, shader.cfg.step) else {
        return out;
    };
    out.stats.samples_total = lat.n as u64;
    let ert = shader.cfg.ert_threshold;
    let mut acc = Accum::default();
    let mut k = 0;
    while k < lat.n {
        let next = skip.next(&lat, k).min(lat.n);
        out.stats.samples_skipped += (next - k) as u64;
        k = next;
        if k >= lat.n {
            break;
        }
        out.stats.samples_taken += 1;
        if let Some((c, a)) = shader.sample(&lat, k, ray.dir) {
            if acc.alpha == 0.0 {
                out.depth = lat.t(k);
            }
            acc.over(c, a);
            if acc.alpha >= ert {
                if k + 1 < lat.n {
                    out.stats.rays_terminated += 1;
                }
                break;
            }
        }
        k += 1;
    }
    out.color = acc.color;
    out.alpha = acc.alpha;
    out
}

/// X-ray, MIP and LMIP along a ray. Skipping is only valid for MIP and
/// only over samples whose density is at most zero.
pub fn traverse_integral(shader: &Shader, ray: &Ray, skip: &dyn Skipper) -> RayResult {
    let mut out = RayResult {
        depth: f64::INFINITY,
        ..Default::default()
    };
    let Some(lat) = Lattice::new(shader.vol, ray, shader.cfg.step) else {
        return out;
    };
    out.stats.samples_total = lat.n as u64;
    let vol = shader.vol;
    match shader.cfg.mode {
        RayMode::XRay => {
            let sum: f64 = (0..lat.n).map(|k| vol.sample_index(lat.index_pos(k))).sum();
            out.stats.samples_taken = lat.n as u64;
            out.value = sum * lat.step;
        }
        RayMode::Mip => {
            let mut best = 0.0f64;
            let mut k = 0;
            while k < lat.n {
                let next = skip.next(&lat, k).min(lat.n);
                out.stats.samples_skipped += (next - k) as u64;
                k = next;
                if k >= lat.n {
                    break;
                }
                out.stats.samples_taken += 1;
                let v = vol.sample_index(lat.index_pos(k));
                if v > best {
                    best = v;
                    out.depth = lat.t(k);
                }
                k += 1;
            }
            out.value = best;
        }
        RayMode::Lmip { threshold } => {
            let vals: Vec<f64> = (0..lat.n)
                .map(|k| vol.sample_index(lat.index_pos(k)))
                .collect();
            out.stats.samples_taken = lat.n as u64;
            out.value = first_local_max(&vals, threshold)
                .unwrap_or_else(|| vals.iter().copied().fold(0.0, f64::max));
        }
        RayMode::FirstHit { .. } | RayMode::Composite => {
            unreachable!("traverse_integral called with {}", shader.cfg.mode)
        }
    }
    out.color = [out.value; 3];
    out.alpha = 1.0;
    out
}

/// First sample `>= threshold` that is strictly greater than both
/// neighbors, treating a run of equal samples as one; values beyond the
/// ends count as zero.
pub fn first_local_max(vals: &[f64], threshold: f64) -> Option<f64> {
    let mut k = 0;
    while k < vals.len() {
        let v = vals[k];
        let mut end = k;
        while end + 1 < vals.len() && vals[end + 1] == v {
            end += 1;
        }
        let before = if k == 0 { 0.0 } else { vals[k - 1] };
        let after = vals.get(end + 1).copied().unwrap_or(0.0);
        if v >= threshold && v > before && v > after {
            return Some(v);
        }
        k = end + 1;
    }
    None
}

/// Number of bisection steps refining a first hit.
pub const BISECTION_STEPS: usize = 8;

/// First crossing of `iso` along the ray: parameter `t` of the hit.
pub fn find_first_hit(vol: &ScalarVolume, ray: &Ray, step_voxels: f64, iso: f64) -> Option<f64> {
    let lat = Lattice::new(vol, ray, step_voxels)?;
    let f = |t: f64| vol.sample_index(lat.index_at(t));
    let mut prev_t = lat.t0;
    if f(prev_t) >= iso {
        return Some(prev_t);
    }
    for k in 0..lat.n {
        let t = lat.t(k);
        if f(t) >= iso {
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= iso {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev_t = t;
    }
    None
}

/// First-hit traversal shaded white with Phong.
pub fn traverse_first_hit(shader: &Shader, ray: &Ray, iso: f64) -> RayResult {
    let mut out = RayResult {
        depth: f64::INFINITY,
        ..Default::default()
    };
    let Some(lat) = Lattice::new(shader.vol, ray, shader.cfg.step) else {
        return out;
    };
    out.stats.samples_total = lat.n as u64;
    let Some(t) = find_first_hit(shader.vol, ray, shader.cfg.step, iso) else {
        out.stats.samples_taken = lat.n as u64;
        return out;
    };
    out.stats.samples_taken = (((t - lat.t0) / lat.step).ceil() as u64).min(lat.n as u64);
    let at = lat.index_at(t);
    let phong = shader.cfg.shading.unwrap_or_default();
    out.color = match shader.grads {
        Some(g) => phong.shade([1.0; 3], g.sample_index(at), ray.dir),
        None => [1.0; 3],
    };
    out.alpha = 1.0;
    out.value = 1.0;
    out.depth = t;
    out
}

/// Traces every pixel with `trace`, parallel over rows.
pub fn render_rows<F>(cam: &Camera, bounds: &Aabb, trace: F) -> (Vec<RayResult>, RenderStats)
where
    F: Fn(&Ray) -> RayResult + Sync,
{
    let (w, h) = cam.image_dims;
    let rows: Vec<Vec<RayResult>> = (0..h)
        .into_par_iter()
        .map(|py| {
            (0..w)
                .map(|px| trace(&generate_ray(cam, bounds, px, py)))
                .collect()
        })
        .collect();
    let results: Vec<RayResult> = rows.into_iter().flatten().collect();
    let stats = results.iter().map(|r| r.stats).sum();
    (results, stats)
}

/// Turns per-ray results into an image. X-ray integrals are scaled so the
/// brightest pixel is 1; other modes are clamped to `[0, 1]`.
pub fn assemble(cam: &Camera, mode: RayMode, results: &[RayResult]) -> FrameBuffer {
    let (w, h) = cam.image_dims;
    let scale = if let RayMode::XRay = mode {
        let m = results.iter().map(|r| r.value).fold(0.0, f64::max);
        if m > 0.0 {
            1.0 / m
        } else {
            1.0
        }
    } else {
        1.0
    };
    let pixels = results
        .iter()
        .map(|r| match mode {
            RayMode::XRay => {
                let g = (r.value * scale).clamp(0.0, 1.0);
                Rgba::new(g, g, g, 1.0)
            }
            RayMode::Mip | RayMode::Lmip { .. } => {
                let g = r.value.clamp(0.0, 1.0);
                Rgba::new(g, g, g, 1.0)
            }
            _ => Rgba::new(
                r.color[0].clamp(0.0, 1.0),
                r.color[1].clamp(0.0, 1.0),
                r.color[2].clamp(0.0, 1.0),
                r.alpha.clamp(0.0, 1.0),
            ),
        })
        .collect();
    let mut fb = FrameBuffer::from_pixels(w, h, pixels);
    fb.set_depth(results.iter().map(|r| r.depth).collect());
    fb
}

/// Renders with an explicit skipper and precomputed gradients.
pub fn render_with(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &CompositeConfig,
    skip: &dyn Skipper,
) -> Result<(FrameBuffer, RenderStats)> {
    cfg.validate()?;
    let shader = Shader::new(vol, grads, tf, cfg);
    let bounds = vol.bounds();
    let (results, stats) = render_rows(cam, &bounds, |ray| match cfg.mode {
        RayMode::Composite => traverse_composite(&shader, ray, skip),
        RayMode::FirstHit { iso } => traverse_first_hit(&shader, ray, iso),
        _ => traverse_integral(&shader, ray, skip),
    });
    Ok((assemble(cam, cfg.mode, &results), stats))
}

/// Whether a configuration needs a gradient volume.
pub fn needs_gradients(cfg: &CompositeConfig) -> bool {
    match cfg.mode {
        RayMode::Composite => cfg.shading.is_some(),
        RayMode::FirstHit { .. } => true,
        _ => false,
    }
}

/// Brute-force render; computes gradients when shading requires them.
pub fn render(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &CompositeConfig,
) -> Result<(FrameBuffer, RenderStats)> {
    let grads = needs_gradients(cfg).then(|| vol.gradient_central());
    render_with(vol, grads.as_ref(), tf, cam, cfg, &NoSkip)
}

/// Unnormalized density line integrals per pixel, in world units.
pub fn xray_projection(vol: &ScalarVolume, cam: &Camera, step: f64) -> Result<Vec<f64>> {
    let tf = TransferFunction::ramp();
    let cfg = CompositeConfig {
        step,
        shading: None,
        ..CompositeConfig::with_mode(RayMode::XRay)
    };
    cfg.validate()?;
    let shader = Shader::new(vol, None, &tf, &cfg);
    let (results, _) = render_rows(cam, &vol.bounds(), |ray| {
        traverse_integral(&shader, ray, &NoSkip)
    });
    Ok(results.into_iter().map(|r| r.value).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::ControlPoint;

    fn ortho_z(n: usize, px: usize) -> Camera {
        let c = n as f64 * 0.5;
        Camera::new(
            Vec3::new(c, c, -10.0),
            Vec3::Z,
            Vec3::Y,
            Projection::Orthographic {
                width: n as f64,
                height: n as f64,
            },
            (px, px),
        )
        .unwrap()
    }

    #[test]
    fn local_max_rules() {
        assert_eq!(
            first_local_max(&[0.0, 0.6, 0.6, 0.0, 0.9, 0.0], 0.5),
            Some(0.6)
        );
        // rising plateau is not a maximum
        assert_eq!(first_local_max(&[0.6, 0.6, 0.9, 0.0], 0.5), Some(0.9));
        assert_eq!(first_local_max(&[0.3, 0.2], 0.5), None);
        // a maximum at the end of the ray counts
        assert_eq!(first_local_max(&[0.1, 0.7], 0.5), Some(0.7));
    }

    #[test]
    fn center_ray_follows_forward() {
        let cam = ortho_z(8, 9);
        let vol = ScalarVolume::new([8; 3], [1.0; 3], vec![0.0; 512]).unwrap();
        let r = generate_ray(&cam, &vol.bounds(), 4, 4);
        assert_eq!(r.dir, cam.forward);
        assert_eq!(r.span, Some((10.0, 18.0)));
    }

    #[test]
    fn constant_xray_is_length_times_value() {
        let vol = ScalarVolume::new([8; 3], [1.0; 3], vec![0.5; 512]).unwrap();
        let cfg = CompositeConfig::with_mode(RayMode::XRay);
        let tf = TransferFunction::ramp();
        let shader = Shader::new(&vol, None, &tf, &cfg);
        let cam = ortho_z(8, 8);
        let r = traverse_integral(&shader, &generate_ray(&cam, &vol.bounds(), 3, 3), &NoSkip);
        assert!((r.value - 0.5 * 8.0).abs() <= 0.5);
    }

    #[test]
    fn opaque_first_sample_absorbs() {
        let tf = TransferFunction::new(vec![
            ControlPoint::new(0.0, [0.2, 0.4, 0.6], 1.0),
            ControlPoint::new(1.0, [0.2, 0.4, 0.6], 1.0),
        ])
        .unwrap();
        let vol = ScalarVolume::from_fn([8; 3], [1.0; 3], |i, _, _| i as f64 / 7.0).unwrap();
        let cfg = CompositeConfig {
            shading: None,
            ..Default::default()
        };
        let (fb, stats) = render(&vol, &tf, &ortho_z(8, 4), &cfg).unwrap();
        for p in fb.pixels() {
            assert_eq!((p.r, p.g, p.b, p.a), (0.2, 0.4, 0.6, 1.0));
        }
        assert_eq!(stats.samples_taken, 16);
        assert_eq!(stats.rays_terminated, 16);
    }

    #[test]
    fn transparent_volume_is_background() {
        let vol = ScalarVolume::new([8; 3], [1.0; 3], vec![0.0; 512]).unwrap();
        let (fb, _) = render(
            &vol,
            &TransferFunction::ramp(),
            &ortho_z(8, 5),
            &Default::default(),
        )
        .unwrap();
        assert!(fb.pixels().iter().all(|p| *p == Rgba::TRANSPARENT));
    }

    #[test]
    fn config_validation() {
        let zero_step = CompositeConfig {
            step: 0.0,
            ..Default::default()
        };
        assert!(zero_step.validate().is_err());
        let zero_ert = CompositeConfig {
            ert_threshold: 0.0,
            ..Default::default()
        };
        assert!(zero_ert.validate().is_err());
    }
}
