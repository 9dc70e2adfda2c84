//! Fourier-domain volume rendering.
//!
//! The volume is zero-padded to a cube of side `N` (a power of two at least
//! twice the largest dimension) and transformed once. The spectrum is
//! phase-referenced to the volume center and stored with the zero frequency
//! at index `N/2` on every axis. Each view then samples the central plane
//! spanned by the camera's right and up vectors and inverse transforms it
//! to get an orthographic X-ray image.

mod fft;

pub use fft::Fft;

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::math::{Fingerprint, Vec3};
use crate::transfer::Rgba;
use crate::volume::ScalarVolume;

/// Largest padded side accepted by default (256^3 complex values = 256 MiB).
pub const DEFAULT_MAX_N: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumVolume {
    n: usize,
    source_dims: [usize; 3],
    spacing: [f64; 3],
    source_fingerprint: u64,
    data: Vec<Complex64>,
}

/// Padded transform side for a volume.
pub fn padded_size(dims: [usize; 3]) -> usize {
    (2 * dims.iter().copied().max().unwrap_or(1)).next_power_of_two()
}

pub fn precompute_spectrum(vol: &ScalarVolume) -> Result<SpectrumVolume> {
    precompute_spectrum_limited(vol, DEFAULT_MAX_N)
}

pub fn precompute_spectrum_limited(vol: &ScalarVolume, max_n: usize) -> Result<SpectrumVolume> {
    let dims = vol.dims();
    let n = padded_size(dims);
    if n > max_n {
        return Err(Error::TooLarge {
            requested: n,
            limit: max_n,
        });
    }
    let mut data = vec![Complex64::new(0.0, 0.0); n * n * n];
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                data[i + n * (j + n * k)] = Complex64::new(vol.get(i, j, k), 0.0);
            }
        }
    }
    let plan = Fft::new(n);
    for _ in 0..3 {
        data.par_chunks_mut(n).for_each(|row| plan.forward(row));
        data = rotate_axes(&data, n);
    }

    // Reference phases to the volume center and move DC to index n/2.
    let phase: Vec<Vec<Complex64>> = (0..3)
        .map(|a| {
            let c = (dims[a] as f64 - 1.0) * 0.5;
            (0..n)
                .map(|s| {
                    let m = s as f64 - (n / 2) as f64;
                    Complex64::from_polar(1.0, 2.0 * PI * m * c / n as f64)
                })
                .collect()
        })
        .collect();
    let half = n / 2;
    let mut shifted = vec![Complex64::new(0.0, 0.0); n * n * n];
    shifted
        .par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(sz, plane)| {
            let kz = (sz + half) % n;
            for sy in 0..n {
                let ky = (sy + half) % n;
                let pyz = phase[1][sy] * phase[2][sz];
                for sx in 0..n {
                    let kx = (sx + half) % n;
                    plane[sx + n * sy] = data[kx + n * (ky + n * kz)] * phase[0][sx] * pyz;
                }
            }
        });
    Ok(SpectrumVolume {
        n,
        source_dims: dims,
        spacing: vol.spacing(),
        source_fingerprint: vol.fingerprint(),
        data: shifted,
    })
}

/// Cyclic axis permutation `(x, y, z) -> (y, z, x)` of an `n^3` cube, so
/// the next axis becomes the contiguous one. Three applications restore the
/// original layout.
fn rotate_axes(src: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(x, chunk)| {
            for z in 0..n {
                for y in 0..n {
                    chunk[y + n * z] = src[x + n * (y + n * z)];
                }
            }
        });
    out
}

impl SpectrumVolume {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source_dims(&self) -> [usize; 3] {
        self.source_dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn source_fingerprint(&self) -> u64 {
        self.source_fingerprint
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn byte_size(&self) -> usize {
        self.data.len() * std::mem::size_of::<Complex64>()
    }

    /// Value at shifted index `s` (zero frequency at `n/2`).
    #[inline]
    pub fn get(&self, s: [usize; 3]) -> Complex64 {
        self.data[s[0] + self.n * (s[1] + self.n * s[2])]
    }

    /// Value at signed integer frequency `m`; zero outside the cube.
    pub fn at_frequency(&self, m: [i64; 3]) -> Complex64 {
        let half = (self.n / 2) as i64;
        let s = m.map(|v| v + half);
        if s.iter().all(|&v| v >= 0 && v < self.n as i64) {
            self.get(s.map(|v| v as usize))
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// World center of the source volume.
    pub fn center(&self) -> Vec3 {
        Vec3::new(
            self.source_dims[0] as f64 * self.spacing[0],
            self.source_dims[1] as f64 * self.spacing[1],
            self.source_dims[2] as f64 * self.spacing[2],
        ) * 0.5
    }

    /// Writes the `RSPEC1` container: a text header line followed by
    /// little-endian f64 `(re, im)` pairs, x fastest.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let [sx, sy, sz] = self.source_dims;
        let [dx, dy, dz] = self.spacing;
        writeln!(
            w,
            "RSPEC1 {} {sx} {sy} {sz} {dx} {dy} {dz} {:016x}",
            self.n, self.source_fingerprint
        )?;
        for c in &self.data {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let bad = |r: &str| Error::format(path, r.to_string());
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header not UTF-8"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 9 || f[0] != "RSPEC1" {
            return Err(bad("not an RSPEC1 header"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer field"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad("bad real field"));
        let n = int(f[1])?;
        if !n.is_power_of_two() {
            return Err(bad("side is not a power of two"));
        }
        let source_dims = [int(f[2])?, int(f[3])?, int(f[4])?];
        let spacing = [real(f[5])?, real(f[6])?, real(f[7])?];
        let source_fingerprint =
            u64::from_str_radix(f[8], 16).map_err(|_| bad("bad fingerprint"))?;
        let payload = &bytes[nl + 1..];
        let count = n * n * n;
        if payload.len() != count * 16 {
            return Err(Error::LengthMismatch {
                expected: count,
                found: payload.len() / 16,
            });
        }
        let data = payload
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(SpectrumVolume {
            n,
            source_dims,
            spacing,
            source_fingerprint,
            data,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SliceFilter {
    Nearest,
    /// Trilinear interpolation of complex values.
    Linear,
    /// Lanczos-windowed sinc with the given radius (2 or 4).
    Sinc(u8),
}

impl Default for SliceFilter {
    fn default() -> Self {
        SliceFilter::Sinc(4)
    }
}

impl fmt::Display for SliceFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceFilter::Nearest => f.write_str("nearest"),
            SliceFilter::Linear => f.write_str("bilinear"),
            SliceFilter::Sinc(r) => write!(f, "sinc{r}"),
        }
    }
}

impl FromStr for SliceFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(SliceFilter::Nearest),
            "bilinear" | "linear" => Ok(SliceFilter::Linear),
            "sinc2" => Ok(SliceFilter::Sinc(2)),
            "sinc4" | "sinc" => Ok(SliceFilter::Sinc(4)),
            other => Err(Error::InvalidParameter(format!(
                "unknown slice filter `{other}` (expected nearest, bilinear, sinc2 or sinc4)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FvrOptions {
    pub filter: SliceFilter,
    /// Keep only frequencies with `|m| <= lowpass` (spectrum index units).
    pub lowpass: Option<f64>,
}

/// Central slice sampled on a `p x p` frequency grid. Entry `(a, b)` with
/// signed `a, b` in `[-p/2, p/2)` is stored at `(b + p/2) * p + (a + p/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceGrid {
    pub p: usize,
    pub data: Vec<Complex64>,
}

impl SliceGrid {
    pub fn get(&self, a: i64, b: i64) -> Complex64 {
        let h = (self.p / 2) as i64;
        self.data[((b + h) as usize) * self.p + (a + h) as usize]
    }
}

/// Size of the 2D transform used for a view.
pub fn slice_size(spec: &SpectrumVolume, cam: &Camera) -> usize {
    let (w, h) = cam.image_dims;
    spec.n.max(w.max(h).next_power_of_two())
}

/// Spectrum index coordinates (continuous, DC at `n/2`) of slice entry
/// `(a, b)`.
#[inline]
fn slice_position(
    spec: &SpectrumVolume,
    cam: &Camera,
    p: usize,
    (du, dv): (f64, f64),
    a: f64,
    b: f64,
) -> Vec3 {
    let n = spec.n as f64;
    let k = cam.right * (a / (p as f64 * du)) + cam.up * (b / (p as f64 * dv));
    Vec3::new(
        n * spec.spacing[0] * k.x,
        n * spec.spacing[1] * k.y,
        n * spec.spacing[2] * k.z,
    )
}

pub fn extract_slice(spec: &SpectrumVolume, cam: &Camera, opts: &FvrOptions) -> Result<SliceGrid> {
    let pixel = match cam.require_orthographic("Fourier volume rendering") {
        Ok(_) => cam.pixel_size(),
        Err(e) => return Err(e),
    };
    if let SliceFilter::Sinc(r) = opts.filter {
        if r != 2 && r != 4 {
            return Err(Error::InvalidParameter(format!(
                "sinc radius {r} must be 2 or 4"
            )));
        }
    }
    let p = slice_size(spec, cam);
    let half = (p / 2) as i64;
    let center = (spec.n / 2) as f64;
    let mut data = vec![Complex64::new(0.0, 0.0); p * p];
    data.par_chunks_mut(p).enumerate().for_each(|(row, out)| {
        let b = row as i64 - half;
        for (col, o) in out.iter_mut().enumerate() {
            let a = col as i64 - half;
            let m = slice_position(spec, cam, p, pixel, a as f64, b as f64);
            if let Some(k) = opts.lowpass {
                if m.length() > k {
                    continue;
                }
            }
            let pos = [m.x + center, m.y + center, m.z + center];
            *o = sample(spec, pos, opts.filter);
        }
    });
    Ok(SliceGrid { p, data })
}

/// Spectrum value at integer indices. Index `N` on an axis is the `+N/2`
/// frequency, which is not stored; it equals the `-N/2` entry times the
/// phase the center reference picks up over one period (`+1` or `-1`).
/// Any other index outside the cube reads zero.
#[inline]
fn fetch(spec: &SpectrumVolume, i: i64, j: i64, k: i64) -> Complex64 {
    let n = spec.n as i64;
    let mut idx = [i, j, k];
    let mut negate = false;
    for (a, v) in idx.iter_mut().enumerate() {
        if *v == n {
            *v = 0;
            negate ^= spec.source_dims[a].is_multiple_of(2);
        } else if *v < 0 || *v > n {
            return Complex64::new(0.0, 0.0);
        }
    }
    let c = spec.data[idx[0] as usize + spec.n * (idx[1] as usize + spec.n * idx[2] as usize)];
    if negate {
        -c
    } else {
        c
    }
}

fn sample(spec: &SpectrumVolume, pos: [f64; 3], filter: SliceFilter) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    match filter {
        SliceFilter::Nearest => {
            let r = pos.map(|v| (v + 0.5).floor() as i64);
            fetch(spec, r[0], r[1], r[2])
        }
        SliceFilter::Linear => {
            let base = pos.map(|v| v.floor());
            let t = [pos[0] - base[0], pos[1] - base[1], pos[2] - base[2]];
            let b = base.map(|v| v as i64);
            let mut acc = zero;
            for dz in 0..2 {
                let wz = if dz == 0 { 1.0 - t[2] } else { t[2] };
                for dy in 0..2 {
                    let wy = if dy == 0 { 1.0 - t[1] } else { t[1] };
                    for dx in 0..2 {
                        let wx = if dx == 0 { 1.0 - t[0] } else { t[0] };
                        let w = wx * wy * wz;
                        if w != 0.0 {
                            acc += fetch(spec, b[0] + dx, b[1] + dy, b[2] + dz) * w;
                        }
                    }
                }
            }
            acc
        }
        SliceFilter::Sinc(r) => {
            let n = spec.n as i64;
            let (sx, wx) = lanczos_weights(pos[0], r);
            let (sy, wy) = lanczos_weights(pos[1], r);
            let (sz, wz) = lanczos_weights(pos[2], r);
            let mut acc = zero;
            for (kz, &cz) in wz.iter().enumerate() {
                let z = sz + kz as i64;
                if cz == 0.0 || z < 0 || z > n {
                    continue;
                }
                for (ky, &cy) in wy.iter().enumerate() {
                    let y = sy + ky as i64;
                    if cy == 0.0 || y < 0 || y > n {
                        continue;
                    }
                    let wyz = cy * cz;
                    for (kx, &cx) in wx.iter().enumerate() {
                        let x = sx + kx as i64;
                        if cx != 0.0 {
                            acc += fetch(spec, x, y, z) * (cx * wyz);
                        }
                    }
                }
            }
            acc
        }
    }
}

/// Lanczos kernel weights for interpolating at `x`: returns the first tap
/// index and `2r` weights normalized to sum to one.
pub fn lanczos_weights(x: f64, r: u8) -> (i64, Vec<f64>) {
    let r = i64::from(r);
    let fl = x.floor() as i64;
    let start = fl - r + 1;
    let mut w: Vec<f64> = (0..2 * r)
        .map(|k| {
            let d = x - (start + k) as f64;
            sinc(d) * sinc(d / r as f64)
        })
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    (start, w)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Projection values per pixel, rows top to bottom. Real parts are line
/// integrals of the density in world units; imaginary parts are round-off
/// and resampling residue.
#[derive(Clone, Debug, PartialEq)]
pub struct FvrProjection {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Complex64>,
}

impl FvrProjection {
    /// Largest imaginary magnitude relative to the largest modulus.
    pub fn max_imag_ratio(&self) -> f64 {
        let max_mod = self.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max_mod == 0.0 {
            return 0.0;
        }
        self.values.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / max_mod
    }

    /// Moduli scaled so the brightest pixel is 1.
    pub fn normalized(&self) -> Vec<f64> {
        let mags: Vec<f64> = self.values.iter().map(|c| c.norm()).collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            mags
        } else {
            mags.into_iter().map(|m| m / max).collect()
        }
    }
}

pub fn project(spec: &SpectrumVolume, cam: &Camera, opts: &FvrOptions) -> Result<FvrProjection> {
    let slice = extract_slice(spec, cam, opts)?;
    let p = slice.p;
    let (w, h) = cam.image_dims;
    let (du, dv) = cam.pixel_size();
    let rel = spec.center() - cam.eye;
    let ou = (0.5 - w as f64 * 0.5) * du - rel.dot(cam.right);
    let ov = (0.5 - h as f64 * 0.5) * dv - rel.dot(cam.up);
    let half = (p / 2) as i64;

    // Phase ramp shifting sample positions onto pixel centers, laid out in
    // transform order.
    let mut grid = vec![Complex64::new(0.0, 0.0); p * p];
    grid.par_chunks_mut(p).enumerate().for_each(|(row, out)| {
        let b = if row < p / 2 {
            row as i64
        } else {
            row as i64 - p as i64
        };
        let phase_v = b as f64 * ov / (p as f64 * dv);
        for (col, o) in out.iter_mut().enumerate() {
            let a = if col < p / 2 {
                col as i64
            } else {
                col as i64 - p as i64
            };
            let phase = a as f64 * ou / (p as f64 * du) + phase_v;
            let v = slice.data[((b + half) as usize) * p + (a + half) as usize];
            *o = v * Complex64::from_polar(1.0, 2.0 * PI * phase);
        }
    });
    let plan = Fft::new(p);
    grid.par_chunks_mut(p).for_each(|row| plan.inverse(row));
    let mut grid = transpose(&grid, p);
    grid.par_chunks_mut(p).for_each(|row| plan.inverse(row));
    let grid = transpose(&grid, p);

    // voxel volume over pixel area turns the sample sums into integrals
    let [sx, sy, sz] = spec.spacing;
    let scale = sx * sy * sz / (du * dv);
    let mut values = Vec::with_capacity(w * h);
    for py in 0..h {
        let y = h - 1 - py;
        values.extend(grid[y * p..y * p + w].iter().map(|c| c * scale));
    }
    Ok(FvrProjection {
        width: w,
        height: h,
        values,
    })
}

fn transpose(src: &[Complex64], p: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(p).enumerate().for_each(|(r, row)| {
        for (c, v) in row.iter_mut().enumerate() {
            *v = src[c * p + r];
        }
    });
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FvrStats {
    pub n: usize,
    pub slice_size: usize,
    pub max_imag_ratio: f64,
}

/// Grayscale X-ray image scaled so the brightest pixel is 1; alpha is 1.
pub fn render_fvr(
    spec: &SpectrumVolume,
    cam: &Camera,
    opts: &FvrOptions,
) -> Result<(FrameBuffer, FvrStats)> {
    let proj = project(spec, cam, opts)?;
    let pixels = proj
        .normalized()
        .into_iter()
        .map(|g| Rgba::new(g, g, g, 1.0))
        .collect();
    let stats = FvrStats {
        n: spec.n,
        slice_size: slice_size(spec, cam),
        max_imag_ratio: proj.max_imag_ratio(),
    };
    Ok((
        FrameBuffer::from_pixels(proj.width, proj.height, pixels),
        stats,
    ))
}

/// Fingerprint for caching spectra: the source volume's content hash.
pub fn spectrum_key(vol: &ScalarVolume) -> u64 {
    let mut h = Fingerprint::new();
    h.write_u64(0x5350_4543);
    h.write_u64(vol.fingerprint());
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Projection;

    fn random_volume(n: usize, seed: u64) -> ScalarVolume {
        let mut s = seed;
        ScalarVolume::from_fn([n; 3], [1.0; 3], |_, _, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    #[test]
    fn zero_volume_zero_spectrum() {
        let v = ScalarVolume::new([4; 3], [1.0; 3], vec![0.0; 64]).unwrap();
        let s = precompute_spectrum(&v).unwrap();
        assert_eq!(s.n(), 8);
        assert!(s.data().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn centered_impulse_is_flat() {
        let mut data = vec![0.0; 125];
        data[2 + 5 * (2 + 5 * 2)] = 1.0;
        let v = ScalarVolume::new([5; 3], [1.0; 3], data).unwrap();
        let s = precompute_spectrum(&v).unwrap();
        for c in s.data() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft() {
        let v = random_volume(4, 7);
        let s = precompute_spectrum(&v).unwrap();
        let n = s.n() as i64;
        let c = 1.5;
        for m in [[0, 0, 0], [1, -2, 3], [-4, 0, 2], [3, 3, -1]] {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                for j in 0..4 {
                    for i in 0..4 {
                        let ph = -2.0
                            * PI
                            * (m[0] as f64 * (i as f64 - c)
                                + m[1] as f64 * (j as f64 - c)
                                + m[2] as f64 * (k as f64 - c))
                            / n as f64;
                        acc += Complex64::from_polar(v.get(i, j, k), ph);
                    }
                }
            }
            assert!((s.at_frequency(m) - acc).norm() < 1e-10, "m = {m:?}");
        }
    }

    #[test]
    fn conjugate_symmetric() {
        let s = precompute_spectrum(&random_volume(5, 3)).unwrap();
        let h = (s.n() / 2) as i64;
        for m in [[1, 2, 3], [-3, 0, 4], [h - 1, -h + 1, 0]] {
            let a = s.at_frequency(m);
            let b = s.at_frequency(m.map(|v| -v));
            assert!((a - b.conj()).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_perspective_and_oversize() {
        let v = random_volume(4, 1);
        let s = precompute_spectrum(&v).unwrap();
        let cam = Camera::new(
            Vec3::new(2.0, 2.0, -5.0),
            Vec3::Z,
            Vec3::Y,
            Projection::Perspective { fov_y: 0.5 },
            (8, 8),
        )
        .unwrap();
        assert!(matches!(
            render_fvr(&s, &cam, &FvrOptions::default()),
            Err(Error::OrthographicOnly(_))
        ));
        assert!(matches!(
            precompute_spectrum_limited(&v, 4),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn lanczos_weights_sum_to_one() {
        for x in [0.0, 0.25, 3.5, 7.99, -1.3] {
            for r in [2, 4] {
                let (_, w) = lanczos_weights(x, r);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let (start, w) = lanczos_weights(5.0, 4);
        assert_eq!(w[(5 - start) as usize], 1.0);
    }

    #[test]
    fn spectrum_file_round_trip() {
        let s = precompute_spectrum(&random_volume(4, 9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.rspec");
        s.save(&path).unwrap();
        assert_eq!(SpectrumVolume::load(&path).unwrap(), s);
    }

    #[test]
    fn filter_names_parse() {
        for f in [
            SliceFilter::Nearest,
            SliceFilter::Linear,
            SliceFilter::Sinc(2),
            SliceFilter::Sinc(4),
        ] {
            assert_eq!(f.to_string().parse::<SliceFilter>().unwrap(), f);
        }
    }
}
