//! Run-length encoded classified volumes, one encoding per major axis.
//!
//! On-disk form (`RRLE1`): an ASCII header line
//! `RRLE1 nx ny nz dx dy dz volume_fp tf_fp` followed, for each axis, by
//! little-endian `u64` counts (lines, runs, voxels) and the arrays
//! `line_runs: u32[lines+1]`, `runs: (u32 skip, u32 len)[runs]`,
//! `line_voxels: u32[lines+1]`, `voxels: (f32 density, u16 shade)[voxels]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::factor::slice_axes;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::transfer::TransferFunction;
use crate::volume::ScalarVolume;

const MAGIC: &str = "RRLE1";

/// Quantization bins per cube-face axis.
pub const SHADE_BINS: usize = 16;
/// Face-quantized normals plus one slot for a vanishing gradient.
pub const SHADE_ENTRIES: usize = 6 * SHADE_BINS * SHADE_BINS + 1;
pub const SHADE_NONE: u16 = (SHADE_ENTRIES - 1) as u16;

/// Index of the cube-face cell hit by the gradient direction.
pub fn shade_index(g: Vec3) -> u16 {
    let Some(n) = g.try_normalize() else {
        return SHADE_NONE;
    };
    let a = n.abs().dominant_axis();
    let face = 2 * a + usize::from(n[a] < 0.0);
    let (p, q) = ((a + 1) % 3, (a + 2) % 3);
    let bin = |t: f64| {
        let x = ((t / n[a].abs() + 1.0) * 0.5 * SHADE_BINS as f64).floor() as isize;
        x.clamp(0, SHADE_BINS as isize - 1) as usize
    };
    (face * SHADE_BINS * SHADE_BINS + bin(n[p]) * SHADE_BINS + bin(n[q])) as u16
}

/// Representative unit normal of a shade cell, `None` for [`SHADE_NONE`].
pub fn shade_normal(index: u16) -> Option<Vec3> {
    let i = index as usize;
    if i >= SHADE_ENTRIES - 1 {
        return None;
    }
    let face = i / (SHADE_BINS * SHADE_BINS);
    let (bp, bq) = ((i / SHADE_BINS) % SHADE_BINS, i % SHADE_BINS);
    let a = face / 2;
    let sign = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
    let center = |b: usize| (b as f64 + 0.5) / SHADE_BINS as f64 * 2.0 - 1.0;
    let mut c = [0.0; 3];
    c[a] = sign;
    c[(a + 1) % 3] = center(bp);
    c[(a + 2) % 3] = center(bq);
    Some(Vec3::from_array(c).normalize())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RleVoxel {
    pub density: f32,
    pub shade: u16,
}

/// `skip` transparent voxels followed by `len` non-transparent ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub skip: u32,
    pub len: u32,
}

/// Scanlines run along `u`; line `(v, w)` is stored at `w * n_v + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct RleEncoding {
    major_axis: usize,
    dims: [usize; 3],
    line_runs: Vec<u32>,
    runs: Vec<Run>,
    line_voxels: Vec<u32>,
    voxels: Vec<RleVoxel>,
}

impl RleEncoding {
    pub fn major_axis(&self) -> usize {
        self.major_axis
    }

    /// `[n_u, n_v, n_w]`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn line(&self, v: usize, w: usize) -> usize {
        w * self.dims[1] + v
    }

    pub fn runs(&self, v: usize, w: usize) -> &[Run] {
        let l = self.line(v, w);
        &self.runs[self.line_runs[l] as usize..self.line_runs[l + 1] as usize]
    }

    pub fn voxels(&self, v: usize, w: usize) -> &[RleVoxel] {
        let l = self.line(v, w);
        &self.voxels[self.line_voxels[l] as usize..self.line_voxels[l + 1] as usize]
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// Non-transparent mask of one scanline.
    pub fn decode_mask(&self, v: usize, w: usize) -> Vec<bool> {
        let mut out = vec![false; self.dims[0]];
        let mut u = 0;
        for r in self.runs(v, w) {
            u += r.skip as usize;
            out[u..u + r.len as usize].fill(true);
            u += r.len as usize;
        }
        out
    }

    /// Calls `f(u, voxel)` for every stored voxel of a scanline.
    pub fn for_each_voxel(&self, v: usize, w: usize, mut f: impl FnMut(usize, &RleVoxel)) {
        let vox = self.voxels(v, w);
        let (mut u, mut i) = (0, 0);
        for r in self.runs(v, w) {
            u += r.skip as usize;
            for _ in 0..r.len {
                f(u, &vox[i]);
                u += 1;
                i += 1;
            }
        }
    }
}

/// The three per-axis encodings of a volume under one transfer function.
#[derive(Clone, Debug, PartialEq)]
pub struct RleVolume {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub volume_fingerprint: u64,
    pub tf_fingerprint: u64,
    encodings: [RleEncoding; 3],
}

/// Encodes voxels whose transfer-function opacity is positive, with
/// quantized gradient directions as shade indices.
pub fn rle_encode(vol: &ScalarVolume, tf: &TransferFunction) -> RleVolume {
    let dims = vol.dims();
    let grads = vol.gradient_central();
    let data: Vec<Option<RleVoxel>> = (0..vol.len())
        .map(|idx| {
            let d = vol.data()[idx];
            (tf.opacity(d) > 0.0).then(|| {
                let (i, j, k) = (
                    idx % dims[0],
                    (idx / dims[0]) % dims[1],
                    idx / (dims[0] * dims[1]),
                );
                RleVoxel {
                    density: d as f32,
                    shade: shade_index(grads.get(i, j, k)),
                }
            })
        })
        .collect();
    let encodings = [0, 1, 2].map(|a| encode_axis(&data, dims, a));
    RleVolume {
        dims,
        spacing: vol.spacing(),
        volume_fingerprint: vol.fingerprint(),
        tf_fingerprint: tf.fingerprint(),
        encodings,
    }
}

fn encode_axis(data: &[Option<RleVoxel>], dims: [usize; 3], a: usize) -> RleEncoding {
    let (ua, va) = slice_axes(a);
    let nd = [dims[ua], dims[va], dims[a]];
    let mut enc = RleEncoding {
        major_axis: a,
        dims: nd,
        line_runs: vec![0],
        runs: Vec::new(),
        line_voxels: vec![0],
        voxels: Vec::new(),
    };
    for w in 0..nd[2] {
        for v in 0..nd[1] {
            let mut skip = 0u32;
            let mut len = 0u32;
            for u in 0..nd[0] {
                let mut c = [0; 3];
                c[ua] = u;
                c[va] = v;
                c[a] = w;
                match data[c[0] + dims[0] * (c[1] + dims[1] * c[2])] {
                    Some(vox) => {
                        enc.voxels.push(vox);
                        len += 1;
                    }
                    None => {
                        if len > 0 {
                            enc.runs.push(Run { skip, len });
                            skip = 0;
                            len = 0;
                        }
                        skip += 1;
                    }
                }
            }
            if len > 0 {
                enc.runs.push(Run { skip, len });
            }
            enc.line_runs.push(enc.runs.len() as u32);
            enc.line_voxels.push(enc.voxels.len() as u32);
        }
    }
    enc
}

impl RleVolume {
    pub fn encoding(&self, major_axis: usize) -> &RleEncoding {
        &self.encodings[major_axis]
    }

    pub fn voxel_count(&self) -> usize {
        self.encodings[0].voxel_count()
    }

    /// Whether this encoding was built from `vol` under `tf`.
    pub fn is_current(&self, vol: &ScalarVolume, tf: &TransferFunction) -> bool {
        self.volume_fingerprint == vol.fingerprint() && self.tf_fingerprint == tf.fingerprint()
    }

    /// Re-encodes only if the volume or transfer function changed.
    /// Returns whether work was done.
    pub fn refresh(&mut self, vol: &ScalarVolume, tf: &TransferFunction) -> bool {
        if self.is_current(vol, tf) {
            return false;
        }
        *self = rle_encode(vol, tf);
        true
    }

    /// Cache file name for a (volume, transfer function) pair.
    pub fn cache_name(volume_fingerprint: u64, tf_fingerprint: u64) -> String {
        format!("{volume_fingerprint:016x}-{tf_fingerprint:016x}.rrle")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let [nx, ny, nz] = self.dims;
        let [dx, dy, dz] = self.spacing;
        let mut out = Vec::new();
        writeln!(
            out,
            "{MAGIC} {nx} {ny} {nz} {dx} {dy} {dz} {} {}",
            self.volume_fingerprint, self.tf_fingerprint
        )
        .expect("writing to a Vec cannot fail");
        for e in &self.encodings {
            for n in [e.line_runs.len() - 1, e.runs.len(), e.voxels.len()] {
                out.extend_from_slice(&(n as u64).to_le_bytes());
            }
            for &x in &e.line_runs {
                out.extend_from_slice(&x.to_le_bytes());
            }
            for r in &e.runs {
                out.extend_from_slice(&r.skip.to_le_bytes());
                out.extend_from_slice(&r.len.to_le_bytes());
            }
            for &x in &e.line_voxels {
                out.extend_from_slice(&x.to_le_bytes());
            }
            for v in &e.voxels {
                out.extend_from_slice(&v.density.to_le_bytes());
                out.extend_from_slice(&v.shade.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::Mismatch(format!("malformed RLE volume: {why}"));
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8"))?;
        let t: Vec<&str> = header.split_whitespace().collect();
        if t.len() != 9 || t[0] != MAGIC {
            return Err(bad("bad header"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dimension"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad("bad spacing"));
        let fp = |s: &str| s.parse::<u64>().map_err(|_| bad("bad fingerprint"));
        let dims = [num(t[1])?, num(t[2])?, num(t[3])?];
        let spacing = [real(t[4])?, real(t[5])?, real(t[6])?];
        let (volume_fingerprint, tf_fingerprint) = (fp(t[7])?, fp(t[8])?);

        let mut r = Reader {
            bytes: &bytes[nl + 1..],
        };
        let mut encodings = Vec::with_capacity(3);
        for a in 0..3 {
            let (ua, va) = slice_axes(a);
            let nd = [dims[ua], dims[va], dims[a]];
            let lines = r.u64()? as usize;
            let nruns = r.u64()? as usize;
            let nvox = r.u64()? as usize;
            if lines != nd[1] * nd[2] {
                return Err(bad("scanline count does not match dimensions"));
            }
            let line_runs = r.u32s(lines + 1)?;
            let mut runs = Vec::with_capacity(nruns.min(r.bytes.len() / 8));
            for _ in 0..nruns {
                runs.push(Run {
                    skip: r.u32()?,
                    len: r.u32()?,
                });
            }
            let line_voxels = r.u32s(lines + 1)?;
            let mut voxels = Vec::with_capacity(nvox.min(r.bytes.len() / 6));
            for _ in 0..nvox {
                let density = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
                let shade = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
                voxels.push(RleVoxel { density, shade });
            }
            let enc = RleEncoding {
                major_axis: a,
                dims: nd,
                line_runs,
                runs,
                line_voxels,
                voxels,
            };
            validate(&enc).map_err(bad)?;
            encodings.push(enc);
        }
        if !r.bytes.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(RleVolume {
            dims,
            spacing,
            volume_fingerprint,
            tf_fingerprint,
            encodings: encodings.try_into().expect("three encodings"),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn validate(e: &RleEncoding) -> std::result::Result<(), &'static str> {
    let monotone = |xs: &[u32], end: usize| {
        xs.first() == Some(&0)
            && xs.windows(2).all(|w| w[0] <= w[1])
            && xs.last().map(|&x| x as usize) == Some(end)
    };
    if !monotone(&e.line_runs, e.runs.len()) || !monotone(&e.line_voxels, e.voxels.len()) {
        return Err("inconsistent scanline offsets");
    }
    for l in 0..e.line_runs.len() - 1 {
        let runs = &e.runs[e.line_runs[l] as usize..e.line_runs[l + 1] as usize];
        let covered: usize = runs.iter().map(|r| (r.skip + r.len) as usize).sum();
        let stored: usize = runs.iter().map(|r| r.len as usize).sum();
        if covered > e.dims[0] || stored != (e.line_voxels[l + 1] - e.line_voxels[l]) as usize {
            return Err("runs do not fit their scanline");
        }
    }
    if e.voxels.iter().any(|v| v.shade as usize >= SHADE_ENTRIES) {
        return Err("shade index out of range");
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Mismatch("malformed RLE volume: truncated".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }
}
