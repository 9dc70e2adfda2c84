//! `.rvol` container: a UTF-8 header line `RVOL1 nx ny nz dx dy dz`
//! followed by little-endian f32 samples, x fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ScalarVolume;
use crate::error::{Error, Result};

const MAGIC: &str = "RVOL1";

pub fn load_volume(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    parse(&bytes).map_err(|e| match e {
        Error::Format { reason, .. } => Error::format(path, reason),
        other => other,
    })
}

pub fn save_volume(vol: &ScalarVolume, path: impl AsRef<Path>) -> Result<()> {
    let [nx, ny, nz] = vol.dims();
    let [dx, dy, dz] = vol.spacing();
    let mut out = Vec::with_capacity(64 + vol.len() * 4);
    writeln!(out, "{MAGIC} {nx} {ny} {nz} {dx} {dy} {dz}")?;
    for &v in vol.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub(crate) fn parse(bytes: &[u8]) -> Result<ScalarVolume> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(bad("missing RVOL1 magic"));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let t = tokens.next().ok_or_else(|| bad("header truncated"))?;
        *d = t
            .parse()
            .map_err(|_| bad(&std::format!("bad dimension {t:?}")))?;
    }
    let mut spacing = [0f64; 3];
    for s in &mut spacing {
        let t = tokens.next().ok_or_else(|| bad("header truncated"))?;
        *s = t
            .parse()
            .map_err(|_| bad(&std::format!("bad spacing {t:?}")))?;
    }
    if tokens.next().is_some() {
        return Err(bad("trailing header fields"));
    }
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(dims));
    }
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidSpacing(spacing));
    }
    let payload = &bytes[nl + 1..];
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("dimensions overflow"))?;
    if payload.len() != expected * 4 {
        return Err(Error::LengthMismatch {
            expected,
            found: payload.len() / 4,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    ScalarVolume::new(dims, spacing, data)
}

fn bad(reason: &str) -> Error {
    Error::Format {
        path: Default::default(),
        reason: reason.to_string(),
    }
}
