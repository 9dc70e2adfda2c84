//! Piecewise-linear transfer functions mapping normalized density to
//! color and opacity.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Fingerprint;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rgba {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Rgba {
    pub const TRANSPARENT: Rgba = Rgba::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Rgba { r, g, b, a }
    }

    pub fn rgb(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPoint {
    pub density: f64,
    pub color: [f64; 3],
    pub opacity: f64,
}

impl ControlPoint {
    pub fn new(density: f64, color: [f64; 3], opacity: f64) -> Self {
        ControlPoint {
            density,
            color,
            opacity,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    points: Vec<ControlPoint>,
}

impl TransferFunction {
    pub fn new(points: Vec<ControlPoint>) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidTransferFunction(m));
        if points.len() < 2 {
            return invalid(format!(
                "need at least 2 control points, got {}",
                points.len()
            ));
        }
        for p in &points {
            let in_unit = |v: f64| (0.0..=1.0).contains(&v);
            if !in_unit(p.density) || !in_unit(p.opacity) || !p.color.iter().all(|&c| in_unit(c)) {
                return invalid(format!(
                    "control point {p:?} has a component outside [0, 1]"
                ));
            }
        }
        if points[0].density != 0.0 || points[points.len() - 1].density != 1.0 {
            return invalid("control points must start at density 0 and end at 1".into());
        }
        if points.windows(2).any(|w| w[0].density >= w[1].density) {
            return invalid("control point densities must be strictly ascending".into());
        }
        Ok(TransferFunction { points })
    }

    /// Linear ramp: color and opacity both rise from 0 at density 0 to 1 at
    /// density 1.
    pub fn ramp() -> Self {
        TransferFunction::new(vec![
            ControlPoint::new(0.0, [0.0; 3], 0.0),
            ControlPoint::new(1.0, [1.0; 3], 1.0),
        ])
        .expect("ramp is valid")
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    /// Segment index `s` such that `d` lies in `[points[s], points[s+1]]`.
    #[inline]
    fn segment(&self, d: f64) -> usize {
        let idx = self.points.partition_point(|p| p.density <= d);
        idx.clamp(1, self.points.len() - 1) - 1
    }

    /// Color and opacity at density `d`; densities outside `[0, 1]` clamp.
    pub fn eval(&self, d: f64) -> Rgba {
        let d = clamp_unit(d);
        let s = self.segment(d);
        let (p0, p1) = (&self.points[s], &self.points[s + 1]);
        let t = (d - p0.density) / (p1.density - p0.density);
        Rgba::new(
            lerp(p0.color[0], p1.color[0], t),
            lerp(p0.color[1], p1.color[1], t),
            lerp(p0.color[2], p1.color[2], t),
            lerp(p0.opacity, p1.opacity, t),
        )
    }

    #[inline]
    pub fn opacity(&self, d: f64) -> f64 {
        let d = clamp_unit(d);
        let s = self.segment(d);
        let (p0, p1) = (&self.points[s], &self.points[s + 1]);
        let t = (d - p0.density) / (p1.density - p0.density);
        lerp(p0.opacity, p1.opacity, t)
    }

    /// Largest opacity over the density interval `[lo, hi]`.
    pub fn max_opacity_in(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (clamp_unit(lo.min(hi)), clamp_unit(lo.max(hi)));
        let mut best = self.opacity(lo).max(self.opacity(hi));
        for p in &self.points {
            if p.density > lo && p.density < hi {
                best = best.max(p.opacity);
            }
        }
        best
    }

    /// Steepest opacity slope over any segment.
    pub fn opacity_lipschitz(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].opacity - w[0].opacity) / (w[1].density - w[0].density)).abs())
            .fold(0.0, f64::max)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::new();
        for p in &self.points {
            h.write_f64(p.density);
            for c in p.color {
                h.write_f64(c);
            }
            h.write_f64(p.opacity);
        }
        h.finish()
    }

    /// Parses `density r g b a` lines. Blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidTransferFunction(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 5 {
                return Err(Error::InvalidTransferFunction(format!(
                    "line {}: expected 5 fields, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            points.push(ControlPoint::new(
                vals[0],
                [vals[1], vals[2], vals[3]],
                vals[4],
            ));
        }
        TransferFunction::new(points)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                p.density, p.color[0], p.color[1], p.color[2], p.opacity
            );
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact at both ends and on constant segments
    if t == 1.0 {
        b
    } else {
        a + (b - a) * t
    }
}

#[inline]
fn clamp_unit(d: f64) -> f64 {
    d.clamp(0.0, 1.0)
}
