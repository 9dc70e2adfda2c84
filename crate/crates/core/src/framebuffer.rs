//! Rendered images and their 8-bit encodings.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::transfer::Rgba;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<Rgba>,
    depth: Option<Vec<f64>>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        FrameBuffer {
            width,
            height,
            pixels: vec![Rgba::TRANSPARENT; width * height],
            depth: None,
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgba>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count mismatch");
        FrameBuffer {
            width,
            height,
            pixels,
            depth: None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgba] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgba] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgba {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Rgba) {
        self.pixels[y * self.width + x] = c;
    }

    pub fn depth(&self) -> Option<&[f64]> {
        self.depth.as_deref()
    }

    pub fn set_depth(&mut self, depth: Vec<f64>) {
        assert_eq!(depth.len(), self.pixels.len(), "depth size mismatch");
        self.depth = Some(depth);
    }

    /// Channel `c` (0..4 for r, g, b, a) as a flat row-major array.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| match c {
                0 => p.r,
                1 => p.g,
                2 => p.b,
                _ => p.a,
            })
            .collect()
    }

    /// Mean of the color channels per pixel.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| (p.r + p.g + p.b) / 3.0)
            .collect()
    }

    /// Largest per-channel absolute difference (color and alpha).
    pub fn max_abs_diff(&self, other: &FrameBuffer) -> f64 {
        assert_eq!(self.dims(), other.dims(), "image dims differ");
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| {
                (a.r - b.r)
                    .abs()
                    .max((a.g - b.g).abs())
                    .max((a.b - b.b).abs())
                    .max((a.a - b.a).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Clamps every channel into `[0, 1]`.
    pub fn clamp(&mut self) {
        for p in &mut self.pixels {
            p.r = p.r.clamp(0.0, 1.0);
            p.g = p.g.clamp(0.0, 1.0);
            p.b = p.b.clamp(0.0, 1.0);
            p.a = p.a.clamp(0.0, 1.0);
        }
    }

    /// Row-major 8-bit RGB with rounding.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(&[quantize(p.r), quantize(p.g), quantize(p.b)]);
        }
        out
    }

    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 4);
        for p in &self.pixels {
            out.extend_from_slice(&[quantize(p.r), quantize(p.g), quantize(p.b), quantize(p.a)]);
        }
        out
    }

    /// Binary PPM (P6, maxval 255).
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_rgb8());
        out
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(png_err)?;
            writer.write_image_data(&self.to_rgb8()).map_err(png_err)?;
        }
        Ok(out)
    }

    /// Writes PPM or PNG depending on the file extension (PPM otherwise).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => self.encode_png()?,
            _ => self.encode_ppm(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

#[inline]
pub fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn png_err(e: png::EncodingError) -> crate::Error {
    match e {
        png::EncodingError::IoError(io) => crate::Error::Io(io),
        other => crate::Error::Io(std::io::Error::other(other.to_string())),
    }
}

/// Decodes an 8-bit RGB or RGBA PNG into `(width, height, rgb bytes)`.
pub fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let err = |e: png::DecodingError| crate::Error::Io(std::io::Error::other(e.to_string()));
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(err)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(err)?;
    buf.truncate(info.buffer_size());
    let rgb = match info.color_type {
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|c| [c[0], c[1], c[2]])
            .collect(),
        _ => buf,
    };
    Ok((info.width as usize, info.height as usize, rgb))
}
