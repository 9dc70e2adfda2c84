//! Phong illumination with the density gradient as surface normal.

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phong {
    pub ka: f64,
    pub kd: f64,
    pub ks: f64,
    pub exponent: f64,
    /// Direction towards the light; `None` places the light at the eye.
    pub light_dir: Option<Vec3>,
}

impl Default for Phong {
    fn default() -> Self {
        Phong {
            ka: 0.3,
            kd: 0.7,
            ks: 0.2,
            exponent: 20.0,
            light_dir: None,
        }
    }
}

impl Phong {
    /// Shades `color` at a sample with gradient `gradient`, seen along the
    /// ray direction `view_dir`. Lighting is two-sided; a zero gradient
    /// returns the color unlit.
    #[inline]
    pub fn shade(&self, color: [f64; 3], gradient: Vec3, view_dir: Vec3) -> [f64; 3] {
        let Some((k, s)) = self.factors(gradient, view_dir) else {
            return color;
        };
        color.map(|c| (c * k + s).clamp(0.0, 1.0))
    }

    /// The color scale and additive specular term, `None` for a zero
    /// gradient.
    #[inline]
    pub fn factors(&self, gradient: Vec3, view_dir: Vec3) -> Option<(f64, f64)> {
        let n = gradient.try_normalize()?;
        let l = self.light_dir.map_or(-view_dir, Vec3::normalize);
        let h = (l - view_dir).normalize();
        let diffuse = n.dot(l).abs();
        let specular = if self.ks > 0.0 {
            n.dot(h).abs().powf(self.exponent)
        } else {
            0.0
        };
        Some((self.ka + self.kd * diffuse, self.ks * specular))
    }
}
