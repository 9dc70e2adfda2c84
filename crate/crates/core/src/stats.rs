//! Per-frame work counters.

use std::fmt;
use std::ops::{Add, AddAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RenderStats {
    /// Samples a brute-force traversal would evaluate.
    pub samples_total: u64,
    /// Samples actually evaluated.
    pub samples_taken: u64,
    /// Samples stepped over by an acceleration structure.
    pub samples_skipped: u64,
    /// Rays stopped by early termination.
    pub rays_terminated: u64,
    /// Footprints splatted (splatting) or voxels composited (shear-warp).
    pub voxels_composited: u64,
    /// Non-transparent voxels available to the renderer.
    pub voxels_nontransparent: u64,
}

impl RenderStats {
    pub fn skip_ratio(&self) -> f64 {
        if self.samples_total == 0 {
            0.0
        } else {
            self.samples_skipped as f64 / self.samples_total as f64
        }
    }
}

impl Add for RenderStats {
    type Output = RenderStats;

    fn add(self, o: RenderStats) -> RenderStats {
        RenderStats {
            samples_total: self.samples_total + o.samples_total,
            samples_taken: self.samples_taken + o.samples_taken,
            samples_skipped: self.samples_skipped + o.samples_skipped,
            rays_terminated: self.rays_terminated + o.rays_terminated,
            voxels_composited: self.voxels_composited + o.voxels_composited,
            voxels_nontransparent: self.voxels_nontransparent + o.voxels_nontransparent,
        }
    }
}

impl AddAssign for RenderStats {
    fn add_assign(&mut self, o: RenderStats) {
        *self = *self + o;
    }
}

impl std::iter::Sum for RenderStats {
    fn sum<I: Iterator<Item = RenderStats>>(iter: I) -> RenderStats {
        iter.fold(RenderStats::default(), Add::add)
    }
}

/// `samples_total samples_skipped rays_terminated`
impl fmt::Display for RenderStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.samples_total, self.samples_skipped, self.rays_terminated
        )
    }
}
