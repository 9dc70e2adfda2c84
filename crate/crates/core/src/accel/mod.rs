//! Empty-space skipping and approximate fast paths for the ray caster.
//!
//! Base cells sit between voxel centers: cell `(i, j, k)` spans index
//! coordinates `[i, i+1] x [j, j+1] x [k, k+1]` and holds the eight voxels
//! a trilinear sample inside it reads. Skipping only ever passes over
//! lattice samples whose cell cannot contribute, so the presence and
//! proximity renders equal brute force bit for bit.

mod boundary;
mod distance;

pub use boundary::{extract_boundary_voxels, render_points, BoundaryVoxel, CuttingPlane};
pub use distance::{DistanceMap, ProximitySkipper, CHAMFER_SCALE, CHAMFER_WEIGHTS};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::framebuffer::FrameBuffer;
use crate::math::Vec3;
use crate::raycast::{
    self, assemble, render_rows, Accum, CompositeConfig, Lattice, Ray, RayMode, RayResult, Shader,
    Skipper,
};
use crate::stats::RenderStats;
use crate::transfer::TransferFunction;
use crate::volume::{locate, GradientVolume, ScalarVolume};

/// Dense 3D array, x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(dims: [usize; 3], v: T) -> Self {
        Grid {
            dims,
            data: vec![v; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn get(&self, c: [usize; 3]) -> T {
        self.data[self.index(c)]
    }

    #[inline]
    pub fn set(&mut self, c: [usize; 3], v: T) {
        let i = self.index(c);
        self.data[i] = v;
    }

    /// Parent grid where each cell reduces its up to eight children.
    fn reduce(&self, f: impl Fn(T, T) -> T) -> Grid<T> {
        let dims = self.dims.map(|n| n.div_ceil(2));
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let mut acc: Option<T> = None;
                    for c in children([i, j, k], self.dims) {
                        let v = self.get(c);
                        acc = Some(acc.map_or(v, |a| f(a, v)));
                    }
                    data.push(acc.expect("every parent has a child"));
                }
            }
        }
        Grid { dims, data }
    }
}

fn children(p: [usize; 3], child_dims: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    (0..8).filter_map(move |bits: usize| {
        let c = [
            2 * p[0] + (bits & 1),
            2 * p[1] + ((bits >> 1) & 1),
            2 * p[2] + ((bits >> 2) & 1),
        ];
        (c[0] < child_dims[0] && c[1] < child_dims[1] && c[2] < child_dims[2]).then_some(c)
    })
}

/// Number of base cells per axis.
pub fn cell_dims(vol: &ScalarVolume) -> [usize; 3] {
    vol.dims().map(|n| n - 1)
}

/// Min and max of the eight corner voxels of every base cell.
pub fn cell_ranges(vol: &ScalarVolume) -> Grid<(f64, f64)> {
    let cd = cell_dims(vol);
    let mut g = Grid::filled(cd, (0.0, 0.0));
    for k in 0..cd[2] {
        for j in 0..cd[1] {
            for i in 0..cd[0] {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for bits in 0..8 {
                    let v = vol.get(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                g.set([i, j, k], (lo, hi));
            }
        }
    }
    g
}

/// Interval that certainly contains every trilinear sample of a cell whose
/// corners span `[lo, hi]`. Interpolating between unequal values can round
/// past an endpoint by an ulp; equal corners interpolate exactly.
#[inline]
fn sample_interval(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        (lo, hi)
    } else {
        let slack = 1e-9 * (lo.abs().max(hi.abs()) + 1.0);
        (lo - slack, hi + slack)
    }
}

/// Whether a cell may produce a composited sample.
pub fn cell_visible(tf: &TransferFunction, lo: f64, hi: f64) -> bool {
    let (lo, hi) = sample_interval(lo, hi);
    tf.max_opacity_in(lo, hi) > 0.0
}

/// Whether a cell may raise a maximum projection above zero.
pub fn cell_positive(lo: f64, hi: f64) -> bool {
    sample_interval(lo, hi).1 > 0.0
}

/// Base-cell occupancy for a render mode.
pub fn occupancy(vol: &ScalarVolume, tf: &TransferFunction, mode: RayMode) -> Result<Grid<bool>> {
    let ranges = cell_ranges(vol);
    let test: Box<dyn Fn(f64, f64) -> bool> = match mode {
        RayMode::Composite => Box::new(|lo, hi| cell_visible(tf, lo, hi)),
        RayMode::Mip => Box::new(cell_positive),
        other => {
            return Err(Error::InvalidParameter(format!(
                "empty-space skipping supports composite and mip, not {other}"
            )))
        }
    };
    Ok(Grid {
        dims: ranges.dims,
        data: ranges.data.iter().map(|&(lo, hi)| test(lo, hi)).collect(),
    })
}

/// Binary pyramid over base-cell occupancy; `levels[0]` is the base.
#[derive(Clone, Debug, PartialEq)]
pub struct PresencePyramid {
    vol_dims: [usize; 3],
    levels: Vec<Grid<bool>>,
}

impl PresencePyramid {
    pub fn build(vol: &ScalarVolume, tf: &TransferFunction, mode: RayMode) -> Result<Self> {
        Ok(Self::from_base(vol.dims(), occupancy(vol, tf, mode)?))
    }

    pub fn from_base(vol_dims: [usize; 3], base: Grid<bool>) -> Self {
        let depth = pyramid_depth(base.dims);
        let mut levels = vec![base];
        for _ in 0..depth {
            let next = levels.last().expect("non-empty").reduce(|a, b| a | b);
            levels.push(next);
        }
        PresencePyramid { vol_dims, levels }
    }

    pub fn levels(&self) -> &[Grid<bool>] {
        &self.levels
    }

    /// Index of the top level (a single cell).
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// `ceil(log2(max cell dim))`.
pub fn pyramid_depth(dims: [usize; 3]) -> usize {
    let m = dims.into_iter().max().unwrap_or(1).max(1);
    m.next_power_of_two().trailing_zeros() as usize
}

/// Base cell a sample at index coordinates `c` reads from.
#[inline]
pub fn located_cell(vol_dims: [usize; 3], c: Vec3) -> [usize; 3] {
    [
        locate(c.x, vol_dims[0]).0,
        locate(c.y, vol_dims[1]).0,
        locate(c.z, vol_dims[2]).0,
    ]
}

/// Margin, in index units, kept inside a skipped box.
const BOX_MARGIN: f64 = 1e-6;

/// Ray parameter where the lattice ray leaves the index-space region
/// covered by cell `cell` of level `m`, shrunk by a small margin. Faces on
/// the grid boundary extend to infinity because sampling clamps there.
fn box_exit(lat: &Lattice, cell: [usize; 3], m: usize, base_dims: [usize; 3]) -> f64 {
    let o = lat.origin_index.to_array();
    let d = lat.dir_index.to_array();
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        let lo_cell = cell[a] << m;
        let hi_cell = (cell[a] + 1) << m;
        let bound = if d[a] > 0.0 {
            if hi_cell >= base_dims[a] {
                continue;
            }
            hi_cell as f64 - BOX_MARGIN
        } else if d[a] < 0.0 {
            if lo_cell == 0 {
                continue;
            }
            lo_cell as f64 + BOX_MARGIN
        } else {
            continue;
        };
        t_exit = t_exit.min((bound - o[a]) / d[a]);
    }
    t_exit
}

/// First lattice index whose parameter is at or beyond `t`.
#[inline]
fn first_sample_from(lat: &Lattice, t: f64) -> usize {
    let k = ((t - lat.t0) / lat.step - 0.5).ceil();
    if k <= 0.0 {
        0
    } else if k >= lat.n as f64 {
        lat.n
    } else {
        k as usize
    }
}

impl Skipper for PresencePyramid {
    fn next(&self, lat: &Lattice, mut k: usize) -> usize {
        let base = &self.levels[0];
        while k < lat.n {
            let cell = located_cell(self.vol_dims, lat.index_pos(k));
            if base.get(cell) {
                return k;
            }
            let mut m = 0;
            while m < self.depth() && !self.levels[m + 1].get(cell.map(|c| c >> (m + 1))) {
                m += 1;
            }
            let t_exit = box_exit(lat, cell.map(|c| c >> m), m, base.dims);
            k = first_sample_from(lat, t_exit).max(k + 1);
        }
        lat.n
    }
}

/// Min/max pyramid over base-cell corner ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct RangePyramid {
    vol_dims: [usize; 3],
    levels: Vec<Grid<(f64, f64)>>,
}

impl RangePyramid {
    pub fn build(vol: &ScalarVolume) -> Self {
        let base = cell_ranges(vol);
        let depth = pyramid_depth(base.dims);
        let mut levels = vec![base];
        for _ in 0..depth {
            let next = levels
                .last()
                .expect("non-empty")
                .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
            levels.push(next);
        }
        RangePyramid {
            vol_dims: vol.dims(),
            levels,
        }
    }

    pub fn levels(&self) -> &[Grid<(f64, f64)>] {
        &self.levels
    }

    /// Highest level whose ancestor of `cell` has range at most `eps`, with
    /// that range.
    fn homogeneous_level(&self, cell: [usize; 3], eps: f64) -> Option<(usize, (f64, f64))> {
        let r0 = self.levels[0].get(cell);
        if r0.1 - r0.0 > eps {
            return None;
        }
        let mut best = (0, r0);
        for m in 1..self.levels.len() {
            let r = self.levels[m].get(cell.map(|c| c >> m));
            if r.1 - r.0 > eps {
                break;
            }
            best = (m, r);
        }
        Some(best)
    }
}

/// Default homogeneity tolerance on normalized densities.
pub const DEFAULT_HOMOGENEITY_EPS: f64 = 0.02;

fn traverse_homogeneous(shader: &Shader, rp: &RangePyramid, eps: f64, ray: &Ray) -> RayResult {
    let mut out = RayResult {
        depth: f64::INFINITY,
        ..Default::default()
    };
    let Some(lat) = Lattice::new(shader.vol, ray, shader.cfg.step) else {
        return out;
    };
    out.stats.samples_total = lat.n as u64;
    let ert = shader.cfg.ert_threshold;
    let base_dims = rp.levels[0].dims;
    let mut acc = Accum::default();
    let mut k = 0;
    let mut stopped_at = None;
    let composite = |acc: &mut Accum, out: &mut RayResult, k: usize, c: [f64; 3], a: f64| {
        if acc.alpha == 0.0 {
            out.depth = lat.t(k);
        }
        acc.over(c, a);
        acc.alpha >= ert
    };
    'ray: while k < lat.n {
        let at = lat.index_pos(k);
        let cell = located_cell(rp.vol_dims, at);
        let Some((m, (lo, hi))) = rp.homogeneous_level(cell, eps) else {
            out.stats.samples_taken += 1;
            if let Some((c, a)) = shader.sample(&lat, k, ray.dir) {
                if composite(&mut acc, &mut out, k, c, a) {
                    stopped_at = Some(k);
                    break;
                }
            }
            k += 1;
            continue;
        };
        let end =
            first_sample_from(&lat, box_exit(&lat, cell.map(|c| c >> m), m, base_dims)).max(k + 1);
        let mid = 0.5 * (lo + hi);
        let rgba = shader.tf.eval(mid);
        let alpha = shader.correct_opacity(rgba.a);
        if alpha == 0.0 {
            out.stats.samples_skipped += (end - k) as u64;
            k = end;
            continue;
        }
        while k < end {
            out.stats.samples_skipped += 1;
            let color = match (shader.cfg.shading, shader.grads) {
                (Some(p), Some(g)) => {
                    p.shade(rgba.rgb(), g.sample_index(lat.index_pos(k)), ray.dir)
                }
                _ => rgba.rgb(),
            };
            if composite(&mut acc, &mut out, k, color, alpha) {
                stopped_at = Some(k);
                break 'ray;
            }
            k += 1;
        }
    }
    if stopped_at.is_some_and(|s| s + 1 < lat.n) {
        out.stats.rays_terminated += 1;
    }
    out.color = acc.color;
    out.alpha = acc.alpha;
    out
}

fn require_skippable(cfg: &CompositeConfig) -> Result<()> {
    match cfg.mode {
        RayMode::Composite | RayMode::Mip => Ok(()),
        other => Err(Error::InvalidParameter(format!(
            "empty-space skipping supports composite and mip, not {other}"
        ))),
    }
}

fn check_dims(expected: [usize; 3], found: [usize; 3]) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Mismatch(format!(
            "acceleration structure built for {expected:?}, volume is {found:?}"
        )))
    }
}

/// Composite or MIP render skipping empty pyramid cells.
pub fn raycast_presence(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &CompositeConfig,
    pyr: &PresencePyramid,
) -> Result<(FrameBuffer, RenderStats)> {
    require_skippable(cfg)?;
    check_dims(pyr.vol_dims, vol.dims())?;
    raycast::render_with(vol, grads, tf, cam, cfg, pyr)
}

/// Composite or MIP render leaping through empty space by distance.
pub fn raycast_proximity(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &CompositeConfig,
    dmap: &DistanceMap,
) -> Result<(FrameBuffer, RenderStats)> {
    require_skippable(cfg)?;
    check_dims(dmap.vol_dims(), vol.dims())?;
    raycast::render_with(vol, grads, tf, cam, cfg, &ProximitySkipper::new(dmap))
}

/// Composite render classifying near-constant cells once.
pub fn raycast_homogeneous(
    vol: &ScalarVolume,
    grads: Option<&GradientVolume>,
    tf: &TransferFunction,
    cam: &Camera,
    cfg: &CompositeConfig,
    rp: &RangePyramid,
    eps: f64,
) -> Result<(FrameBuffer, RenderStats)> {
    cfg.validate()?;
    if cfg.mode != RayMode::Composite {
        return Err(Error::InvalidParameter(format!(
            "homogeneity acceleration supports composite only, not {}",
            cfg.mode
        )));
    }
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "homogeneity tolerance {eps} must be >= 0"
        )));
    }
    check_dims(rp.vol_dims, vol.dims())?;
    let shader = Shader::new(vol, grads, tf, cfg);
    let (results, stats) = render_rows(cam, &vol.bounds(), |ray| {
        traverse_homogeneous(&shader, rp, eps, ray)
    });
    Ok((assemble(cam, cfg.mode, &results), stats))
}
