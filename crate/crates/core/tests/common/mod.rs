#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volren_core::transfer::ControlPoint;
use volren_core::volume::{make_phantom, PhantomKind, PhantomParams};
use volren_core::{Camera, Projection, ScalarVolume, TransferFunction, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn phantom(kind: PhantomKind, n: usize) -> ScalarVolume {
    make_phantom(kind, [n; 3], &PhantomParams::default()).unwrap()
}

pub fn normalized(kind: PhantomKind, n: usize) -> ScalarVolume {
    phantom(kind, n).normalize()
}

pub fn random_volume(n: [usize; 3], seed: u64) -> ScalarVolume {
    let mut r = rng(seed);
    ScalarVolume::from_fn(n, [1.0; 3], |_, _, _| r.random::<f64>()).unwrap()
}

/// Transparent below `lo`, rising to `peak` opacity at density 1.
pub fn window_tf(lo: f64, peak: f64) -> TransferFunction {
    TransferFunction::new(vec![
        ControlPoint::new(0.0, [0.0; 3], 0.0),
        ControlPoint::new(lo, [0.9, 0.5, 0.2], 0.0),
        ControlPoint::new(1.0, [1.0, 0.9, 0.7], peak),
    ])
    .unwrap()
}

pub fn random_tf(seed: u64) -> TransferFunction {
    let mut r = rng(seed);
    let mut d: Vec<f64> = (0..3).map(|_| r.random_range(0.05..0.95)).collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    let mut pts = vec![0.0];
    pts.extend(d);
    pts.push(1.0);
    TransferFunction::new(
        pts.into_iter()
            .map(|x| {
                ControlPoint::new(
                    x,
                    [r.random(), r.random(), r.random()],
                    r.random_range(0.0..0.6),
                )
            })
            .collect(),
    )
    .unwrap()
}

/// Orthographic view along an axis-aligned direction covering the volume.
pub fn axis_camera(vol: &ScalarVolume, forward: Vec3, px: usize) -> Camera {
    let up = if forward.y.abs() > 0.5 {
        Vec3::Z
    } else {
        Vec3::Y
    };
    let side = vol.extent().max_component();
    let eye = vol.center() - forward * (2.0 * side);
    Camera::new(
        eye,
        forward,
        up,
        Projection::Orthographic {
            width: side,
            height: side,
        },
        (px, px),
    )
    .unwrap()
}

/// Random orbit camera, orthographic unless `perspective`.
pub fn random_camera(vol: &ScalarVolume, seed: u64, px: usize, perspective: bool) -> Camera {
    let mut r = rng(seed);
    let radius = 0.5 * vol.extent().length();
    let az = r.random_range(0.0..std::f64::consts::TAU);
    let el = r.random_range(-1.2..1.2);
    let proj = if perspective {
        Projection::Perspective { fov_y: 0.6 }
    } else {
        Projection::Orthographic {
            width: 2.0 * radius,
            height: 2.0 * radius,
        }
    };
    Camera::orbit(vol.center(), radius, az, el, proj, (px, px)).unwrap()
}

/// Isotropic gaussian `amp * exp(-|p - c|^2 / (2 s^2))`.
#[derive(Clone, Copy, Debug)]
pub struct Blob {
    pub c: Vec3,
    pub s: f64,
    pub amp: f64,
}

/// Random gaussians kept well inside an `n^3` unit-spacing volume.
pub fn random_blobs(n: usize, count: usize, seed: u64) -> Vec<Blob> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let s = r.random_range(1.2..2.2);
            let (lo, hi) = (3.0 * s, n as f64 - 3.0 * s);
            Blob {
                c: Vec3::new(
                    r.random_range(lo..hi),
                    r.random_range(lo..hi),
                    r.random_range(lo..hi),
                ),
                s,
                amp: r.random_range(0.2..1.0),
            }
        })
        .collect()
}

pub fn blob_volume(n: usize, blobs: &[Blob]) -> ScalarVolume {
    ScalarVolume::from_fn([n; 3], [1.0; 3], |i, j, k| {
        let p = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5);
        blobs
            .iter()
            .map(|b| b.amp * (-(p - b.c).length_squared() / (2.0 * b.s * b.s)).exp())
            .sum()
    })
    .unwrap()
}

/// Closed-form line integrals of the gaussians along each pixel's ray.
pub fn blob_integrals(blobs: &[Blob], cam: &Camera) -> Vec<f64> {
    let mut out = Vec::new();
    for py in 0..cam.height() {
        for px in 0..cam.width() {
            let (o, d) = cam.ray(px, py);
            out.push(
                blobs
                    .iter()
                    .map(|b| {
                        let w = b.c - o;
                        let dist2 = (w - d * w.dot(d)).length_squared();
                        b.amp
                            * b.s
                            * (2.0 * std::f64::consts::PI).sqrt()
                            * (-dist2 / (2.0 * b.s * b.s)).exp()
                    })
                    .sum(),
            );
        }
    }
    out
}
