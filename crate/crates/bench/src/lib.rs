//! Shared scenes for the criterion benches and the measurement suites
//! behind `volren bench`.
//!
//! Each suite returns a JSON object of measurements; timings are medians
//! over several runs.

use std::str::FromStr;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use volren_core::accel::{raycast_presence, raycast_proximity, DistanceMap, PresencePyramid};
use volren_core::fvr::{precompute_spectrum, project, FvrOptions};
use volren_core::mc::{extract_isosurface_with, ExtractMode, IsoConfig};
use volren_core::metrics::{max_abs_diff, ncc};
use volren_core::raycast::{self, CompositeConfig, NoSkip, RayMode};
use volren_core::shearwarp::{self, ShearWarpConfig};
use volren_core::splat::{render_splat, render_splat_hierarchical, SplatConfig};
use volren_core::volume::{make_phantom, PhantomKind, PhantomParams};
use volren_core::{Camera, ControlPoint, ScalarVolume, TransferFunction, Vec3};

pub fn phantom(kind: PhantomKind, n: usize) -> ScalarVolume {
    make_phantom(kind, [n; 3], &PhantomParams::default())
        .expect("bench sizes are at least 8")
        .normalize()
}

/// Uniform white noise in [0, 1).
pub fn noise_volume(n: usize, seed: u64) -> ScalarVolume {
    let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    ScalarVolume::from_fn([n; 3], [1.0; 3], |_, _, _| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    })
    .expect("valid dims")
}

/// Opacity rises from zero at `lo` to `a` at 1.
pub fn window_tf(lo: f64, a: f64) -> TransferFunction {
    TransferFunction::new(vec![
        ControlPoint::new(0.0, [0.0; 3], 0.0),
        ControlPoint::new(lo, [0.9, 0.5, 0.3], 0.0),
        ControlPoint::new(1.0, [1.0, 0.95, 0.8], a),
    ])
    .expect("valid control points")
}

/// Orthographic view framing the whole volume.
pub fn view(vol: &ScalarVolume, forward: Vec3, px: usize) -> Camera {
    let radius = 0.5 * vol.extent().length();
    let up = if forward.normalize().y.abs() > 0.9 {
        Vec3::Z
    } else {
        Vec3::Y
    };
    Camera::framing(vol.center(), radius, forward, up, (px, px)).expect("valid camera")
}

pub fn oblique() -> Vec3 {
    Vec3::new(0.3, 0.2, 1.0).normalize()
}

fn median_time<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, f64) {
    let mut out = f();
    let mut times: Vec<Duration> = Vec::with_capacity(runs);
    for _ in 0..runs {
        let t = Instant::now();
        out = std::hint::black_box(f());
        times.push(t.elapsed());
    }
    times.sort();
    (out, times[times.len() / 2].as_secs_f64())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Fvr,
    Ert,
    Accel,
    Mc,
    Splat,
    ShearWarp,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fvr" => Suite::Fvr,
            "ert" => Suite::Ert,
            "accel" => Suite::Accel,
            "mc" => Suite::Mc,
            "splat" => Suite::Splat,
            "shearwarp" => Suite::ShearWarp,
            "all" => Suite::All,
            other => {
                return Err(format!(
                "unknown suite `{other}` (expected fvr, ert, accel, mc, splat, shearwarp or all)"
            ))
            }
        })
    }
}

/// Runs `suite` at volume side `n` (64 unless stated) with `runs` timed
/// repetitions per measurement.
pub fn run_suite(suite: Suite, n: usize, runs: usize) -> Value {
    let runs = runs.max(1);
    match suite {
        Suite::Fvr => fvr_suite(n, runs),
        Suite::Ert => ert_suite(n, runs),
        Suite::Accel => accel_suite(n, runs),
        Suite::Mc => mc_suite(n, runs),
        Suite::Splat => splat_suite(n, runs),
        Suite::ShearWarp => shearwarp_suite(n, runs),
        Suite::All => json!({
            "fvr": fvr_suite(n, runs),
            "ert": ert_suite(n, runs),
            "accel": accel_suite(n, runs),
            "mc": mc_suite(n, runs),
            "splat": splat_suite(n, runs),
            "shearwarp": shearwarp_suite(n, runs),
        }),
    }
}

/// Per-view cost at transform sides N and 2N (volume sides n/2 and n),
/// on one thread, against the N^2 log N model.
fn fvr_suite(n: usize, runs: usize) -> Value {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool");
    let opts = FvrOptions::default();
    let measure = |side: usize| {
        let vol = noise_volume(side, side as u64);
        let (spec, t_pre) =
            median_time(1, || precompute_spectrum(&vol).expect("size within limit"));
        let cam = view(&vol, oblique(), side);
        let (_, t_view) = pool.install(|| median_time(runs, || project(&spec, &cam, &opts)));
        (spec.n(), t_pre, t_view)
    };
    let (n_small, pre_small, t_small) = measure((n / 2).max(8));
    let (n_large, pre_large, t_large) = measure(n.max(16));
    let model = |m: usize| (m * m) as f64 * (m as f64).log2();
    let expected = model(n_large) / model(n_small);
    let ratio = t_large / t_small;
    json!({
        "n_small": n_small,
        "n_large": n_large,
        "precompute_ms": [pre_small * 1e3, pre_large * 1e3],
        "per_view_ms": [t_small * 1e3, t_large * 1e3],
        "ratio": ratio,
        "expected_ratio": expected,
        "within_30_percent": (ratio / expected - 1.0).abs() <= 0.3,
    })
}

/// Early ray termination on the opaque-core phantom.
fn ert_suite(n: usize, runs: usize) -> Value {
    let vol = phantom(PhantomKind::OpaqueCore, n);
    let tf = TransferFunction::new(vec![
        ControlPoint::new(0.0, [0.0; 3], 0.0),
        ControlPoint::new(1.0, [0.9, 0.6, 0.3], 0.5),
    ])
    .expect("valid control points");
    let cam = view(&vol, oblique(), n);
    let full = CompositeConfig {
        shading: None,
        ..Default::default()
    };
    let ert = CompositeConfig {
        ert_threshold: 0.98,
        ..full
    };
    let ((a, sa), t_full) = median_time(runs, || raycast::render(&vol, &tf, &cam, &full).unwrap());
    let ((b, sb), t_ert) = median_time(runs, || raycast::render(&vol, &tf, &cam, &ert).unwrap());
    json!({
        "threshold": 0.98,
        "full_ms": t_full * 1e3,
        "ert_ms": t_ert * 1e3,
        "speedup": t_full / t_ert,
        "sample_reduction": sa.samples_taken as f64 / sb.samples_taken.max(1) as f64,
        "rays_terminated": sb.rays_terminated,
        "max_pixel_delta": a.max_abs_diff(&b),
    })
}

/// Presence and proximity skipping against brute force.
fn accel_suite(n: usize, runs: usize) -> Value {
    let vol = phantom(PhantomKind::Sphere, n);
    let tf = window_tf(0.6, 0.8);
    let cam = view(&vol, oblique(), n);
    let cfg = CompositeConfig::default();
    let grads = vol.gradient_central();
    let (pyr, t_pyr) = median_time(1, || {
        PresencePyramid::build(&vol, &tf, RayMode::Composite).unwrap()
    });
    let (dmap, t_dmap) = median_time(1, || {
        DistanceMap::build(&vol, &tf, RayMode::Composite).unwrap()
    });
    let ((brute, _), t_brute) = median_time(runs, || {
        raycast::render_with(&vol, Some(&grads), &tf, &cam, &cfg, &NoSkip).unwrap()
    });
    let ((pres, sp), t_pres) = median_time(runs, || {
        raycast_presence(&vol, Some(&grads), &tf, &cam, &cfg, &pyr).unwrap()
    });
    let ((prox, sx), t_prox) = median_time(runs, || {
        raycast_proximity(&vol, Some(&grads), &tf, &cam, &cfg, &dmap).unwrap()
    });
    json!({
        "build_ms": {"presence": t_pyr * 1e3, "proximity": t_dmap * 1e3},
        "render_ms": {"brute": t_brute * 1e3, "presence": t_pres * 1e3, "proximity": t_prox * 1e3},
        "skip_ratio": {"presence": sp.skip_ratio(), "proximity": sx.skip_ratio()},
        "identical": {
            "presence": brute.pixels() == pres.pixels(),
            "proximity": brute.pixels() == prox.pixels(),
        },
    })
}

fn mc_suite(n: usize, runs: usize) -> Value {
    let vol = make_phantom(PhantomKind::Sphere, [n; 3], &PhantomParams::default())
        .expect("bench sizes are at least 8");
    let cfg = IsoConfig::new(0.0);
    let ((mesh, _), t_serial) = median_time(runs, || {
        extract_isosurface_with(&vol, &cfg, ExtractMode::Serial)
    });
    let ((par, _), t_par) = median_time(runs, || {
        extract_isosurface_with(&vol, &cfg, ExtractMode::Parallel)
    });
    json!({
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "serial_ms": t_serial * 1e3,
        "parallel_ms": t_par * 1e3,
        "parallel_identical": mesh == par,
    })
}

fn splat_suite(n: usize, runs: usize) -> Value {
    let vol = phantom(PhantomKind::GaussianBlob, n);
    let tf = window_tf(0.3, 0.5);
    let cam = view(&vol, oblique(), n);
    let cfg = SplatConfig::default();
    let grads = vol.gradient_central();
    let ((full, sf), t_full) = median_time(runs, || {
        render_splat(&vol, Some(&grads), &tf, &cam, &cfg).unwrap()
    });
    let ((coarse, sc), t_coarse) = median_time(runs, || {
        render_splat_hierarchical(&vol, &tf, &cam, &cfg, 1).unwrap()
    });
    let (ray, _) = raycast::render(&vol, &tf, &cam, &CompositeConfig::default()).unwrap();
    json!({
        "full_ms": t_full * 1e3,
        "level1_ms": t_coarse * 1e3,
        "splats": {"full": sf.voxels_composited, "level1": sc.voxels_composited},
        "ncc_vs_raycast": ncc(&full.luminance(), &ray.luminance()),
        "ncc_level1_vs_full": ncc(&coarse.luminance(), &full.luminance()),
    })
}

fn shearwarp_suite(n: usize, runs: usize) -> Value {
    let vol = phantom(PhantomKind::Sphere, n);
    let tf = window_tf(0.5, 0.4);
    let cam = view(&vol, oblique(), n);
    let ((sw, ss), t_sw) = median_time(runs, || {
        shearwarp::render(&vol, &tf, &cam, &ShearWarpConfig::default()).unwrap()
    });
    let ((rc, _), t_rc) = median_time(runs, || {
        raycast::render(&vol, &tf, &cam, &CompositeConfig::default()).unwrap()
    });
    json!({
        "shearwarp_ms": t_sw * 1e3,
        "raycast_ms": t_rc * 1e3,
        "speedup": t_rc / t_sw,
        "voxels_composited": ss.voxels_composited,
        "voxels_nontransparent": ss.voxels_nontransparent,
        "ncc_vs_raycast": ncc(&sw.luminance(), &rc.luminance()),
        "max_pixel_delta": max_abs_diff(&sw.luminance(), &rc.luminance()),
    })
}
