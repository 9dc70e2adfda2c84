use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use volren_bench::{noise_volume, oblique, phantom, view, window_tf};
use volren_core::accel::{raycast_presence, raycast_proximity, DistanceMap, PresencePyramid};
use volren_core::fvr::{precompute_spectrum, project, FvrOptions, SliceFilter};
use volren_core::mc::{extract_isosurface_with, ExtractMode, IsoConfig};
use volren_core::raycast::{self, CompositeConfig, NoSkip, RayMode};
use volren_core::shearwarp::{factorize, render_shearwarp, rle_encode, ShearWarpConfig};
use volren_core::splat::{render_splat, SplatConfig};
use volren_core::volume::{make_phantom, PhantomKind, PhantomParams};

const N: usize = 64;

fn marching_cubes(c: &mut Criterion) {
    let vol = make_phantom(PhantomKind::Sphere, [N; 3], &PhantomParams::default()).unwrap();
    let cfg = IsoConfig::new(0.0);
    let mut g = c.benchmark_group("marching_cubes");
    for (name, mode) in [
        ("serial", ExtractMode::Serial),
        ("parallel", ExtractMode::Parallel),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| extract_isosurface_with(&vol, &cfg, mode))
        });
    }
    g.finish();
}

fn fvr(c: &mut Criterion) {
    let mut g = c.benchmark_group("fvr");
    g.sample_size(20);
    for side in [32, 64] {
        let vol = noise_volume(side, 7);
        g.bench_with_input(BenchmarkId::new("spectrum", side), &vol, |b, vol| {
            b.iter(|| precompute_spectrum(vol).unwrap())
        });
        let spec = precompute_spectrum(&vol).unwrap();
        let cam = view(&vol, oblique(), side);
        for filter in [
            SliceFilter::Nearest,
            SliceFilter::Linear,
            SliceFilter::Sinc(4),
        ] {
            let opts = FvrOptions {
                filter,
                lowpass: None,
            };
            g.bench_function(BenchmarkId::new(format!("view_{filter}"), side), |b| {
                b.iter(|| project(&spec, &cam, &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn raycasting(c: &mut Criterion) {
    let vol = phantom(PhantomKind::Sphere, N);
    let tf = window_tf(0.6, 0.8);
    let cam = view(&vol, oblique(), N);
    let grads = vol.gradient_central();
    let cfg = CompositeConfig::default();
    let pyr = PresencePyramid::build(&vol, &tf, RayMode::Composite).unwrap();
    let dmap = DistanceMap::build(&vol, &tf, RayMode::Composite).unwrap();
    let mut g = c.benchmark_group("raycast");
    g.bench_function("composite", |b| {
        b.iter(|| raycast::render_with(&vol, Some(&grads), &tf, &cam, &cfg, &NoSkip).unwrap())
    });
    g.bench_function("presence", |b| {
        b.iter(|| raycast_presence(&vol, Some(&grads), &tf, &cam, &cfg, &pyr).unwrap())
    });
    g.bench_function("proximity", |b| {
        b.iter(|| raycast_proximity(&vol, Some(&grads), &tf, &cam, &cfg, &dmap).unwrap())
    });
    for mode in [
        RayMode::Mip,
        RayMode::XRay,
        RayMode::Lmip { threshold: 0.5 },
    ] {
        let cfg = CompositeConfig::with_mode(mode);
        g.bench_function(mode.name(), |b| {
            b.iter(|| raycast::render(&vol, &tf, &cam, &cfg).unwrap())
        });
    }
    let core = phantom(PhantomKind::OpaqueCore, N);
    for ert in [1.0, 0.98] {
        let cfg = CompositeConfig {
            ert_threshold: ert,
            shading: None,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new("opaque_core_ert", ert), |b| {
            b.iter(|| raycast::render(&core, &tf, &cam, &cfg).unwrap())
        });
    }
    g.finish();
}

fn object_order(c: &mut Criterion) {
    let vol = phantom(PhantomKind::GaussianBlob, N);
    let tf = window_tf(0.3, 0.5);
    let cam = view(&vol, oblique(), N);
    let grads = vol.gradient_central();
    let mut g = c.benchmark_group("object_order");
    g.sample_size(20);
    g.bench_function("splat", |b| {
        b.iter(|| render_splat(&vol, Some(&grads), &tf, &cam, &SplatConfig::default()).unwrap())
    });
    g.bench_function("rle_encode", |b| b.iter(|| rle_encode(&vol, &tf)));
    let rle = rle_encode(&vol, &tf);
    let fac = factorize(&cam, vol.dims(), vol.spacing()).unwrap();
    g.bench_function("shearwarp", |b| {
        b.iter(|| render_shearwarp(&rle, &fac, &tf, &cam, &ShearWarpConfig::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, marching_cubes, fvr, raycasting, object_order);
criterion_main!(benches);
