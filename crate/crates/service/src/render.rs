//! Request validation and dispatch to the core renderers.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::Value;
use volren_core::accel::{
    extract_boundary_voxels, raycast_homogeneous, raycast_presence, raycast_proximity,
    render_points, BoundaryVoxel, CuttingPlane, DistanceMap, PresencePyramid, RangePyramid,
};
use volren_core::fvr::{precompute_spectrum, render_fvr, FvrOptions, SliceFilter, SpectrumVolume};
use volren_core::math::Fingerprint;
use volren_core::raycast::{self, CompositeConfig, NoSkip, RayMode};
use volren_core::shading::Phong;
use volren_core::shearwarp::{factorize, render_shearwarp, rle_encode, RleVolume, ShearWarpConfig};
use volren_core::splat::{
    render_splat, render_splat_hierarchical, Kernel, SplatConfig, SplatMode, SplatQuality,
    TableSampling,
};
use volren_core::{
    Camera, FrameBuffer, GradientVolume, RenderStats, ScalarVolume, TransferFunction, Vec3,
};

use crate::cache::{CacheKey, DerivedCache};
use crate::error::ServiceError;
use crate::registry::{Registry, Source};
use crate::schema::{transfer_function, Algorithm, RenderRequest, RenderResponse, WireStats};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub volume_dir: Option<std::path::PathBuf>,
    /// Rayon workers shared by all requests; 0 uses one per core.
    pub workers: usize,
    pub cache_bytes: usize,
    pub max_image_side: usize,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            volume_dir: None,
            workers: 0,
            cache_bytes: 512 << 20,
            max_image_side: 1024,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Shared rendering state. Holds no per-client data; the cache only
/// stores values that are pure functions of their keys.
pub struct RenderService {
    config: ServiceConfig,
    registry: Registry,
    cache: DerivedCache,
    pool: rayon::ThreadPool,
}

impl RenderService {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .thread_name(|i| format!("volren-render-{i}"))
            .build()
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(RenderService {
            registry: Registry::new(config.volume_dir.clone()),
            cache: DerivedCache::new(config.cache_bytes),
            pool,
            config,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn cache(&self) -> &DerivedCache {
        &self.cache
    }

    /// Renders synchronously on the service's worker pool and wraps the
    /// frame as a PNG envelope.
    pub fn render(&self, req: &RenderRequest) -> Result<RenderResponse, ServiceError> {
        let frame = self.render_frame(req)?;
        let png = frame.image.encode_png()?;
        Ok(RenderResponse {
            image: base64::engine::general_purpose::STANDARD.encode(png),
            width: frame.image.width(),
            height: frame.image.height(),
            stats: frame.stats,
            warnings: frame.warnings,
        })
    }

    pub fn render_frame(&self, req: &RenderRequest) -> Result<Frame, ServiceError> {
        let start = Instant::now();
        let job = self.validate(req)?;
        let mut ctx = Context {
            svc: self,
            source_key: 0,
            all_hits: true,
        };
        // Cache slots are locked on this thread while the pool builds, so it
        // must not be a rayon worker: a worker waiting in a join can pick up
        // another request that blocks on the same slot.
        let (image, stats, warnings) = if rayon::current_thread_index().is_some() {
            std::thread::scope(|s| s.spawn(|| ctx.run(&job)).join())
                .map_err(|_| ServiceError::Internal("render thread panicked".into()))??
        } else {
            ctx.run(&job)?
        };
        Ok(Frame {
            image,
            stats: WireStats {
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                samples_total: stats.samples_total,
                samples_taken: stats.samples_taken,
                samples_skipped: stats.samples_skipped,
                rays_terminated: stats.rays_terminated,
                voxels_composited: stats.voxels_composited,
                cache_hit: ctx.all_hits,
            },
            warnings,
        })
    }

    /// Checks everything that does not need the volume itself.
    pub fn validate(&self, req: &RenderRequest) -> Result<Job, ServiceError> {
        let [w, h] = req.image_dims;
        let max = self.config.max_image_side;
        if w == 0 || h == 0 {
            return Err(ServiceError::BadRequest(format!(
                "image dims {w}x{h} must be at least 1x1"
            )));
        }
        if w > max || h > max {
            return Err(ServiceError::TooLarge(format!(
                "image dims {w}x{h} exceed the {max}x{max} limit"
            )));
        }
        let allowed = req.algorithm.param_keys();
        if let Some(k) = req
            .algorithm_params
            .keys()
            .find(|k| !allowed.contains(&k.as_str()))
        {
            return Err(ServiceError::BadRequest(format!(
                "unknown parameter `{k}` for {} (allowed: {})",
                req.algorithm,
                allowed.join(", ")
            )));
        }
        let camera = req.camera.to_camera((w, h))?;
        let mut warnings = Vec::new();
        let tf = match &req.transfer_function {
            Some(points) => {
                if !req.algorithm.uses_transfer_function() {
                    warnings.push(format!("{} ignores the transfer function", req.algorithm));
                }
                transfer_function(points)?
            }
            None => TransferFunction::ramp(),
        };
        let p = Params(&req.algorithm_params);
        let render = match req.algorithm {
            Algorithm::Iso => Render::Ray {
                cfg: CompositeConfig {
                    step: p.f64("step", 1.0)?,
                    ..CompositeConfig::with_mode(RayMode::FirstHit {
                        iso: p.f64_opt("iso")?.unwrap_or(f64::NAN),
                    })
                },
                accel: Accel::None,
            },
            Algorithm::Xray | Algorithm::Mip | Algorithm::Lmip => {
                let mode = match req.algorithm {
                    Algorithm::Xray => RayMode::XRay,
                    Algorithm::Mip => RayMode::Mip,
                    _ => RayMode::Lmip {
                        threshold: p.f64("threshold", 0.5)?,
                    },
                };
                Render::Ray {
                    cfg: CompositeConfig {
                        step: p.f64("step", 1.0)?,
                        shading: None,
                        ..CompositeConfig::with_mode(mode)
                    },
                    accel: p.accel(false)?,
                }
            }
            Algorithm::Composite => Render::Ray {
                cfg: CompositeConfig {
                    step: p.f64("step", 1.0)?,
                    ert_threshold: p.f64("ert", 1.0)?,
                    shading: p.shading()?,
                    ..Default::default()
                },
                accel: match p.accel(true)? {
                    Accel::Homogeneous(_) => Accel::Homogeneous(p.f64("homogeneity_eps", 1e-3)?),
                    a => {
                        if p.0.contains_key("homogeneity_eps") {
                            return Err(ServiceError::BadRequest(
                                "homogeneity_eps requires accel=homogeneous".into(),
                            ));
                        }
                        a
                    }
                },
            },
            Algorithm::Fvr => {
                if !req.camera.is_orthographic() {
                    return Err(ServiceError::BadRequest(
                        "fvr supports orthographic cameras only: the projection-slice \
                         relation holds for parallel projections"
                            .into(),
                    ));
                }
                let lowpass = p.f64_opt("lowpass")?;
                if lowpass.is_some_and(|l| l.is_nan() || l < 0.0) {
                    return Err(ServiceError::BadRequest("lowpass must be >= 0".into()));
                }
                Render::Fvr(FvrOptions {
                    filter: p.parse("filter", SliceFilter::default())?,
                    lowpass,
                })
            }
            Algorithm::Splat => {
                let table_res = p.usize("table_res", SplatQuality::default().table_res)?;
                if table_res == 0 {
                    return Err(ServiceError::BadRequest("table_res must be >= 1".into()));
                }
                let cfg = SplatConfig {
                    mode: p.parse("mode", SplatMode::Composite)?,
                    quality: SplatQuality {
                        kernel: p.parse("kernel", Kernel::default())?,
                        table_res,
                        sampling: p.parse("table_sampling", TableSampling::Bilinear)?,
                    },
                    shading: p.shading()?,
                    ..Default::default()
                };
                Render::Splat {
                    cfg,
                    level: p.usize("level", 0)?,
                }
            }
            Algorithm::Shearwarp => {
                if !req.camera.is_orthographic() {
                    return Err(ServiceError::BadRequest(
                        "shearwarp supports orthographic cameras only".into(),
                    ));
                }
                let cfg = ShearWarpConfig {
                    opaque_threshold: p
                        .f64("opaque", ShearWarpConfig::default().opaque_threshold)?,
                    shading: p.shading()?,
                    ..Default::default()
                };
                cfg.validate()?;
                Render::ShearWarp(cfg)
            }
            Algorithm::Boundary => {
                let plane = match (p.vec3("plane_point")?, p.vec3("plane_normal")?) {
                    (Some(pt), Some(n)) => Some(CuttingPlane::new(pt, n)?),
                    (None, None) => None,
                    _ => {
                        return Err(ServiceError::BadRequest(
                            "plane_point and plane_normal must be given together".into(),
                        ))
                    }
                };
                Render::Boundary {
                    threshold: p.f64_opt("threshold")?.unwrap_or(f64::NAN),
                    plane,
                }
            }
        };
        if let Render::Ray { cfg, .. } = &render {
            let mut probe = *cfg;
            if let RayMode::FirstHit { iso } = &mut probe.mode {
                *iso = 0.0;
            }
            probe.validate()?;
        }
        let source = self.registry.resolve(&req.volume_id)?;
        Ok(Job {
            algorithm: req.algorithm,
            source,
            camera,
            tf,
            render,
            warnings,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub image: FrameBuffer,
    pub stats: WireStats,
    pub warnings: Vec<String>,
}

/// A validated request.
#[derive(Clone, Debug)]
pub struct Job {
    pub algorithm: Algorithm,
    pub source: Source,
    pub camera: Camera,
    pub tf: TransferFunction,
    pub render: Render,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Accel {
    None,
    Presence,
    Proximity,
    Homogeneous(f64),
}

#[derive(Clone, Debug)]
pub enum Render {
    /// `FirstHit` with a NaN iso means "middle of the value range".
    Ray {
        cfg: CompositeConfig,
        accel: Accel,
    },
    Fvr(FvrOptions),
    Splat {
        cfg: SplatConfig,
        level: usize,
    },
    ShearWarp(ShearWarpConfig),
    /// NaN threshold means "middle of the value range".
    Boundary {
        threshold: f64,
        plane: Option<CuttingPlane>,
    },
}

struct Params<'a>(&'a BTreeMap<String, Value>);

impl Params<'_> {
    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ServiceError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| bad_type(key, "a number", v)),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ServiceError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ServiceError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| bad_type(key, "a non-negative integer", v)),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>, ServiceError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(Some)
                .ok_or_else(|| bad_type(key, "a string", v)),
        }
    }

    fn parse<T>(&self, key: &str, default: T) -> Result<T, ServiceError>
    where
        T: std::str::FromStr<Err = volren_core::Error>,
    {
        match self.str(key)? {
            None => Ok(default),
            Some(s) => Ok(s.parse()?),
        }
    }

    fn shading(&self) -> Result<Option<Phong>, ServiceError> {
        match self.0.get("shading") {
            None => Ok(Some(Phong::default())),
            Some(Value::Bool(b)) => Ok(b.then(Phong::default)),
            Some(v) => Err(bad_type("shading", "a boolean", v)),
        }
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3>, ServiceError> {
        let Some(v) = self.0.get(key) else {
            return Ok(None);
        };
        let a: Option<Vec<f64>> = v
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_f64).collect());
        match a {
            Some(a) if a.len() == 3 && v.as_array().map(Vec::len) == Some(3) => {
                Ok(Some(Vec3::new(a[0], a[1], a[2])))
            }
            _ => Err(bad_type(key, "an array of three numbers", v)),
        }
    }

    fn accel(&self, allow_homogeneous: bool) -> Result<Accel, ServiceError> {
        match self.str("accel")? {
            None | Some("none") => Ok(Accel::None),
            Some("presence") => Ok(Accel::Presence),
            Some("proximity") => Ok(Accel::Proximity),
            Some("homogeneous") if allow_homogeneous => Ok(Accel::Homogeneous(0.0)),
            Some(other) => Err(ServiceError::BadRequest(format!(
                "unknown accel `{other}` (expected none, presence, proximity{})",
                if allow_homogeneous {
                    " or homogeneous"
                } else {
                    ""
                }
            ))),
        }
    }
}

fn bad_type(key: &str, want: &str, got: &Value) -> ServiceError {
    ServiceError::BadRequest(format!("parameter `{key}` must be {want}, got {got}"))
}

struct Context<'a> {
    svc: &'a RenderService,
    source_key: u64,
    all_hits: bool,
}

type Output = (FrameBuffer, RenderStats, Vec<String>);

impl Context<'_> {
    fn cached<T: std::any::Any + Send + Sync>(
        &mut self,
        kind: &'static str,
        tf: u64,
        extra: u64,
        build: impl FnOnce() -> Result<(T, usize), ServiceError> + Send,
    ) -> Result<Arc<T>, ServiceError> {
        let key = CacheKey::new(kind, self.source_key, tf, extra);
        let pool = &self.svc.pool;
        let (v, hit) = self.svc.cache.get_or_build(key, || pool.install(build))?;
        self.all_hits &= hit;
        Ok(v)
    }

    fn volume(
        &mut self,
        source: &Source,
        normalized: bool,
    ) -> Result<Arc<ScalarVolume>, ServiceError> {
        let svc = self.svc;
        let raw = self.cached("volume", 0, 0, || {
            let v = svc.registry.load(source)?;
            let bytes = v.len() * 8;
            Ok((v, bytes))
        })?;
        if !normalized {
            return Ok(raw);
        }
        self.cached("normalized", 0, 0, || {
            let v = raw.normalize();
            let bytes = v.len() * 8;
            Ok((v, bytes))
        })
    }

    fn gradients(
        &mut self,
        vol: &ScalarVolume,
        normalized: bool,
    ) -> Result<Arc<GradientVolume>, ServiceError> {
        self.cached("gradients", 0, normalized as u64, || {
            Ok((vol.gradient_central(), vol.len() * 24))
        })
    }

    fn run(&mut self, job: &Job) -> Result<Output, ServiceError> {
        let mut h = Fingerprint::new();
        match &job.source {
            Source::Phantom(kind) => {
                h.write_u64(1);
                h.write_u64(*kind as u64);
            }
            Source::File { path, stamp } => {
                h.write_u64(2);
                for b in path.to_string_lossy().bytes() {
                    h.write_u64(u64::from(b));
                }
                h.write_u64(*stamp);
            }
        }
        self.source_key = h.finish();

        let normalized = !job.algorithm.uses_raw_values();
        let vol = self.volume(&job.source, normalized)?;
        let tf = &job.tf;
        let tf_key = tf.fingerprint();
        let cam = &job.camera;
        let mut warnings = job.warnings.clone();
        let mid = {
            let (lo, hi) = vol.value_range();
            0.5 * (lo + hi)
        };

        let pool = &self.svc.pool;
        let (fb, stats) = match &job.render {
            Render::Ray { cfg, accel } => {
                let mut cfg = *cfg;
                if let RayMode::FirstHit { iso } = &mut cfg.mode {
                    if iso.is_nan() {
                        *iso = mid;
                    }
                    let (lo, hi) = vol.value_range();
                    if *iso < lo || *iso > hi {
                        warnings.push(format!(
                            "iso {iso} lies outside the value range [{lo}, {hi}]"
                        ));
                    }
                }
                let grads = if raycast::needs_gradients(&cfg) {
                    Some(self.gradients(&vol, normalized)?)
                } else {
                    None
                };
                let grads = grads.as_deref();
                let mode_key = match cfg.mode {
                    RayMode::Mip => 1,
                    _ => 0,
                };
                match *accel {
                    Accel::None => {
                        pool.install(|| raycast::render_with(&vol, grads, tf, cam, &cfg, &NoSkip))?
                    }
                    Accel::Presence => {
                        let pyr = self.cached("presence", tf_key, mode_key, || {
                            let p = PresencePyramid::build(&vol, tf, cfg.mode)?;
                            let bytes = p.levels().iter().map(|g| g.data().len()).sum();
                            Ok((p, bytes))
                        })?;
                        pool.install(|| raycast_presence(&vol, grads, tf, cam, &cfg, &pyr))?
                    }
                    Accel::Proximity => {
                        let dmap = self.cached("proximity", tf_key, mode_key, || {
                            let d = DistanceMap::build(&vol, tf, cfg.mode)?;
                            let bytes = d.dims().iter().product::<usize>() * 4;
                            Ok((d, bytes))
                        })?;
                        pool.install(|| raycast_proximity(&vol, grads, tf, cam, &cfg, &dmap))?
                    }
                    Accel::Homogeneous(eps) => {
                        let rp = self.cached("range-pyramid", 0, 0, || {
                            let r = RangePyramid::build(&vol);
                            let bytes = r.levels().iter().map(|g| g.data().len() * 16).sum();
                            Ok((r, bytes))
                        })?;
                        pool.install(|| raycast_homogeneous(&vol, grads, tf, cam, &cfg, &rp, eps))?
                    }
                }
            }
            Render::Fvr(opts) => {
                let spec: Arc<SpectrumVolume> = self.cached("spectrum", 0, 0, || {
                    let s = precompute_spectrum(&vol)?;
                    let bytes = s.byte_size();
                    Ok((s, bytes))
                })?;
                let (fb, fs) = pool.install(|| render_fvr(&spec, cam, opts))?;
                if fs.max_imag_ratio > 1e-6 {
                    warnings.push(format!(
                        "projection has a relative imaginary residue of {:.2e}",
                        fs.max_imag_ratio
                    ));
                }
                (fb, RenderStats::default())
            }
            Render::Splat { cfg, level } => {
                if *level > 0 {
                    pool.install(|| render_splat_hierarchical(&vol, tf, cam, cfg, *level))?
                } else {
                    let grads = match cfg.shading {
                        Some(_) if cfg.mode == SplatMode::Composite => {
                            Some(self.gradients(&vol, normalized)?)
                        }
                        _ => None,
                    };
                    pool.install(|| render_splat(&vol, grads.as_deref(), tf, cam, cfg))?
                }
            }
            Render::ShearWarp(cfg) => {
                let fac = factorize(cam, vol.dims(), vol.spacing())?;
                let rle: Arc<RleVolume> = self.cached("rle", tf_key, 0, || {
                    let r = rle_encode(&vol, tf);
                    let bytes = r.voxel_count()
                        * std::mem::size_of::<volren_core::shearwarp::RleVoxel>()
                        + vol.len() / 2;
                    Ok((r, bytes))
                })?;
                pool.install(|| render_shearwarp(&rle, &fac, tf, cam, cfg))?
            }
            Render::Boundary { threshold, plane } => {
                let t = if threshold.is_nan() { mid } else { *threshold };
                let voxels: Arc<Vec<BoundaryVoxel>> =
                    self.cached("boundary", 0, t.to_bits(), || {
                        let v = extract_boundary_voxels(&vol, t);
                        let bytes = v.len() * std::mem::size_of::<BoundaryVoxel>();
                        Ok((v, bytes))
                    })?;
                pool.install(|| render_points(&vol, &voxels, t, cam, plane.as_ref()))?
            }
        };
        Ok((fb, stats, warnings))
    }
}
