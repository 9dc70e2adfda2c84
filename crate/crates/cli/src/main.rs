use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use volren_bench::{run_suite, Suite};
use volren_core::mc::{extract_isosurface_with, save_mesh, ExtractMode, IsoConfig};
use volren_core::volume::{load_volume, make_phantom, save_volume, PhantomKind, PhantomParams};
use volren_core::{Camera, Projection, ScalarVolume, TransferFunction};
use volren_service::registry::{PHANTOM_PREFIX, PHANTOM_SIZE};
use volren_service::schema::tf_points;
use volren_service::{
    Algorithm, AppState, CameraSpec, ProjectionSpec, RenderRequest, RenderService, ServiceConfig,
};

#[derive(Parser)]
#[command(name = "volren", version, about = "CPU volume renderer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic volume as .rvol
    Phantom {
        /// sphere, two-spheres, box, gaussian-blob or opaque-core
        kind: PhantomKind,
        size: usize,
        output: PathBuf,
    },
    /// Render a volume to PNG or PPM (chosen by the output extension)
    Render(Box<RenderArgs>),
    /// Extract an isosurface as a Wavefront OBJ mesh
    Mesh {
        /// .rvol file or phantom:<kind>
        volume: String,
        #[arg(long)]
        iso: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Extract z-slabs in parallel
        #[arg(long)]
        parallel: bool,
    },
    /// Run the HTTP render service
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Render workers shared by all requests (0: one per core)
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = 512)]
        cache_mb: usize,
        #[arg(long, env = "RVOL_DIR")]
        volumes: Option<PathBuf>,
        /// Static files served under /ui
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Per-request timeout in seconds
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        #[arg(long, default_value_t = 1024)]
        max_image: usize,
    },
    /// Print acceptance measurements as JSON
    Bench {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
}

#[derive(Args)]
struct RenderArgs {
    /// .rvol file or phantom:<kind>
    volume: String,
    #[arg(short, long)]
    output: PathBuf,
    /// Render a JSON request as sent to /render; other flags are ignored
    #[arg(long, conflicts_with = "algo")]
    request: Option<PathBuf>,
    #[arg(long, default_value = "composite")]
    algo: Algorithm,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Orbit angles in degrees; azimuth about +y from +z
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    azimuth: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    elevation: f64,
    /// Perspective field of view in degrees (orthographic otherwise)
    #[arg(long)]
    perspective: Option<f64>,
    /// Scales the framed view; 2 shows the volume twice as large
    #[arg(long, default_value_t = 1.0)]
    zoom: f64,
    /// Transfer function file of `density r g b a` lines
    #[arg(long)]
    tf: Option<PathBuf>,
    #[arg(long)]
    iso: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    ert: Option<f64>,
    /// none, presence, proximity or homogeneous
    #[arg(long)]
    accel: Option<String>,
    #[arg(long)]
    homogeneity_eps: Option<f64>,
    /// LMIP or boundary threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// nearest, bilinear, sinc2 or sinc4
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    lowpass: Option<f64>,
    /// Splat mode: composite or xray
    #[arg(long)]
    splat_mode: Option<String>,
    /// gaussian, cone or bilinear
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    table_res: Option<u64>,
    /// nearest or bilinear
    #[arg(long)]
    table_sampling: Option<String>,
    #[arg(long)]
    level: Option<u64>,
    #[arg(long)]
    opaque: Option<f64>,
    #[arg(long)]
    no_shading: bool,
    /// Cutting plane for boundary rendering: point and normal, x,y,z each
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    plane_point: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    plane_normal: Option<Vec<f64>>,
    /// Print render statistics as JSON
    #[arg(long)]
    stats: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("volren: {e}");
            ExitCode::FAILURE
        }
    }
}

type BoxError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<(), BoxError> {
    match cli.command {
        Command::Phantom { kind, size, output } => {
            let vol = make_phantom(kind, [size; 3], &PhantomParams::default())?;
            save_volume(&vol, &output)?;
        }
        Command::Render(args) => render(*args)?,
        Command::Mesh {
            volume,
            iso,
            output,
            parallel,
        } => {
            let vol = open_volume(&volume)?;
            let mode = if parallel {
                ExtractMode::Parallel
            } else {
                ExtractMode::Serial
            };
            let (mesh, stats) = extract_isosurface_with(&vol, &IsoConfig::new(iso), mode);
            if mesh.is_empty() {
                return Err(format!("no surface at iso {iso}").into());
            }
            save_mesh(&mesh, &output)?;
            eprintln!(
                "{} vertices, {} triangles, {} cells intersected",
                mesh.vertices.len(),
                mesh.triangles.len(),
                stats.cells_intersected
            );
        }
        Command::Serve {
            port,
            host,
            workers,
            cache_mb,
            volumes,
            ui_dir,
            timeout,
            max_image,
        } => {
            if !(timeout > 0.0 && timeout.is_finite()) {
                return Err("timeout must be positive".into());
            }
            let service = RenderService::new(ServiceConfig {
                volume_dir: volumes,
                workers,
                cache_bytes: cache_mb << 20,
                max_image_side: max_image,
                timeout: Duration::from_secs_f64(timeout),
            })?;
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let state = AppState {
                service: Arc::new(service),
                ui_dir,
            };
            tokio::runtime::Runtime::new()?.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                volren_service::serve(state, listener).await
            })?;
        }
        Command::Bench { suite, size, runs } => {
            if size < 16 {
                return Err("bench size must be at least 16".into());
            }
            let report = json!({
                "size": size,
                "runs": runs,
                "threads": rayon::current_num_threads(),
                "results": run_suite(suite, size, runs),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn open_volume(spec: &str) -> Result<ScalarVolume, BoxError> {
    match spec.strip_prefix(PHANTOM_PREFIX) {
        Some(kind) => Ok(make_phantom(
            kind.parse()?,
            [PHANTOM_SIZE; 3],
            &PhantomParams::default(),
        )?),
        None => Ok(load_volume(spec)?),
    }
}

/// Service config and volume id that resolve `spec` (a phantom id or a
/// path to an .rvol file).
fn locate(spec: &str) -> Result<(Option<PathBuf>, String), BoxError> {
    if spec.starts_with(PHANTOM_PREFIX) {
        return Ok((None, spec.to_string()));
    }
    let path = Path::new(spec);
    if path.extension().is_none_or(|e| e != "rvol") {
        return Err(format!("{spec}: expected an .rvol file or phantom:<kind>").into());
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| format!("{spec}: unsupported file name"))?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((Some(dir), stem.to_string()))
}

fn render(args: RenderArgs) -> Result<(), BoxError> {
    let (dir, id) = locate(&args.volume)?;
    let req = match &args.request {
        Some(path) => {
            let mut req: RenderRequest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            req.volume_id = id;
            req
        }
        None => request_from_flags(&args, id)?,
    };
    let service = RenderService::new(ServiceConfig {
        volume_dir: dir,
        max_image_side: usize::MAX,
        ..Default::default()
    })?;
    let frame = service.render_frame(&req)?;
    frame.image.save(&args.output)?;
    for w in &frame.warnings {
        eprintln!("warning: {w}");
    }
    if args.stats {
        println!("{}", serde_json::to_string_pretty(&frame.stats)?);
    }
    Ok(())
}

fn request_from_flags(args: &RenderArgs, id: String) -> Result<RenderRequest, BoxError> {
    let vol = open_volume(&args.volume)?;
    if !(args.zoom > 0.0 && args.zoom.is_finite()) {
        return Err("zoom must be positive".into());
    }
    let radius = 0.5 * vol.extent().length() / args.zoom;
    let (w, h) = (args.width, args.height);
    if w == 0 || h == 0 {
        return Err("image dims must be at least 1x1".into());
    }
    let projection = match args.perspective {
        Some(fov) => Projection::Perspective {
            fov_y: fov.to_radians(),
        },
        None => {
            let aspect = w as f64 / h as f64;
            let side = 2.0 * radius;
            if aspect >= 1.0 {
                Projection::Orthographic {
                    width: side * aspect,
                    height: side,
                }
            } else {
                Projection::Orthographic {
                    width: side,
                    height: side / aspect,
                }
            }
        }
    };
    let cam = Camera::orbit(
        vol.center(),
        0.5 * vol.extent().length(),
        args.azimuth.to_radians(),
        args.elevation.to_radians(),
        projection,
        (w, h),
    )?;
    let projection = match args.perspective {
        Some(fov_y) => ProjectionSpec::Perspective { fov_y },
        None => match projection {
            Projection::Orthographic { width, height } => {
                ProjectionSpec::Orthographic { width, height }
            }
            Projection::Perspective { .. } => unreachable!(),
        },
    };
    let camera = CameraSpec {
        eye: cam.eye.to_array(),
        forward: cam.forward.to_array(),
        up: cam.up.to_array(),
        projection,
    };

    let mut params = BTreeMap::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            params.insert(k.to_string(), v);
        }
    };
    put("iso", args.iso.map(Value::from));
    put("step", args.step.map(Value::from));
    put("ert", args.ert.map(Value::from));
    put("accel", args.accel.clone().map(Value::from));
    put("homogeneity_eps", args.homogeneity_eps.map(Value::from));
    put("threshold", args.threshold.map(Value::from));
    put("filter", args.filter.clone().map(Value::from));
    put("lowpass", args.lowpass.map(Value::from));
    put("mode", args.splat_mode.clone().map(Value::from));
    put("kernel", args.kernel.clone().map(Value::from));
    put("table_res", args.table_res.map(Value::from));
    put(
        "table_sampling",
        args.table_sampling.clone().map(Value::from),
    );
    put("level", args.level.map(Value::from));
    put("opaque", args.opaque.map(Value::from));
    put("plane_point", args.plane_point.clone().map(Value::from));
    put("plane_normal", args.plane_normal.clone().map(Value::from));
    if args.no_shading {
        put("shading", Some(Value::Bool(false)));
    }
    let transfer_function = match &args.tf {
        Some(path) => Some(tf_points(&TransferFunction::load(path)?)),
        None => None,
    };
    Ok(RenderRequest {
        volume_id: id,
        algorithm: args.algo,
        camera,
        transfer_function,
        algorithm_params: params,
        image_dims: [w, h],
    })
}
