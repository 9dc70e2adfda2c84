//! Wire types for `/render` and `/volumes`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use volren_core::{Camera, ControlPoint, Projection, TransferFunction, Vec3};

use crate::error::ServiceError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// First-hit isosurface ray casting.
    Iso,
    Xray,
    Mip,
    Lmip,
    Composite,
    Fvr,
    Splat,
    Shearwarp,
    /// Boundary voxel point rendering with an optional cutting plane.
    Boundary,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Iso,
        Algorithm::Xray,
        Algorithm::Mip,
        Algorithm::Lmip,
        Algorithm::Composite,
        Algorithm::Fvr,
        Algorithm::Splat,
        Algorithm::Shearwarp,
        Algorithm::Boundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iso => "iso",
            Algorithm::Xray => "xray",
            Algorithm::Mip => "mip",
            Algorithm::Lmip => "lmip",
            Algorithm::Composite => "composite",
            Algorithm::Fvr => "fvr",
            Algorithm::Splat => "splat",
            Algorithm::Shearwarp => "shearwarp",
            Algorithm::Boundary => "boundary",
        }
    }

    /// Keys accepted in `algorithm_params`.
    pub fn param_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::Iso => &["iso", "step"],
            Algorithm::Xray => &["step"],
            Algorithm::Mip => &["step", "accel"],
            Algorithm::Lmip => &["threshold", "step"],
            Algorithm::Composite => &["step", "ert", "accel", "shading", "homogeneity_eps"],
            Algorithm::Fvr => &["filter", "lowpass"],
            Algorithm::Splat => &[
                "mode",
                "kernel",
                "table_res",
                "table_sampling",
                "level",
                "shading",
            ],
            Algorithm::Shearwarp => &["opaque", "shading"],
            Algorithm::Boundary => &["threshold", "plane_point", "plane_normal"],
        }
    }

    /// Whether the renderer classifies through the transfer function.
    pub fn uses_transfer_function(self) -> bool {
        matches!(
            self,
            Algorithm::Composite | Algorithm::Splat | Algorithm::Shearwarp
        )
    }

    /// Iso thresholds are given in the volume's own units; everything
    /// else sees the volume rescaled to [0, 1].
    pub fn uses_raw_values(self) -> bool {
        matches!(self, Algorithm::Iso | Algorithm::Boundary)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProjectionSpec {
    Orthographic {
        width: f64,
        height: f64,
    },
    /// Vertical field of view in degrees.
    Perspective {
        fov_y: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub eye: [f64; 3],
    pub forward: [f64; 3],
    pub up: [f64; 3],
    pub projection: ProjectionSpec,
}

impl CameraSpec {
    pub fn to_camera(&self, image_dims: (usize, usize)) -> Result<Camera, ServiceError> {
        let projection = match self.projection {
            ProjectionSpec::Orthographic { width, height } => {
                Projection::Orthographic { width, height }
            }
            ProjectionSpec::Perspective { fov_y } => Projection::Perspective {
                fov_y: fov_y.to_radians(),
            },
        };
        Ok(Camera::new(
            Vec3::from_array(self.eye),
            Vec3::from_array(self.forward),
            Vec3::from_array(self.up),
            projection,
            image_dims,
        )?)
    }

    pub fn is_orthographic(&self) -> bool {
        matches!(self.projection, ProjectionSpec::Orthographic { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfPoint {
    pub density: f64,
    pub color: [f64; 3],
    pub opacity: f64,
}

pub fn transfer_function(points: &[TfPoint]) -> Result<TransferFunction, ServiceError> {
    let points = points
        .iter()
        .map(|p| ControlPoint::new(p.density, p.color, p.opacity))
        .collect();
    Ok(TransferFunction::new(points)?)
}

pub fn tf_points(tf: &TransferFunction) -> Vec<TfPoint> {
    tf.points()
        .iter()
        .map(|p| TfPoint {
            density: p.density,
            color: p.color,
            opacity: p.opacity,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub volume_id: String,
    pub algorithm: Algorithm,
    pub camera: CameraSpec,
    /// Defaults to a linear ramp when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_function: Option<Vec<TfPoint>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub algorithm_params: BTreeMap<String, Value>,
    pub image_dims: [usize; 2],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WireStats {
    pub wall_ms: f64,
    pub samples_total: u64,
    pub samples_taken: u64,
    pub samples_skipped: u64,
    pub rays_terminated: u64,
    pub voxels_composited: u64,
    /// Every derived structure the request needed was already cached.
    pub cache_hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderResponse {
    /// Base64-encoded PNG.
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub stats: WireStats,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeInfo {
    pub id: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub value_range: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeList {
    pub volumes: Vec<VolumeInfo>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
