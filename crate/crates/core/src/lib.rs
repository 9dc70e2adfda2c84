//! CPU volume rendering engine.
//!
//! The crate covers both indirect rendering (isosurface extraction with
//! marching cubes, Fourier-domain X-ray projection) and direct rendering
//! (ray casting, splatting, shear-warp), together with the acceleration
//! structures used to make the direct renderers fast: presence and range
//! pyramids, chamfer distance maps, early ray termination and boundary
//! voxel extraction.
//!
//! Every renderer consumes the types in [`volume`], [`transfer`] and
//! [`camera`] and produces a [`FrameBuffer`].

pub mod accel;
pub mod camera;
pub mod error;
pub mod framebuffer;
pub mod fvr;
pub mod math;
pub mod mc;
pub mod metrics;
pub mod raycast;
pub mod shading;
pub mod shearwarp;
pub mod splat;
pub mod stats;
pub mod transfer;
pub mod volume;

pub use camera::{Camera, Projection};
pub use error::{Error, Result};
pub use framebuffer::FrameBuffer;
pub use math::Vec3;
pub use stats::RenderStats;
pub use transfer::{ControlPoint, Rgba, TransferFunction};
pub use volume::{GradientVolume, ScalarVolume};
