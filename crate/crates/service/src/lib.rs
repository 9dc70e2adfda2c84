//! HTTP render service: a volume registry, request validation, a shared
//! cache of derived structures and PNG frame encoding in front of the
//! `volren-core` renderers.

pub mod cache;
pub mod error;
pub mod http;
pub mod registry;
pub mod render;
pub mod schema;

pub use error::ServiceError;
pub use http::{router, serve, AppState};
pub use render::{Frame, RenderService, ServiceConfig};
pub use schema::{Algorithm, CameraSpec, ProjectionSpec, RenderRequest, RenderResponse, TfPoint};
