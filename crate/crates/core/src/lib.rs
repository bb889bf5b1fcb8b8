//! Reconstruction of solid transparent objects from refractive ray-pixel
//! correspondences.
//!
//! The pipeline simulates a turntable capture against a Gray-coded monitor
//! ([`capture`]), carves a visual hull ([`carve`]), then refines the hull
//! by differentiable tracing of two-refraction paths ([`difftrace`]) under a
//! refraction, silhouette and smoothness objective ([`losses`]) in a
//! coarse-to-fine remeshing loop ([`optim`]). [`eval`] measures the result.
//!
//! All numeric code is generic over [`Real`]; the `*64` aliases below fix the
//! scalar to `f64`, which is what the pipeline is tuned for.

pub mod accel;
pub mod capture;
pub mod carve;
pub mod difftrace;
pub mod eval;
mod error;
pub mod geom;
pub mod losses;
pub mod mesh;
pub mod optim;
pub mod rig;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3f64 = geom::Vec3<f64>;
pub type Camera64 = geom::Camera<f64>;
pub type MonitorPlane64 = geom::MonitorPlane<f64>;
pub type TriMesh64 = mesh::TriMesh<f64>;
pub type Bvh64 = accel::Bvh<f64>;
pub type Scene64 = capture::Scene<f64>;
pub type CorrespondenceMap64 = capture::CorrespondenceMap<f64>;
pub type PathSample64 = difftrace::PathSample<f64>;
pub type GradBuffer64 = losses::GradBuffer<f64>;
pub type Observations64 = optim::Observations<f64>;
pub type ErrorReport64 = eval::ErrorReport<f64>;
