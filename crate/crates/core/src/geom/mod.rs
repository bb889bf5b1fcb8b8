//! Vectors, rays, pinhole cameras, the background monitor and Snell refraction.

mod camera;
mod linalg;
mod mask;
mod monitor;
mod ray;
mod refract;

pub use camera::Camera;
pub use linalg::{Mat23, Mat3, Vec2, Vec3};
pub use mask::{Mask, MaskValue};
pub use monitor::MonitorPlane;
pub use ray::Ray;
pub use refract::{critical_angle, refract, TotalInternalReflection};
