//! Turntable acquisition geometry: a static camera and a static monitor,
//! with the object rotating about the vertical axis between views.
//!
//! Working in the object frame, each view is a camera placed on a circle
//! around the `y` axis, and the monitor keeps its pose relative to that
//! camera.

use serde::{Deserialize, Serialize};

use crate::geom::{Camera, MonitorPlane, Vec3};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct TurntableRig<T: Real> {
    /// Number of evenly spaced turntable angles.
    pub views: usize,
    /// Point on the rotation axis the camera looks at.
    pub target: Vec3<T>,
    /// Camera distance from `target`.
    pub distance: T,
    /// Camera elevation above the turntable plane, in degrees.
    pub elevation_deg: T,
    /// Focal length in pixels (square pixels).
    pub focal: T,
    pub width: u32,
    pub height: u32,
    /// Distance of the monitor plane behind `target`, along the optical axis.
    pub monitor_distance: T,
    pub monitor_width: T,
    pub monitor_height: T,
    pub monitor_res: [u32; 2],
}

impl<T: Real> Default for TurntableRig<T> {
    /// 36 views of an object of unit size at the origin, 64×64 camera and a
    /// 256×256 monitor.
    fn default() -> Self {
        Self {
            views: 36,
            target: Vec3::zero(),
            distance: T::lit(3.0),
            elevation_deg: T::lit(15.0),
            focal: T::lit(130.0),
            width: 64,
            height: 64,
            monitor_distance: T::lit(1.5),
            monitor_width: T::lit(6.0),
            monitor_height: T::lit(6.0),
            monitor_res: [256, 256],
        }
    }
}

impl<T: Real> TurntableRig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.views == 0 {
            return Err(Error::Invalid("rig needs at least one view".into()));
        }
        if !(self.distance > T::zero() && self.focal > T::zero() && self.monitor_distance > T::zero()) {
            return Err(Error::Invalid("rig distances and focal length must be positive".into()));
        }
        if !(self.monitor_width > T::zero() && self.monitor_height > T::zero()) {
            return Err(Error::Invalid("monitor size must be positive".into()));
        }
        Ok(())
    }

    /// Camera of view `u`: turntable angle `360° · u / views`.
    pub fn camera(&self, u: usize) -> Camera<T> {
        let theta = T::two() * T::PI() * T::from_usize_lossy(u) / T::from_usize_lossy(self.views);
        let phi = self.elevation_deg.to_radians();
        let dir = Vec3::new(theta.sin() * phi.cos(), phi.sin(), theta.cos() * phi.cos());
        Camera::look_at(
            self.target + dir * self.distance,
            self.target,
            Vec3::new(T::zero(), T::one(), T::zero()),
            self.focal,
            self.focal,
            self.width,
            self.height,
        )
    }

    pub fn cameras(&self) -> Vec<Camera<T>> {
        (0..self.views).map(|u| self.camera(u)).collect()
    }

    /// The monitor in camera coordinates: perpendicular to the optical axis,
    /// centered on it, `u` to the right and `v` down in the image.
    pub fn monitor(&self) -> MonitorPlane<T> {
        let (o, l) = (T::zero(), T::one());
        MonitorPlane::centered(
            Vec3::new(o, o, self.distance + self.monitor_distance),
            Vec3::new(l, o, o),
            Vec3::new(o, l, o),
            self.monitor_width,
            self.monitor_height,
            self.monitor_res[0],
            self.monitor_res[1],
        )
    }
}

/// Expresses a monitor given in the frame of `cam` in world coordinates.
pub fn monitor_in_world<T: Real>(cam: &Camera<T>, local: &MonitorPlane<T>) -> MonitorPlane<T> {
    let rt = cam.rotation.transpose();
    MonitorPlane {
        origin: rt * (local.origin - cam.translation),
        u_axis: rt * local.u_axis,
        v_axis: rt * local.v_axis,
        res_u: local.res_u,
        res_v: local.res_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Ray, Vec2};

    #[test]
    fn cameras_circle_the_axis() {
        let rig = TurntableRig::<f64>::default();
        for (u, cam) in rig.cameras().iter().enumerate() {
            cam.validate().unwrap();
            let c = cam.center();
            assert!((c.norm() - 3.0).abs() < 1e-12);
            assert!((c.y - 3.0 * 15f64.to_radians().sin()).abs() < 1e-12);
            let p = cam.project(Vec3::zero()).unwrap();
            assert!((p - Vec2::new(32.0, 32.0)).norm() < 1e-9, "view {u}");
        }
        // opposite views look at each other through the axis
        let a = rig.camera(0).center();
        let b = rig.camera(18).center();
        assert!((a.x + b.x).abs() < 1e-12 && (a.z + b.z).abs() < 1e-12);
    }

    #[test]
    fn principal_ray_hits_monitor_center() {
        let rig = TurntableRig::<f64>::default();
        let local = rig.monitor();
        local.validate().unwrap();
        for u in [0, 5, 17, 30] {
            let cam = rig.camera(u);
            let m = monitor_in_world(&cam, &local);
            m.validate().unwrap();
            let ray: Ray<f64> = cam.ray_through_pixel(Vec2::new(32.0, 32.0));
            let q = m.intersect(&ray).unwrap();
            assert!((q - Vec2::new(128.0, 128.0)).norm() < 1e-9);
            let hit = ray.origin + ray.dir * 4.5;
            assert!((m.to_uv(hit) - q).norm() < 1e-9);
        }
    }
}
