use serde::{Deserialize, Serialize};

use crate::geom::{Ray, Vec2, Vec3};
use crate::{Error, Real, Result};

/// The coded background: a planar grid of `res_u × res_v` monitor pixels.
///
/// Monitor pixel coordinates are continuous: the point
/// `origin + u·u_axis + v·v_axis` has coordinates `(u, v)`, and the axes
/// have the physical pixel pitch as length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct MonitorPlane<T: Real> {
    pub origin: Vec3<T>,
    pub u_axis: Vec3<T>,
    pub v_axis: Vec3<T>,
    pub res_u: u32,
    pub res_v: u32,
}

impl<T: Real> MonitorPlane<T> {
    /// Monitor of physical size `width × height` centered on `center`, with
    /// `u` running along `right` and `v` along `down`.
    pub fn centered(center: Vec3<T>, right: Vec3<T>, down: Vec3<T>, width: T, height: T, res_u: u32, res_v: u32) -> Self {
        let pitch_u = width / T::from_usize_lossy(res_u as usize);
        let pitch_v = height / T::from_usize_lossy(res_v as usize);
        let u_axis = right.normalized() * pitch_u;
        let v_axis = down.normalized() * pitch_v;
        Self {
            origin: center - right.normalized() * (width * T::half()) - down.normalized() * (height * T::half()),
            u_axis,
            v_axis,
            res_u,
            res_v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scale = self.u_axis.norm() * self.v_axis.norm();
        if !(scale > T::zero()) || self.res_u == 0 || self.res_v == 0 {
            return Err(Error::Invalid("monitor axes and resolution must be non-zero".into()));
        }
        if (self.u_axis.dot(self.v_axis) / scale).abs() > T::lit(1e-10) {
            return Err(Error::Invalid("monitor axes must be orthogonal".into()));
        }
        Ok(())
    }

    /// Unnormalized plane normal `u_axis × v_axis`.
    pub fn normal(&self) -> Vec3<T> {
        self.u_axis.cross(self.v_axis)
    }

    /// Monitor coordinates of a point on the plane.
    #[inline]
    pub fn to_uv(&self, p: Vec3<T>) -> Vec2<T> {
        let r = p - self.origin;
        Vec2::new(r.dot(self.u_axis) / self.u_axis.norm_squared(), r.dot(self.v_axis) / self.v_axis.norm_squared())
    }

    #[inline]
    pub fn point(&self, uv: Vec2<T>) -> Vec3<T> {
        self.origin + self.u_axis * uv.x + self.v_axis * uv.y
    }

    #[inline]
    pub fn contains(&self, uv: Vec2<T>) -> bool {
        uv.x >= T::zero()
            && uv.y >= T::zero()
            && uv.x < T::from_usize_lossy(self.res_u as usize)
            && uv.y < T::from_usize_lossy(self.res_v as usize)
    }

    /// Where `ray` lands on the monitor, or `None` when it is parallel,
    /// points away, or lands outside the displayed area.
    pub fn intersect(&self, ray: &Ray<T>) -> Option<Vec2<T>> {
        let n = self.normal();
        let denom = ray.dir.dot(n);
        if denom == T::zero() {
            return None;
        }
        let t = (self.origin - ray.origin).dot(n) / denom;
        if !(t > T::zero()) {
            return None;
        }
        let uv = self.to_uv(ray.point_at(t));
        self.contains(uv).then_some(uv)
    }

    pub fn cast<U: Real>(&self) -> MonitorPlane<U> {
        MonitorPlane {
            origin: self.origin.cast(),
            u_axis: self.u_axis.cast(),
            v_axis: self.v_axis.cast(),
            res_u: self.res_u,
            res_v: self.res_v,
        }
    }
}
