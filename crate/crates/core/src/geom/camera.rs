use serde::{Deserialize, Serialize};

use crate::geom::{Mat23, Mat3, Ray, Vec2, Vec3};
use crate::{Error, Real, Result};

/// Pinhole camera. `rotation` and `translation` map world points into the
/// camera frame (`x_cam = R·x + t`); the camera looks down its +z axis and
/// image rows grow with +y.
///
/// Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` in continuous image
/// coordinates, so its center sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct Camera<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> Camera<T> {
    /// Camera at `eye` looking at `target`, with `up` roughly pointing toward
    /// decreasing image rows.
    pub fn look_at(eye: Vec3<T>, target: Vec3<T>, up: Vec3<T>, fx: T, fy: T, width: u32, height: u32) -> Self {
        let z = (target - eye).normalized();
        let x = z.cross(up).normalized();
        let y = z.cross(x);
        let rotation = Mat3::from_rows([x, y, z]);
        let translation = -(rotation * eye);
        Self {
            fx,
            fy,
            cx: T::from_usize_lossy(width as usize) * T::half(),
            cy: T::from_usize_lossy(height as usize) * T::half(),
            rotation,
            translation,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rtr = self.rotation.transpose() * self.rotation - Mat3::identity();
        if rtr.max_abs() > T::lit(1e-10) {
            return Err(Error::Invalid("camera rotation is not orthonormal".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Invalid("camera resolution must be positive".into()));
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::Invalid("focal lengths must be positive".into()));
        }
        Ok(())
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3<T> {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation * p + self.translation
    }

    /// Depth of `p` along the optical axis.
    #[inline]
    pub fn depth(&self, p: Vec3<T>) -> T {
        self.rotation.rows[2].dot(p) + self.translation.z
    }

    /// Pinhole projection to continuous pixel coordinates.
    pub fn project(&self, p: Vec3<T>) -> Result<Vec2<T>> {
        let c = self.to_camera(p);
        if !(c.z > T::zero()) {
            return Err(Error::BehindCamera);
        }
        Ok(Vec2::new(self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy))
    }

    /// Projection together with its derivative with respect to `p`.
    pub fn project_with_jacobian(&self, p: Vec3<T>) -> Result<(Vec2<T>, Mat23<T>)> {
        let c = self.to_camera(p);
        if !(c.z > T::zero()) {
            return Err(Error::BehindCamera);
        }
        let iz = T::one() / c.z;
        let px = Vec2::new(self.fx * c.x * iz + self.cx, self.fy * c.y * iz + self.cy);
        // d(px)/d(c) then chain through the rotation
        let z = T::zero();
        let dc = Mat23::from_rows(
            Vec3::new(self.fx * iz, z, -self.fx * c.x * iz * iz),
            Vec3::new(z, self.fy * iz, -self.fy * c.y * iz * iz),
        );
        Ok((px, dc.mul_mat3(&self.rotation)))
    }

    /// Ray from the camera center through continuous pixel position `px`.
    pub fn ray_through_pixel(&self, px: Vec2<T>) -> Ray<T> {
        let dir_cam = Vec3::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy, T::one());
        Ray::new(self.center(), (self.rotation.transpose() * dir_cam).normalized())
    }

    /// Ray through the center of integer pixel `(i, j)`.
    pub fn pixel_ray(&self, i: u32, j: u32) -> Ray<T> {
        self.ray_through_pixel(Self::pixel_center(i, j))
    }

    #[inline]
    pub fn pixel_center(i: u32, j: u32) -> Vec2<T> {
        Vec2::new(T::from_usize_lossy(i as usize) + T::half(), T::from_usize_lossy(j as usize) + T::half())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        Camera {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            cx: U::lit(self.cx.as_f64()),
            cy: U::lit(self.cy.as_f64()),
            rotation: self.rotation.cast(),
            translation: self.translation.cast(),
            width: self.width,
            height: self.height,
        }
    }
}
