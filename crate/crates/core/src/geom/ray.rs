use crate::geom::Vec3;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray<T: Real> {
    pub origin: Vec3<T>,
    /// Unit direction.
    pub dir: Vec3<T>,
}

impl<T: Real> Ray<T> {
    #[inline]
    pub fn new(origin: Vec3<T>, dir: Vec3<T>) -> Self {
        Self { origin, dir }
    }

    #[inline]
    pub fn point_at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir * t
    }
}
