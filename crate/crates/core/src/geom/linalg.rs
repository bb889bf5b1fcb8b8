//! Small fixed-size vectors and matrices.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
pub struct Vec3<T: Copy> {
    pub x: T,
    pub y: T,
    pub z: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Vec2<T: Copy> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Zero vectors come back as NaN.
    #[inline]
    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    #[inline]
    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_axis(self) -> usize {
        let a = [self.x.abs(), self.y.abs(), self.z.abs()];
        if a[0] >= a[1] && a[0] >= a[2] {
            0
        } else if a[1] >= a[2] {
            1
        } else {
            2
        }
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }

    /// Outer product `self * oᵀ`.
    pub fn outer(self, o: Self) -> Mat3<T> {
        Mat3::from_rows([self * o.x, self * o.y, self * o.z]).transpose()
    }
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }
}

macro_rules! impl_vec_ops {
    ($V:ident { $($f:ident),+ }) => {
        impl<T: Real> Add for $V<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self { Self { $($f: self.$f + o.$f),+ } }
        }
        impl<T: Real> Sub for $V<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self { Self { $($f: self.$f - o.$f),+ } }
        }
        impl<T: Real> Mul<T> for $V<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self { Self { $($f: self.$f * s),+ } }
        }
        impl<T: Real> Div<T> for $V<T> {
            type Output = Self;
            #[inline]
            fn div(self, s: T) -> Self { Self { $($f: self.$f / s),+ } }
        }
        impl<T: Real> Neg for $V<T> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self { Self { $($f: -self.$f),+ } }
        }
        impl<T: Real> AddAssign for $V<T> {
            #[inline]
            fn add_assign(&mut self, o: Self) { $(self.$f = self.$f + o.$f;)+ }
        }
        impl<T: Real> SubAssign for $V<T> {
            #[inline]
            fn sub_assign(&mut self, o: Self) { $(self.$f = self.$f - o.$f;)+ }
        }
    };
}

impl_vec_ops!(Vec3 { x, y, z });
impl_vec_ops!(Vec2 { x, y });

impl<T: Copy> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T: Copy> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Copy> From<[T; 2]> for Vec2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T: Copy> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Copy> From<[Vec3<T>; 3]> for Mat3<T> {
    fn from(rows: [Vec3<T>; 3]) -> Self {
        Self { rows }
    }
}

impl<T: Copy> From<Mat3<T>> for [Vec3<T>; 3] {
    fn from(m: Mat3<T>) -> Self {
        m.rows
    }
}

impl<T: Copy> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Copy> IndexMut<usize> for Vec3<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Vec3<T>; 3]", into = "[Vec3<T>; 3]")]
pub struct Mat3<T: Copy> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn from_rows(rows: [Vec3<T>; 3]) -> Self {
        Self { rows }
    }

    pub fn from_cols(c: [Vec3<T>; 3]) -> Self {
        Self::from_rows(c).transpose()
    }

    pub fn identity() -> Self {
        Self::diag(T::one())
    }

    pub fn zero() -> Self {
        Self::diag(T::zero())
    }

    pub fn diag(d: T) -> Self {
        let (o, z) = (d, T::zero());
        Self::from_rows([Vec3::new(o, z, z), Vec3::new(z, o, z), Vec3::new(z, z, o)])
    }

    /// Cross-product matrix: `skew(a) * b == a.cross(b)`.
    pub fn skew(a: Vec3<T>) -> Self {
        let z = T::zero();
        Self::from_rows([
            Vec3::new(z, -a.z, a.y),
            Vec3::new(a.z, z, -a.x),
            Vec3::new(-a.y, a.x, z),
        ])
    }

    /// Rotation about the +y axis by `angle` radians.
    pub fn rotation_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self::from_rows([Vec3::new(c, z, s), Vec3::new(z, o, z), Vec3::new(-s, z, c)])
    }

    /// Rotation of `angle` radians about a unit `axis` (Rodrigues).
    pub fn rotation_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let k = Self::skew(axis);
        let (s, c) = angle.sin_cos();
        Self::identity() + k * s + (k * k) * (T::one() - c)
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Self {
        Self::from_rows([self.col(0), self.col(1), self.col(2)])
    }

    pub fn det(&self) -> T {
        self.rows[0].dot(self.rows[1].cross(self.rows[2]))
    }

    pub fn max_abs(&self) -> T {
        self.rows
            .iter()
            .flat_map(|r| [r.x.abs(), r.y.abs(), r.z.abs()])
            .fold(T::zero(), T::max)
    }

    /// Inverse via the adjugate; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let [a, b, c] = self.rows;
        let adj_t = Self::from_rows([b.cross(c), c.cross(a), a.cross(b)]);
        Some(adj_t.transpose() * (T::one() / det))
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        Mat3::from_rows(self.rows.map(|r| r.cast()))
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    #[inline]
    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let ot = o.transpose();
        Self::from_rows(self.rows.map(|r| Vec3::new(r.dot(ot.rows[0]), r.dot(ot.rows[1]), r.dot(ot.rows[2]))))
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::from_rows(self.rows.map(|r| r * s))
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_rows([self.rows[0] + o.rows[0], self.rows[1] + o.rows[1], self.rows[2] + o.rows[2]])
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_rows([self.rows[0] - o.rows[0], self.rows[1] - o.rows[1], self.rows[2] - o.rows[2]])
    }
}

/// 2x3 matrix, the shape of every image-space Jacobian with respect to a 3D point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat23<T: Copy> {
    pub rows: [Vec3<T>; 2],
}

impl<T: Real> Mat23<T> {
    pub fn zero() -> Self {
        Self { rows: [Vec3::zero(); 2] }
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>) -> Self {
        Self { rows: [r0, r1] }
    }

    /// `selfᵀ * v`.
    #[inline]
    pub fn transpose_mul(&self, v: Vec2<T>) -> Vec3<T> {
        self.rows[0] * v.x + self.rows[1] * v.y
    }

    pub fn mul_mat3(&self, m: &Mat3<T>) -> Self {
        let mt = m.transpose();
        let row = |r: Vec3<T>| Vec3::new(r.dot(mt.rows[0]), r.dot(mt.rows[1]), r.dot(mt.rows[2]));
        Self::from_rows(row(self.rows[0]), row(self.rows[1]))
    }

    pub fn max_abs(&self) -> T {
        self.rows
            .iter()
            .flat_map(|r| [r.x.abs(), r.y.abs(), r.z.abs()])
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat23<T> {
    type Output = Vec2<T>;
    #[inline]
    fn mul(self, v: Vec3<T>) -> Vec2<T> {
        Vec2::new(self.rows[0].dot(v), self.rows[1].dot(v))
    }
}

impl<T: Real> Add for Mat23<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_rows(self.rows[0] + o.rows[0], self.rows[1] + o.rows[1])
    }
}

impl<T: Real> Sub for Mat23<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_rows(self.rows[0] - o.rows[0], self.rows[1] - o.rows[1])
    }
}

impl<T: Real> Mul<T> for Mat23<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::from_rows(self.rows[0] * s, self.rows[1] * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_matches_cross() {
        let a = Vec3::new(0.3, -1.2, 2.0);
        let b = Vec3::new(-0.7, 0.1, 0.9);
        let c = Mat3::skew(a) * b;
        assert!((c - a.cross(b)).norm() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat3::from_rows([
            Vec3::new(2.0, 0.5, -1.0),
            Vec3::new(0.0, 1.5, 0.3),
            Vec3::new(0.2, -0.4, 3.0),
        ]);
        let p = m * m.inverse().unwrap();
        assert!((p - Mat3::identity()).max_abs() < 1e-14);
    }

    #[test]
    fn axis_angle_is_orthonormal() {
        let r = Mat3::rotation_axis_angle(Vec3::new(1.0, 2.0, -0.5).normalized(), 0.7f64);
        assert!((r.transpose() * r - Mat3::identity()).max_abs() < 1e-14);
        assert!((r.det() - 1.0).abs() < 1e-14);
        let ry = Mat3::rotation_y(0.4f64);
        let ry2 = Mat3::rotation_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.4);
        assert!((ry - ry2).max_abs() < 1e-15);
    }
}
