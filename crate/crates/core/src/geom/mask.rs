use crate::geom::Vec2;
use crate::{Error, Real, Result};

/// Ternary silhouette label of a pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum MaskValue {
    Outside = -1,
    Boundary = 0,
    Inside = 1,
}

impl MaskValue {
    /// The indicator value: +1 inside, -1 outside, 0 on the boundary.
    #[inline]
    pub fn chi(self) -> i8 {
        self as i8
    }

    /// Byte used by the PGM mask files.
    pub fn to_gray(self) -> u8 {
        match self {
            MaskValue::Outside => 0,
            MaskValue::Boundary => 128,
            MaskValue::Inside => 255,
        }
    }

    pub fn from_gray(g: u8) -> Result<Self> {
        match g {
            0 => Ok(MaskValue::Outside),
            128 => Ok(MaskValue::Boundary),
            255 => Ok(MaskValue::Inside),
            _ => Err(Error::format("PGM mask", format!("unexpected gray level {g}"))),
        }
    }
}

/// Per-view silhouette mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub values: Vec<MaskValue>,
}

const NEIGHBORS8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl Mask {
    pub fn filled(width: u32, height: u32, v: MaskValue) -> Self {
        Self { width, height, values: vec![v; width as usize * height as usize] }
    }

    /// Builds a ternary mask from a binary silhouette: inside pixels that
    /// touch an outside pixel (8-neighborhood, image border counts as
    /// outside) become `Boundary`.
    pub fn from_binary(width: u32, height: u32, inside: &[bool]) -> Self {
        assert_eq!(inside.len(), width as usize * height as usize);
        let at = |x: i64, y: i64| -> bool {
            x >= 0 && y >= 0 && x < width as i64 && y < height as i64 && inside[y as usize * width as usize + x as usize]
        };
        let mut values = Vec::with_capacity(inside.len());
        for y in 0..height as i64 {
            for x in 0..width as i64 {
                let v = if !at(x, y) {
                    MaskValue::Outside
                } else if NEIGHBORS8.iter().any(|&(dx, dy)| !at(x + dx, y + dy)) {
                    MaskValue::Boundary
                } else {
                    MaskValue::Inside
                };
                values.push(v);
            }
        }
        Self { width, height, values }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> MaskValue {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Label of the pixel containing continuous image point `s`; points off
    /// the image are `Outside`.
    pub fn lookup<T: Real>(&self, s: Vec2<T>) -> MaskValue {
        let (fx, fy) = (s.x.floor(), s.y.floor());
        if !(fx >= T::zero() && fy >= T::zero()) {
            return MaskValue::Outside;
        }
        match (fx.to_u64(), fy.to_u64()) {
            (Some(x), Some(y)) if x < self.width as u64 && y < self.height as u64 => self.get(x as u32, y as u32),
            _ => MaskValue::Outside,
        }
    }

    /// Inside or boundary: the pixel belongs to the object's silhouette.
    pub fn covers(&self, x: u32, y: u32) -> bool {
        self.get(x, y) != MaskValue::Outside
    }

    pub fn count(&self, v: MaskValue) -> usize {
        self.values.iter().filter(|&&m| m == v).count()
    }
}
