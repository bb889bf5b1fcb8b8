use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CorrespondenceMap, Scene, SceneTracer, Tag};
use crate::geom::Vec2;
use crate::{Error, Real, Result};

/// Number of Gray-code bits needed to address `res` monitor cells.
pub fn gray_bits(res: u32) -> u32 {
    if res <= 1 {
        1
    } else {
        32 - (res - 1).leading_zeros()
    }
}

/// Binary-reflected Gray code of `index`, most significant bit first.
pub fn encode_gray(index: u64, bits: u32) -> Result<Vec<bool>> {
    if bits > 64 || (bits < 64 && index >> bits != 0) {
        return Err(Error::OutOfRange { index, bits });
    }
    let g = index ^ (index >> 1);
    Ok((0..bits).rev().map(|k| g >> k & 1 == 1).collect())
}

/// Inverse of [`encode_gray`].
pub fn decode_gray(bits: &[bool]) -> u64 {
    let mut value = 0u64;
    let mut prev = false;
    for &b in bits {
        // binary bit k = binary bit k+1 XOR gray bit k
        prev ^= b;
        value = value << 1 | prev as u64;
    }
    value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StripeOrientation {
    /// Stripes vary along `u`; they encode the monitor column.
    Vertical,
    /// Stripes vary along `v`; they encode the monitor row.
    Horizontal,
}

/// The stripe images shown on the monitor for one orientation.
#[derive(Clone, Debug)]
pub struct GrayPatternStack {
    pub orientation: StripeOrientation,
    pub res_u: u32,
    pub res_v: u32,
    /// `stripes[bit][c]`: brightness of stripe coordinate `c` in image `bit`.
    stripes: Vec<Vec<bool>>,
}

impl GrayPatternStack {
    pub fn new(orientation: StripeOrientation, res_u: u32, res_v: u32) -> Self {
        let bits = gray_bits(res_u.max(res_v));
        let len = match orientation {
            StripeOrientation::Vertical => res_u,
            StripeOrientation::Horizontal => res_v,
        };
        let codes: Vec<Vec<bool>> = (0..len as u64).map(|c| encode_gray(c, bits).expect("fits by construction")).collect();
        let stripes = (0..bits as usize).map(|b| codes.iter().map(|code| code[b]).collect()).collect();
        Self { orientation, res_u, res_v, stripes }
    }

    pub fn bit_count(&self) -> usize {
        self.stripes.len()
    }

    /// Brightness of monitor pixel `(u, v)` in image `bit`.
    #[inline]
    pub fn value(&self, bit: usize, u: u32, v: u32) -> bool {
        match self.orientation {
            StripeOrientation::Vertical => self.stripes[bit][u as usize],
            StripeOrientation::Horizontal => self.stripes[bit][v as usize],
        }
    }

    /// Image `bit` at monitor resolution, row-major.
    pub fn image(&self, bit: usize) -> Vec<bool> {
        (0..self.res_v).flat_map(|v| (0..self.res_u).map(move |u| (u, v))).map(|(u, v)| self.value(bit, u, v)).collect()
    }
}

/// Recovers view `u`'s correspondences by rendering the vertical and
/// horizontal Gray stacks plus an all-white reference through the object and
/// decoding each pixel's bit sequence. A pixel observes the pattern at the
/// monitor cell its light path reaches, and black if none.
///
/// Dark pixels (white reference at or below `threshold`) and codes decoding
/// outside the monitor become [`Tag::Invalid`]. Pixels whose path refracts a
/// number of times other than 0 or 2 keep their tag without a position.
pub fn matting_pipeline<T: Real>(scene: &Scene<T>, u: usize, threshold: T) -> Result<CorrespondenceMap<T>> {
    let tracer = SceneTracer::new(scene)?;
    let traced = tracer.trace_view(u)?;
    let cam = scene.camera(u)?;
    let (res_u, res_v) = (scene.monitor.res_u, scene.monitor.res_v);
    let columns = GrayPatternStack::new(StripeOrientation::Vertical, res_u, res_v);
    let rows = GrayPatternStack::new(StripeOrientation::Horizontal, res_u, res_v);
    let decoded: Vec<(Tag, Option<Vec2<T>>)> = traced
        .par_iter()
        .map(|t| {
            let cell = t.q.map(|q| {
                let u = q.x.floor().to_u32().unwrap_or(0).min(res_u - 1);
                let v = q.y.floor().to_u32().unwrap_or(0).min(res_v - 1);
                (u, v)
            });
            let observe = |stack: &GrayPatternStack, bit: usize| -> T {
                match cell {
                    Some((u, v)) if stack.value(bit, u, v) => T::one(),
                    _ => T::zero(),
                }
            };
            let white = if cell.is_some() { T::one() } else { T::zero() };
            if !(white > threshold) {
                return (Tag::Invalid, None);
            }
            let decode = |stack: &GrayPatternStack| {
                let bits: Vec<bool> = (0..stack.bit_count()).map(|b| observe(stack, b) > threshold * white).collect();
                decode_gray(&bits)
            };
            let (cu, cv) = (decode(&columns), decode(&rows));
            if cu >= res_u as u64 || cv >= res_v as u64 {
                return (Tag::Invalid, None);
            }
            if !t.tag.carries_q() {
                return (t.tag, None);
            }
            let q = Vec2::new(T::from_usize_lossy(cu as usize) + T::half(), T::from_usize_lossy(cv as usize) + T::half());
            (t.tag, Some(q))
        })
        .collect();
    let (tags, q) = decoded.into_iter().unzip();
    Ok(CorrespondenceMap { view: u as u32, width: cam.width, height: cam.height, res: [res_u, res_v], tags, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::simulate_view;
    use crate::capture::tests::sphere_scene;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_gray(0, 4).unwrap(), vec![false; 4]);
        assert_eq!(encode_gray(13, 4).unwrap(), vec![true, false, true, true]);
        assert_eq!(decode_gray(&[true, false, true, true]), 13);
        assert_eq!(decode_gray(&[false; 11]), 0);
        assert!(matches!(encode_gray(16, 4), Err(Error::OutOfRange { index: 16, bits: 4 })));
    }

    #[test]
    fn eleven_bits_round_trip_and_differ_by_one_bit() {
        let mut prev = encode_gray(0, 11).unwrap();
        for i in 0..2048u64 {
            let code = encode_gray(i, 11).unwrap();
            assert_eq!(decode_gray(&code), i);
            if i > 0 {
                assert_eq!(code.iter().zip(&prev).filter(|(a, b)| a != b).count(), 1);
            }
            prev = code;
        }
    }

    #[test]
    fn bit_counts() {
        assert_eq!(gray_bits(1920), 11);
        assert_eq!(gray_bits(2048), 11);
        assert_eq!(gray_bits(2049), 12);
        assert_eq!(gray_bits(256), 8);
        let s = GrayPatternStack::new(StripeOrientation::Vertical, 1920, 1080);
        assert_eq!(s.bit_count(), 11);
        let img = s.image(0);
        assert_eq!(img.len(), 1920 * 1080);
        // most significant bit: dark on the left half of the code range
        assert!(!img[0] && img[1919]);
    }

    #[test]
    fn matting_agrees_with_simulation() {
        let scene = sphere_scene(1.5, 4);
        for u in [0, 3] {
            let (truth, _) = simulate_view(&scene, u).unwrap();
            let matte = matting_pipeline(&scene, u, 0.5).unwrap();
            matte.validate().unwrap();
            let mut close = 0;
            let mut total = 0;
            for k in 0..truth.tags.len() {
                match truth.tags[k] {
                    Tag::TwoRefraction => {
                        total += 1;
                        assert_eq!(matte.tags[k], Tag::TwoRefraction);
                        if (matte.q[k].unwrap() - truth.q[k].unwrap()).norm() <= 1.0 {
                            close += 1;
                        }
                    }
                    Tag::MissedObject => {
                        let (a, b) = (matte.q[k].unwrap(), truth.q[k].unwrap());
                        assert_eq!((a.x.floor(), a.y.floor()), (b.x.floor(), b.y.floor()));
                    }
                    Tag::Tir | Tag::MissedMonitor => assert_eq!(matte.tags[k], Tag::Invalid),
                    _ => {}
                }
            }
            assert!(total > 0 && close as f64 >= 0.99 * total as f64);
        }
    }
}
