//! Visual hull by voxel space carving, and surface extraction from the
//! occupancy grid.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{Camera, Mask, MaskValue, Mat3, Vec3};
use crate::mesh::TriMesh;
use crate::{Error, Real, Result};

/// Resolution used to locate the object before the full-resolution carve.
pub const COARSE_RESOLUTION: usize = 48;
/// Default full carving resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 128;

/// Placement of a voxel grid: `res` cells per axis spanning `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct GridSpec<T: Real> {
    pub res: [usize; 3],
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> GridSpec<T> {
    /// Cubic voxels of edge `(max-min).max / n` covering the box.
    pub fn cubic(min: Vec3<T>, max: Vec3<T>, n: usize) -> Self {
        let ext = max - min;
        let side = ext.x.max(ext.y).max(ext.z) / T::from_usize_lossy(n);
        let cells = |e: T| (e / side).ceil().to_usize().unwrap_or(1).max(1);
        let res = [cells(ext.x), cells(ext.y), cells(ext.z)];
        let center = (min + max) * T::half();
        let half = Vec3::new(
            T::from_usize_lossy(res[0]) * side,
            T::from_usize_lossy(res[1]) * side,
            T::from_usize_lossy(res[2]) * side,
        ) * T::half();
        Self { res, min: center - half, max: center + half }
    }

    pub fn voxel_size(&self) -> Vec3<T> {
        let e = self.max - self.min;
        Vec3::new(
            e.x / T::from_usize_lossy(self.res[0]),
            e.y / T::from_usize_lossy(self.res[1]),
            e.z / T::from_usize_lossy(self.res[2]),
        )
    }

    pub fn len(&self) -> usize {
        self.res[0] * self.res[1] * self.res[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.res[1] + j) * self.res[0] + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.res[0];
        let j = (idx / self.res[0]) % self.res[1];
        [i, j, idx / (self.res[0] * self.res[1])]
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        let s = self.voxel_size();
        let h = T::half();
        self.min
            + Vec3::new(
                (T::from_usize_lossy(i) + h) * s.x,
                (T::from_usize_lossy(j) + h) * s.y,
                (T::from_usize_lossy(k) + h) * s.z,
            )
    }

    /// Voxel containing `p`, if inside the grid.
    pub fn voxel_of(&self, p: Vec3<T>) -> Option<[usize; 3]> {
        let s = self.voxel_size();
        let r = p - self.min;
        let mut out = [0usize; 3];
        for a in 0..3 {
            let c = (r[a] / s[a]).floor();
            if !(c >= T::zero()) || c >= T::from_usize_lossy(self.res[a]) {
                return None;
            }
            out[a] = c.to_usize()?;
        }
        Some(out)
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() || (0..3).any(|a| !(self.max[a] > self.min[a])) {
            return Err(Error::Invalid("voxel grid needs a positive extent and resolution".into()));
        }
        Ok(())
    }
}

/// Occupancy bits over a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid<T: Real> {
    pub spec: GridSpec<T>,
    bits: Vec<u64>,
}

impl<T: Real> VoxelGrid<T> {
    pub fn empty(spec: GridSpec<T>) -> Self {
        Self { spec, bits: vec![0; spec.len().div_ceil(64)] }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: bool) {
        if v {
            self.bits[idx / 64] |= 1 << (idx % 64);
        } else {
            self.bits[idx / 64] &= !(1 << (idx % 64));
        }
    }

    #[inline]
    pub fn occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.get(self.spec.index(i, j, k))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn volume(&self) -> T {
        let s = self.spec.voxel_size();
        T::from_usize_lossy(self.count()) * s.x * s.y * s.z
    }

    /// Whether an occupied voxel lies within `k` voxels (Chebyshev) of the
    /// voxel containing `p`.
    pub fn contains_dilated(&self, p: Vec3<T>, k: usize) -> bool {
        let s = self.spec.voxel_size();
        let r = p - self.spec.min;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let c = (r[a] / s[a]).floor().to_i64().unwrap_or(i64::MIN / 2);
            let n = self.spec.res[a] as i64;
            let (l, h) = (c - k as i64, c + k as i64);
            if h < 0 || l >= n {
                return false;
            }
            lo[a] = l.max(0) as usize;
            hi[a] = h.min(n - 1) as usize;
        }
        (lo[2]..=hi[2]).any(|z| (lo[1]..=hi[1]).any(|y| (lo[0]..=hi[0]).any(|x| self.occupied(x, y, z))))
    }

    /// Bounds of the occupied voxels.
    pub fn occupied_bounds(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let s = self.spec.voxel_size();
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in 0..self.spec.len() {
            if self.get(idx) {
                any = true;
                let c = self.spec.coords(idx);
                for a in 0..3 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a] + 1);
                }
            }
        }
        any.then(|| {
            let f = |c: [usize; 3]| {
                self.spec.min
                    + Vec3::new(
                        T::from_usize_lossy(c[0]) * s.x,
                        T::from_usize_lossy(c[1]) * s.y,
                        T::from_usize_lossy(c[2]) * s.z,
                    )
            };
            (f(lo), f(hi))
        })
    }
}

fn check_views<T: Real>(masks: &[Mask], cams: &[Camera<T>]) -> Result<()> {
    if masks.is_empty() || masks.len() != cams.len() {
        return Err(Error::ShapeMismatch(masks.len(), cams.len()));
    }
    for (m, c) in masks.iter().zip(cams) {
        if m.width != c.width || m.height != c.height {
            return Err(Error::Invalid("mask size differs from its camera".into()));
        }
    }
    Ok(())
}

/// `true` if `p` projects onto an Inside or Boundary pixel in every view.
#[inline]
fn in_all_silhouettes<T: Real>(p: Vec3<T>, masks: &[Mask], cams: &[Camera<T>]) -> bool {
    masks.iter().zip(cams).all(|(m, c)| match c.project(p) {
        Ok(s) => m.lookup(s) != MaskValue::Outside,
        Err(_) => false,
    })
}

/// Keeps exactly the voxels whose centers fall inside every silhouette.
pub fn carve<T: Real>(masks: &[Mask], cams: &[Camera<T>], spec: GridSpec<T>) -> Result<VoxelGrid<T>> {
    check_views(masks, cams)?;
    spec.validate()?;
    let words: Vec<u64> = (0..spec.len().div_ceil(64))
        .into_par_iter()
        .map(|w| {
            let mut word = 0u64;
            for b in 0..64 {
                let idx = w * 64 + b;
                if idx >= spec.len() {
                    break;
                }
                let [i, j, k] = spec.coords(idx);
                if in_all_silhouettes(spec.center(i, j, k), masks, cams) {
                    word |= 1 << b;
                }
            }
            word
        })
        .collect();
    let grid = VoxelGrid { spec, bits: words };
    if grid.count() == 0 {
        return Err(Error::AllCarved);
    }
    log::info!("carved {} of {} voxels", grid.count(), spec.len());
    Ok(grid)
}

/// Point closest, in the least-squares sense, to all optical axes.
fn axes_focus<T: Real>(cams: &[Camera<T>]) -> Vec3<T> {
    let mut a = Mat3::zero();
    let mut b = Vec3::zero();
    for c in cams {
        let d = c.rotation.transpose() * Vec3::new(T::zero(), T::zero(), T::one());
        let m = Mat3::identity() - d.outer(d);
        a = a + m;
        b += m * c.center();
    }
    let mean = cams.iter().fold(Vec3::zero(), |s, c| s + c.center()) / T::from_usize_lossy(cams.len());
    match a.inverse() {
        Some(inv) if a.det().abs() > T::lit(1e-9) * a.max_abs().powi(3) => inv * b,
        _ => mean,
    }
}

/// Object bounds: a coarse carve inside the ball around the focus of the
/// optical axes that reaches the farthest camera, then the occupied box
/// inflated by 5% of its extent plus one coarse voxel.
pub fn infer_bbox<T: Real>(masks: &[Mask], cams: &[Camera<T>]) -> Result<(Vec3<T>, Vec3<T>)> {
    check_views(masks, cams)?;
    let c = axes_focus(cams);
    let r = cams.iter().map(|cam| (cam.center() - c).norm()).fold(T::zero(), T::max);
    let spec = GridSpec::cubic(c - Vec3::splat(r), c + Vec3::splat(r), COARSE_RESOLUTION);
    let coarse = carve(masks, cams, spec)?;
    let (lo, hi) = coarse.occupied_bounds().ok_or(Error::AllCarved)?;
    let pad = (hi - lo) * T::lit(0.05) + spec.voxel_size();
    Ok((lo - pad, hi + pad))
}

/// Carves at `resolution` cells along the longest axis of the inferred bbox.
pub fn carve_hull<T: Real>(masks: &[Mask], cams: &[Camera<T>], resolution: usize) -> Result<VoxelGrid<T>> {
    let (lo, hi) = infer_bbox(masks, cams)?;
    carve(masks, cams, GridSpec::cubic(lo, hi, resolution))
}

/// Kuhn split of the unit cube into six tetrahedra around the 0-7 diagonal.
/// Corners are numbered by bits x=1, y=2, z=4.
const KUHN: [[usize; 4]; 6] =
    [[0, 1, 3, 7], [0, 1, 5, 7], [0, 2, 3, 7], [0, 2, 6, 7], [0, 4, 5, 7], [0, 4, 6, 7]];

/// Neighbourhood count threshold: a sample is inside when more than half
/// of its 3×3×3 block is occupied.
const ISO_COUNT: f64 = 13.5;

/// Occupied-voxel counts over each 3×3×3 block, on the grid padded by two
/// empty layers per side. Returns the counts and the padded dimensions.
fn block_counts<T: Real>(grid: &VoxelGrid<T>) -> (Vec<u8>, [usize; 3]) {
    let [nx, ny, nz] = grid.spec.res;
    let dims = [nx + 4, ny + 4, nz + 4];
    let idx = |a: usize, b: usize, c: usize| (c * dims[1] + b) * dims[0] + a;
    let mut field = vec![0u8; dims[0] * dims[1] * dims[2]];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if grid.occupied(i, j, k) {
                    field[idx(i + 2, j + 2, k + 2)] = 1;
                }
            }
        }
    }
    // separable box sums along x, y, z
    for axis in 0..3 {
        let stride = [1, dims[0], dims[0] * dims[1]][axis];
        let src = field.clone();
        for (n, out) in field.iter_mut().enumerate() {
            let coord = [n % dims[0], n / dims[0] % dims[1], n / (dims[0] * dims[1])][axis];
            let mut sum = src[n];
            if coord > 0 {
                sum += src[n - stride];
            }
            if coord + 1 < dims[axis] {
                sum += src[n + stride];
            }
            *out = sum;
        }
    }
    (field, dims)
}

/// Closed manifold surface of the occupied region: marching tetrahedra over
/// voxel centers on the 0.5 level of the occupancy averaged over 3×3×3
/// blocks, with linear interpolation along sign-changing edges. The padding
/// keeps the surface closed where voxels touch the grid border.
pub fn extract_surface<T: Real>(grid: &VoxelGrid<T>) -> Result<TriMesh<T>> {
    if grid.count() == 0 {
        return Err(Error::NoSurface);
    }
    let spec = &grid.spec;
    let (field, dims) = block_counts(grid);
    let lin = |a: usize, b: usize, c: usize| (c * dims[1] + b) * dims[0] + a;
    let s = spec.voxel_size();
    // padded sample (a,b,c) sits at voxel (a-2, b-2, c-2)
    let position = |a: usize, b: usize, c: usize| {
        let off = T::lit(1.5);
        spec.min
            + Vec3::new(
                (T::from_usize_lossy(a) - off) * s.x,
                (T::from_usize_lossy(b) - off) * s.y,
                (T::from_usize_lossy(c) - off) * s.z,
            )
    };
    let level = |n: usize| T::lit(field[n] as f64);
    let iso = T::lit(ISO_COUNT);
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut ids: HashMap<(usize, usize), u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    type P = (usize, usize, usize);
    let mut crossing = |p: P, q: P, vertices: &mut Vec<Vec3<T>>| -> u32 {
        let (ka, kb) = (lin(p.0, p.1, p.2), lin(q.0, q.1, q.2));
        *ids.entry((ka.min(kb), ka.max(kb))).or_insert_with(|| {
            let (fa, fb) = (level(ka), level(kb));
            let w = (iso - fa) / (fb - fa);
            let (pa, pb) = (position(p.0, p.1, p.2), position(q.0, q.1, q.2));
            vertices.push(pa + (pb - pa) * w);
            (vertices.len() - 1) as u32
        })
    };
    for c in 0..dims[2] - 1 {
        for b in 0..dims[1] - 1 {
            for a in 0..dims[0] - 1 {
                let corner = |n: usize| (a + (n & 1), b + (n >> 1 & 1), c + (n >> 2 & 1));
                let occ: [bool; 8] = std::array::from_fn(|n| {
                    let (x, y, z) = corner(n);
                    field[lin(x, y, z)] as f64 > ISO_COUNT
                });
                if occ.iter().all(|&o| o) || occ.iter().all(|&o| !o) {
                    continue;
                }
                for tet in KUHN {
                    let ins: Vec<usize> = tet.iter().copied().filter(|&n| occ[n]).collect();
                    let outs: Vec<usize> = tet.iter().copied().filter(|&n| !occ[n]).collect();
                    if ins.is_empty() || outs.is_empty() {
                        continue;
                    }
                    let mean = |set: &[usize]| {
                        set.iter().fold(Vec3::zero(), |acc, &n| {
                            let (x, y, z) = corner(n);
                            acc + position(x, y, z)
                        }) / T::from_usize_lossy(set.len())
                    };
                    let outward = mean(&outs) - mean(&ins);
                    let mut emit = |t: [u32; 3], vertices: &Vec<Vec3<T>>| {
                        let [p0, p1, p2] = t.map(|i| vertices[i as usize]);
                        if (p1 - p0).cross(p2 - p0).dot(outward) > T::zero() {
                            triangles.push(t);
                        } else {
                            triangles.push([t[0], t[2], t[1]]);
                        }
                    };
                    match (ins.len(), outs.len()) {
                        (1, 3) => {
                            let i = corner(ins[0]);
                            let t = [0, 1, 2].map(|k| crossing(i, corner(outs[k]), &mut vertices));
                            emit(t, &vertices);
                        }
                        (3, 1) => {
                            let o = corner(outs[0]);
                            let t = [0, 1, 2].map(|k| crossing(corner(ins[k]), o, &mut vertices));
                            emit(t, &vertices);
                        }
                        _ => {
                            let (i0, i1) = (corner(ins[0]), corner(ins[1]));
                            let (o0, o1) = (corner(outs[0]), corner(outs[1]));
                            let q = [
                                crossing(i0, o0, &mut vertices),
                                crossing(i0, o1, &mut vertices),
                                crossing(i1, o1, &mut vertices),
                                crossing(i1, o0, &mut vertices),
                            ];
                            emit([q[0], q[1], q[2]], &vertices);
                            emit([q[0], q[2], q[3]], &vertices);
                        }
                    }
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::NoSurface);
    }
    Ok(TriMesh::new(vertices, triangles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{simulate_view, Scene};
    use crate::geom::Vec2;
    use crate::mesh::shapes;
    use crate::rig::TurntableRig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn masks_of(mesh: TriMesh<f64>, views: usize) -> (Vec<Mask>, Vec<Camera<f64>>) {
        let rig = TurntableRig { views, ..TurntableRig::default() };
        let scene = Scene { gt_mesh: mesh, eta: 1.5, cameras: rig.cameras(), monitor: rig.monitor() };
        let masks = (0..views).map(|u| simulate_view(&scene, u).unwrap().1).collect();
        (masks, scene.cameras)
    }

    fn grid_from(spec: GridSpec<f64>, f: impl Fn(Vec3<f64>) -> bool) -> VoxelGrid<f64> {
        let mut g = VoxelGrid::empty(spec);
        for idx in 0..spec.len() {
            let [i, j, k] = spec.coords(idx);
            g.set(idx, f(spec.center(i, j, k)));
        }
        g
    }

    #[test]
    fn single_disc_view_carves_a_cone() {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 50.0, 50.0, 32, 32);
        let inside: Vec<bool> =
            (0..32 * 32).map(|k| (Vec2::new((k % 32) as f64 + 0.5, (k / 32) as f64 + 0.5) - Vec2::new(16.0, 16.0)).norm() < 8.0).collect();
        let mask = Mask::from_binary(32, 32, &inside);
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 24);
        let grid = carve(std::slice::from_ref(&mask), std::slice::from_ref(&cam), spec).unwrap();
        // oracle: pinhole projection written out by hand
        let expected = grid_from(spec, |p| {
            let z = 3.0 - p.z;
            let (u, v) = (50.0 * p.x / z + 16.0, -50.0 * p.y / z + 16.0);
            let (i, j) = (u.floor(), v.floor());
            (0.0..32.0).contains(&i) && (0.0..32.0).contains(&j) && (Vec2::new(i + 0.5, j + 0.5) - Vec2::new(16.0, 16.0)).norm() < 8.0
        });
        assert_eq!(grid, expected);
    }

    #[test]
    fn nothing_left_is_an_error() {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 50.0, 50.0, 8, 8);
        let mask = Mask::filled(8, 8, MaskValue::Outside);
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 8);
        assert!(matches!(carve(&[mask], &[cam], spec), Err(Error::AllCarved)));
    }

    #[test]
    fn sphere_hull_contains_the_sphere() {
        let (masks, cams) = masks_of(shapes::icosphere(4, 0.5), 8);
        let grid = carve_hull(&masks, &cams, 64).unwrap();
        let true_volume = shapes::icosphere(4, 0.5f64).signed_volume();
        let ratio = grid.volume() / true_volume;
        assert!(ratio >= 0.97 && ratio <= 1.35, "volume ratio {ratio}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.norm() < 0.45 {
                assert!(grid.contains_dilated(p, 0), "{p:?}");
            }
        }
    }

    #[test]
    fn more_views_never_add_voxels() {
        let (masks, cams) = masks_of(shapes::blob(3, 0.5), 12);
        let (lo, hi) = infer_bbox(&masks, &cams).unwrap();
        let spec = GridSpec::cubic(lo, hi, 40);
        let a = carve(&masks[..6], &cams[..6], spec).unwrap();
        let b = carve(&masks, &cams, spec).unwrap();
        assert!((0..spec.len()).all(|i| !b.get(i) || a.get(i)));
        assert!(b.count() < a.count());
    }

    #[test]
    fn cube_seen_from_four_sides() {
        let cams: Vec<Camera<f64>> = [(0.0, 4.0), (4.0, 0.0), (0.0, -4.0), (-4.0, 0.0)]
            .iter()
            .map(|&(x, z)| Camera::look_at(Vec3::new(x, 0.0, z), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 60.0, 60.0, 64, 64))
            .collect();
        let scene = Scene {
            gt_mesh: shapes::cube(1.0),
            eta: 1.5,
            cameras: cams.clone(),
            monitor: TurntableRig::default().monitor(),
        };
        let masks: Vec<Mask> = (0..4).map(|u| simulate_view(&scene, u).unwrap().1).collect();
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 40);
        let grid = carve(&masks, &cams, spec).unwrap();
        // each side camera sees the near face as its silhouette; a point is
        // in that camera's cone when its lateral offsets over its depth stay
        // within the near face's half-size over the near face's depth
        let in_cone = |lateral: [f64; 2], depth: f64| {
            let lim = 0.5 / 3.5;
            (lateral[0].abs() / depth - lim).max(lateral[1].abs() / depth - lim)
        };
        let margin = |p: Vec3<f64>| {
            [
                in_cone([p.x, p.y], 4.0 - p.z),
                in_cone([p.z, p.y], 4.0 - p.x),
                in_cone([p.x, p.y], 4.0 + p.z),
                in_cone([p.z, p.y], 4.0 + p.x),
            ]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut decided = 0;
        for idx in 0..spec.len() {
            let [i, j, k] = spec.coords(idx);
            let p = spec.center(i, j, k);
            // skip centers within 1.5 pixels of a cone boundary
            let m = margin(p) * 60.0;
            if m.abs() > 1.5 {
                decided += 1;
                assert_eq!(grid.get(idx), m < 0.0, "{p:?}");
            }
        }
        assert!(decided > spec.len() / 2);
        assert!(grid.contains_dilated(Vec3::new(0.0, 0.55, 0.0), 0));
    }

    #[test]
    fn block_surface_is_a_closed_sphere_topology() {
        let spec = GridSpec::cubic(Vec3::zero(), Vec3::splat(5.0), 5);
        let g = grid_from(spec, |p| (1.0..4.0).contains(&p.x) && (1.0..4.0).contains(&p.y) && (1.0..4.0).contains(&p.z));
        assert_eq!(g.count(), 27);
        let m = extract_surface(&g).unwrap();
        m.validate().unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn border_voxels_still_close() {
        let spec = GridSpec::cubic(Vec3::zero(), Vec3::splat(3.0), 3);
        let g = grid_from(spec, |_| true);
        let m = extract_surface(&g).unwrap();
        m.validate().unwrap();
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn sphere_area_at_64() {
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 64);
        let r = 0.7;
        let g = grid_from(spec, |p| p.norm() <= r);
        let m = extract_surface(&g).unwrap();
        m.validate().unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        let expected = 4.0 * std::f64::consts::PI * r * r;
        let area = m.surface_area();
        assert!((area / expected - 1.0).abs() < 0.1, "area {area} vs {expected}");
    }

    #[test]
    fn two_blobs_two_components() {
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 24);
        let g = grid_from(spec, |p| (p - Vec3::new(-0.5, 0.0, 0.0)).norm() < 0.3 || (p - Vec3::new(0.5, 0.0, 0.0)).norm() < 0.3);
        let m = extract_surface(&g).unwrap();
        m.validate().unwrap();
        assert_eq!(m.connected_components(), 2);
        assert_eq!(m.euler_characteristic(), 4);
    }

    #[test]
    fn empty_grid_has_no_surface() {
        let spec = GridSpec::cubic(Vec3::zero(), Vec3::splat(1.0), 4);
        assert!(matches!(extract_surface(&VoxelGrid::<f64>::empty(spec)), Err(Error::NoSurface)));
    }

    #[test]
    fn surface_hugs_the_occupied_region() {
        let spec = GridSpec::cubic(Vec3::splat(-1.0), Vec3::splat(1.0), 32);
        let g = grid_from(spec, |p| p.norm() <= 0.6);
        let m = extract_surface(&g).unwrap();
        let diag = spec.voxel_size().norm();
        for v in &m.vertices {
            assert!((v.norm() - 0.6).abs() < 1.5 * diag);
        }
    }
}

