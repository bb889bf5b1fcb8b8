//! Incremental isotropic remeshing: split, collapse, valence flips,
//! tangential relaxation and projection back onto the input surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::Bvh;
use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::{Error, Real, Result};

/// Fraction of the bounding-box diagonal used as the finest target length.
pub const FINEST_FRACTION: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct RemeshParams<T> {
    pub target_len: T,
    /// Maximum allowed distance between input and output surfaces.
    pub projection_bound: T,
    pub max_iterations: usize,
}

impl<T: Real> RemeshParams<T> {
    /// Parameters for target `target_len` on a mesh with bounding-box
    /// diagonal `diaglen`.
    pub fn new(target_len: T, diaglen: T) -> Self {
        Self { target_len, projection_bound: T::lit(FINEST_FRACTION) * diaglen, max_iterations: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_len > T::zero()) || !(self.projection_bound > T::zero()) {
            return Err(Error::Invalid("remesh target length and projection bound must be positive".into()));
        }
        Ok(())
    }
}

/// Target edge length of stage `l` out of `stages`: `stages · t_min / l`
/// with `t_min = 0.005 · diaglen`.
pub fn target_length<T: Real>(l: usize, stages: usize, diaglen: T) -> T {
    assert!(l >= 1 && l <= stages, "stage {l} outside 1..={stages}");
    T::from_usize_lossy(stages) * T::lit(FINEST_FRACTION) * diaglen / T::from_usize_lossy(l)
}

struct Work<'a, T: Real> {
    pos: Vec<Vec3<T>>,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    vf: Vec<Vec<u32>>,
    vert_alive: Vec<bool>,
    alive_verts: usize,
    min_area2: T,
    surface: &'a Bvh<T>,
}

impl<'a, T: Real> Work<'a, T> {
    fn new(mesh: &TriMesh<T>, surface: &'a Bvh<T>) -> Self {
        let mut vf = vec![Vec::new(); mesh.vertices.len()];
        for (f, t) in mesh.triangles.iter().enumerate() {
            for &v in t {
                vf[v as usize].push(f as u32);
            }
        }
        let vert_alive: Vec<bool> = vf.iter().map(|l| !l.is_empty()).collect();
        let alive_verts = vert_alive.iter().filter(|&&a| a).count();
        let d = mesh.diaglen();
        // compare doubled areas: |n_raw| > 2e-12 · diag²
        let min_area2 = T::lit(2e-12) * d * d;
        Self {
            pos: mesh.vertices.clone(),
            faces: mesh.triangles.clone(),
            face_alive: vec![true; mesh.triangles.len()],
            vf,
            vert_alive,
            alive_verts,
            min_area2,
            surface,
        }
    }

    fn project(&self, p: Vec3<T>) -> Vec3<T> {
        self.surface.closest_point(p).point
    }

    fn raw_normal(&self, t: [u32; 3]) -> Vec3<T> {
        let [a, b, c] = t.map(|i| self.pos[i as usize]);
        (b - a).cross(c - a)
    }

    /// Faces traversing `a -> b` and `b -> a`.
    fn edge_faces(&self, a: u32, b: u32) -> Option<(u32, u32)> {
        let mut ab = None;
        let mut ba = None;
        for &f in &self.vf[a as usize] {
            let t = self.faces[f as usize];
            let k = t.iter().position(|&v| v == a)?;
            if t[(k + 1) % 3] == b {
                ab = Some(f);
            } else if t[(k + 2) % 3] == b {
                ba = Some(f);
            }
        }
        Some((ab?, ba?))
    }

    fn opposite(&self, f: u32, a: u32, b: u32) -> u32 {
        self.faces[f as usize].into_iter().find(|&v| v != a && v != b).expect("third vertex")
    }

    fn neighbors(&self, a: u32) -> Vec<u32> {
        let mut n: Vec<u32> =
            self.vf[a as usize].iter().flat_map(|&f| self.faces[f as usize]).filter(|&v| v != a).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn valence(&self, a: u32) -> usize {
        self.vf[a as usize].len()
    }

    fn len(&self, a: u32, b: u32) -> T {
        (self.pos[a as usize] - self.pos[b as usize]).norm()
    }

    fn edges(&self) -> Vec<[u32; 2]> {
        let mut e = Vec::with_capacity(self.faces.len() * 3 / 2);
        for (f, t) in self.faces.iter().enumerate() {
            if !self.face_alive[f] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    e.push([a, b]);
                }
            }
        }
        e
    }

    fn replace_in(list: &mut Vec<u32>, old: u32, new: u32) {
        if let Some(x) = list.iter_mut().find(|x| **x == old) {
            *x = new;
        }
    }

    fn remove_from(list: &mut Vec<u32>, f: u32) {
        list.retain(|&x| x != f);
    }

    fn split(&mut self, a: u32, b: u32) -> Option<u32> {
        let (f0, f1) = self.edge_faces(a, b)?;
        let c = self.opposite(f0, a, b);
        let d = self.opposite(f1, a, b);
        let m = self.pos.len() as u32;
        let mid = (self.pos[a as usize] + self.pos[b as usize]) * T::half();
        self.pos.push(self.project(mid));
        self.vert_alive.push(true);
        self.alive_verts += 1;
        let g0 = self.faces.len() as u32;
        let g1 = g0 + 1;
        self.faces[f0 as usize] = [a, m, c];
        self.faces[f1 as usize] = [b, m, d];
        self.faces.push([m, b, c]);
        self.faces.push([m, a, d]);
        self.face_alive.extend([true, true]);
        Self::replace_in(&mut self.vf[a as usize], f1, g1);
        Self::replace_in(&mut self.vf[b as usize], f0, g0);
        self.vf[c as usize].push(g0);
        self.vf[d as usize].push(g1);
        self.vf.push(vec![f0, g0, f1, g1]);
        Some(m)
    }

    /// Merges `b` into `a` at the projected midpoint, if every check passes.
    fn collapse(&mut self, a: u32, b: u32, max_len: T) -> bool {
        if self.alive_verts <= 4 {
            return false;
        }
        let Some((f0, f1)) = self.edge_faces(a, b) else { return false };
        let c = self.opposite(f0, a, b);
        let d = self.opposite(f1, a, b);
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<u32> = na.iter().copied().filter(|v| nb.binary_search(v).is_ok()).collect();
        let mut cd = [c, d];
        cd.sort_unstable();
        if common != cd {
            return false;
        }
        let p = self.project((self.pos[a as usize] + self.pos[b as usize]) * T::half());
        if na.iter().chain(&nb).any(|&n| n != a && n != b && (self.pos[n as usize] - p).norm() >= max_len) {
            return false;
        }
        for &f in self.vf[a as usize].iter().chain(&self.vf[b as usize]) {
            if f == f0 || f == f1 {
                continue;
            }
            let t = self.faces[f as usize];
            let old = self.raw_normal(t);
            let [x, y, z] = t.map(|v| if v == a || v == b { p } else { self.pos[v as usize] });
            let new = (y - x).cross(z - x);
            if !(new.norm() > self.min_area2) || !(new.dot(old) > T::zero()) {
                return false;
            }
        }
        for f in [f0, f1] {
            self.face_alive[f as usize] = false;
            for v in self.faces[f as usize] {
                Self::remove_from(&mut self.vf[v as usize], f);
            }
        }
        let moved = std::mem::take(&mut self.vf[b as usize]);
        for &f in &moved {
            for v in self.faces[f as usize].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
        }
        self.vf[a as usize].extend(moved);
        self.vert_alive[b as usize] = false;
        self.alive_verts -= 1;
        self.pos[a as usize] = p;
        true
    }

    /// Flips edge `a-b` when that lowers the valence deviation from 6.
    fn flip_if_better(&mut self, a: u32, b: u32) -> bool {
        let Some((f0, f1)) = self.edge_faces(a, b) else { return false };
        let c = self.opposite(f0, a, b);
        let d = self.opposite(f1, a, b);
        if c == d || self.valence(a) <= 3 || self.valence(b) <= 3 {
            return false;
        }
        let dev = |v: usize| (v as i64 - 6).abs();
        let (va, vb, vc, vd) = (self.valence(a), self.valence(b), self.valence(c), self.valence(d));
        let before = dev(va) + dev(vb) + dev(vc) + dev(vd);
        let after = dev(va - 1) + dev(vb - 1) + dev(vc + 1) + dev(vd + 1);
        if after >= before {
            return false;
        }
        if self.vf[c as usize].iter().any(|&f| self.faces[f as usize].contains(&d)) {
            return false;
        }
        let n0 = self.raw_normal(self.faces[f0 as usize]);
        let n1 = self.raw_normal(self.faces[f1 as usize]);
        // keep flips on nearly flat patches so the surface shape is kept
        if n0.dot(n1) < T::lit(0.5) * n0.norm() * n1.norm() {
            return false;
        }
        let t0 = [a, d, c];
        let t1 = [d, b, c];
        let m0 = self.raw_normal(t0);
        let m1 = self.raw_normal(t1);
        let old = n0 + n1;
        if !(m0.norm() > self.min_area2 && m1.norm() > self.min_area2) || m0.dot(m1) <= T::zero() || m0.dot(old) <= T::zero() || m1.dot(old) <= T::zero() {
            return false;
        }
        self.faces[f0 as usize] = t0;
        self.faces[f1 as usize] = t1;
        Self::remove_from(&mut self.vf[a as usize], f1);
        Self::remove_from(&mut self.vf[b as usize], f0);
        self.vf[c as usize].push(f1);
        self.vf[d as usize].push(f0);
        true
    }

    fn split_long(&mut self, max_len: T) {
        for _ in 0..32 {
            let mut changed = false;
            for [a, b] in self.edges() {
                if self.len(a, b) > max_len && self.split(a, b).is_some() {
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn collapse_short(&mut self, min_len: T, max_len: T) {
        for _ in 0..8 {
            let mut changed = false;
            for [a, b] in self.edges() {
                if self.vert_alive[a as usize]
                    && self.vert_alive[b as usize]
                    && self.len(a, b) < min_len
                    && self.collapse(a, b, max_len)
                {
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn equalize_valences(&mut self) {
        for [a, b] in self.edges() {
            self.flip_if_better(a, b);
        }
    }

    fn relax(&mut self) {
        let targets: Vec<Option<Vec3<T>>> = (0..self.pos.len())
            .into_par_iter()
            .map(|v| {
                if !self.vert_alive[v] {
                    return None;
                }
                let p = self.pos[v];
                let mut area = T::zero();
                let mut centroid = Vec3::zero();
                let mut normal = Vec3::zero();
                for &f in &self.vf[v] {
                    let t = self.faces[f as usize];
                    let n = self.raw_normal(t);
                    let w = n.norm();
                    let c = t.iter().fold(Vec3::zero(), |s, &i| s + self.pos[i as usize]) / T::lit(3.0);
                    centroid += c * w;
                    area = area + w;
                    normal += n;
                }
                if !(area > T::zero()) || !(normal.norm() > T::zero()) {
                    return None;
                }
                let n = normal.normalized();
                let g = centroid / area - p;
                Some(self.project(p + g - n * g.dot(n)))
            })
            .collect();
        for (v, target) in targets.into_iter().enumerate() {
            let Some(q) = target else { continue };
            let old = self.pos[v];
            let ok = self.vf[v].iter().all(|&f| {
                let t = self.faces[f as usize];
                let before = self.raw_normal(t);
                let [x, y, z] = t.map(|i| if i as usize == v { q } else { self.pos[i as usize] });
                let after = (y - x).cross(z - x);
                after.norm() > self.min_area2 && after.dot(before) > T::zero()
            });
            if ok {
                self.pos[v] = q;
            } else {
                self.pos[v] = old;
            }
        }
    }

    /// Splits edges whose midpoints sit farther than `bound` from the input,
    /// plus the longest edge of each output face whose centroid is too far
    /// or which is nearest to an input vertex the output misses.
    fn refine_to_bound(&mut self, input: &TriMesh<T>, bound: T) -> bool {
        let edges = self.edges();
        let mut todo: Vec<[u32; 2]> = edges
            .par_iter()
            .copied()
            .filter(|&[a, b]| {
                let mid = (self.pos[a as usize] + self.pos[b as usize]) * T::half();
                self.surface.closest_point(mid).distance > bound
            })
            .collect();
        let faces: Vec<u32> = (0..self.faces.len() as u32).filter(|&f| self.face_alive[f as usize]).collect();
        let mut far_faces: Vec<[u32; 3]> = faces
            .par_iter()
            .map(|&f| self.faces[f as usize])
            .filter(|t| {
                let c = t.iter().fold(Vec3::zero(), |s, &i| s + self.pos[i as usize]) / T::lit(3.0);
                self.surface.closest_point(c).distance > bound
            })
            .collect();
        let current = self.snapshot();
        if let Ok(out_bvh) = Bvh::build(&current) {
            let missed: Vec<u32> = input
                .vertices
                .par_iter()
                .filter_map(|&p| {
                    let c = out_bvh.closest_point(p);
                    (c.distance > bound).then_some(c.face)
                })
                .collect();
            far_faces.extend(missed.into_iter().map(|f| current.triangles[f as usize]));
        }
        for t in far_faces {
            let k = (0..3)
                .max_by(|&i, &j| {
                    let li = self.len(t[i], t[(i + 1) % 3]);
                    let lj = self.len(t[j], t[(j + 1) % 3]);
                    li.partial_cmp(&lj).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0);
            let (a, b) = (t[k], t[(k + 1) % 3]);
            todo.push([a.min(b), a.max(b)]);
        }
        todo.sort_unstable();
        todo.dedup();
        let mut changed = false;
        for [a, b] in todo {
            changed |= self.split(a, b).is_some();
        }
        changed
    }

    /// Current mesh with the original vertex numbering and dead faces
    /// dropped. Face ids follow the alive order.
    fn snapshot(&self) -> TriMesh<T> {
        let triangles = self.faces.iter().zip(&self.face_alive).filter(|(_, &a)| a).map(|(t, _)| *t).collect();
        TriMesh::new(self.pos.clone(), triangles)
    }
}

/// Remeshes toward uniform edges of length `params.target_len`, keeping
/// vertices on the input surface.
pub fn remesh<T: Real>(mesh: &TriMesh<T>, params: &RemeshParams<T>) -> Result<TriMesh<T>> {
    params.validate()?;
    mesh.validate().map_err(|e| Error::RemeshFailed(format!("input rejected: {e}")))?;
    let surface = Bvh::build(mesh)?;
    let mut w = Work::new(mesh, &surface);
    let t = params.target_len;
    let max_len = T::lit(4.0 / 3.0) * t;
    let min_len = T::lit(0.8) * t;
    for _ in 0..params.max_iterations {
        w.split_long(max_len);
        w.collapse_short(min_len, max_len);
        w.equalize_valences();
        w.relax();
    }
    for _ in 0..4 {
        if !w.refine_to_bound(mesh, params.projection_bound) {
            break;
        }
    }
    let mut out = w.snapshot();
    out.compact();
    out.validate().map_err(|e| Error::RemeshFailed(e.to_string()))?;
    if mesh.euler_characteristic() != out.euler_characteristic() {
        return Err(Error::RemeshFailed("topology changed".into()));
    }
    Ok(out)
}
