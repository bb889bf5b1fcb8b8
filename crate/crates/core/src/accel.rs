//! Bounding-volume hierarchy over a triangle mesh: nearest ray hits and
//! closest-point queries.

use crate::geom::{Ray, Vec3};
use crate::mesh::TriMesh;
use crate::{Error, Real, Result};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T: Real> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self { min: Vec3::splat(T::infinity()), max: Vec3::splat(T::neg_infinity()) }
    }

    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn merge(&self, o: &Self) -> Self {
        Self { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn contains(&self, o: &Self) -> bool {
        (0..3).all(|k| self.min[k] <= o.min[k] && self.max[k] >= o.max[k])
    }

    /// Parametric entry distance of the ray into the box, if it overlaps
    /// `(t_min, t_max)`. The overlap test is padded by a relative margin so
    /// rounding in the slab distances never culls a triangle whose own
    /// intersection distance would be accepted.
    #[inline]
    fn hit(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_min: T, t_max: T) -> Option<T> {
        let mut lo = t_min;
        let mut hi = t_max;
        for k in 0..3 {
            let t0 = (self.min[k] - origin[k]) * inv_dir[k];
            let t1 = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN (0 * inf) leaves the interval untouched
            if near > lo {
                lo = near;
            }
            if far < hi {
                hi = far;
            }
        }
        let pad = T::lit(1e-9) * (lo.abs() + hi.abs().min(lo.abs() + T::one()));
        (lo <= hi + pad).then_some(lo)
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    fn distance_squared(&self, p: Vec3<T>) -> T {
        let mut d = T::zero();
        for k in 0..3 {
            let e = (self.min[k] - p[k]).max(p[k] - self.max[k]).max(T::zero());
            d = d + e * e;
        }
        d
    }
}

#[derive(Clone, Debug)]
struct Node<T: Real> {
    bounds: Aabb<T>,
    /// Leaf: range into `order`. Inner: `start` is the left child, the right
    /// child follows at `start + 1`... see `right`.
    start: u32,
    count: u32,
    right: u32,
}

/// Ray hit on a mesh triangle. Barycentrics weight the triangle's vertices
/// in winding order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<T: Real> {
    pub face: u32,
    pub t: T,
    pub bary: [T; 3],
}

/// Closest point on the mesh surface to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Closest<T: Real> {
    pub face: u32,
    pub point: Vec3<T>,
    pub distance: T,
}

/// Immutable BVH built by median splits of triangle centroids.
#[derive(Clone, Debug)]
pub struct Bvh<T: Real> {
    nodes: Vec<Node<T>>,
    /// Triangle ids in leaf order.
    order: Vec<u32>,
    tris: Vec<[Vec3<T>; 3]>,
}

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &TriMesh<T>) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let tris: Vec<[Vec3<T>; 3]> = (0..mesh.triangles.len()).map(|f| mesh.corners(f)).collect();
        let centroids: Vec<Vec3<T>> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / T::lit(3.0)).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        Self::build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        Ok(Self { nodes, order, tris })
    }

    fn build_node(
        tris: &[[Vec3<T>; 3]],
        centroids: &[Vec3<T>],
        order: &mut [u32],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node<T>>,
    ) -> u32 {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &f in &order[start..end] {
            for p in tris[f as usize] {
                bounds.grow(p);
            }
            cbounds.grow(centroids[f as usize]);
        }
        let id = nodes.len() as u32;
        nodes.push(Node { bounds, start: start as u32, count: (end - start) as u32, right: 0 });
        let extent = cbounds.max - cbounds.min;
        if end - start <= LEAF_SIZE || !(extent.norm() > T::zero()) {
            return id;
        }
        let axis = extent.max_abs_axis();
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let left = Self::build_node(tris, centroids, order, start, mid, nodes);
        let right = Self::build_node(tris, centroids, order, mid, end, nodes);
        debug_assert_eq!(left, id + 1);
        let n = &mut nodes[id as usize];
        n.count = 0;
        n.start = left;
        n.right = right;
        id
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes[0].bounds
    }

    /// Nearest hit with `t > t_min`. Ties in `t` go to the lower face id.
    pub fn first_hit(&self, ray: &Ray<T>, t_min: T) -> Option<Hit<T>> {
        let inv = Vec3::new(T::one() / ray.dir.x, T::one() / ray.dir.y, T::one() / ray.dir.z);
        let pre = WatertightRay::new(ray);
        let mut best: Option<Hit<T>> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let t_max = best.map_or(T::infinity(), |b| b.t);
            if node.bounds.hit(ray.origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    if let Some((t, bary)) = pre.intersect(&self.tris[f as usize]) {
                        if t > t_min && best.map_or(true, |b| t < b.t || (t == b.t && f < b.face)) {
                            best = Some(Hit { face: f, t, bary });
                        }
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let tl = self.nodes[l as usize].bounds.hit(ray.origin, inv, t_min, t_max);
                let tr = self.nodes[r as usize].bounds.hit(ray.origin, inv, t_min, t_max);
                // visit the nearer child first
                match (tl, tr) {
                    (Some(a), Some(b)) if a <= b => stack.extend([r, l]),
                    (Some(_), Some(_)) => stack.extend([l, r]),
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// `true` if anything is hit with `t > t_min`.
    pub fn any_hit(&self, ray: &Ray<T>, t_min: T) -> bool {
        self.first_hit(ray, t_min).is_some()
    }

    /// Closest surface point to `p`.
    pub fn closest_point(&self, p: Vec3<T>) -> Closest<T> {
        let mut best = Closest { face: 0, point: p, distance: T::infinity() };
        let mut best_d2 = T::infinity();
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.bounds.distance_squared(p) > best_d2 {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let q = closest_point_on_triangle(p, &self.tris[f as usize]);
                    let d2 = (q - p).norm_squared();
                    if d2 < best_d2 || (d2 == best_d2 && f < best.face) {
                        best_d2 = d2;
                        best = Closest { face: f, point: q, distance: d2.sqrt() };
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let dl = self.nodes[l as usize].bounds.distance_squared(p);
                let dr = self.nodes[r as usize].bounds.distance_squared(p);
                if dl <= dr {
                    stack.extend([r, l]);
                } else {
                    stack.extend([l, r]);
                }
            }
        }
        best
    }

    /// Structural self-check used by tests: every triangle sits in exactly
    /// one leaf and children nest inside their parents.
    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![0u32; self.tris.len()];
        let mut ok = true;
        for n in &self.nodes {
            if n.count > 0 {
                for &f in &self.order[n.start as usize..(n.start + n.count) as usize] {
                    seen[f as usize] += 1;
                    ok &= self.tris[f as usize].iter().all(|&p| {
                        let mut b = n.bounds;
                        b.grow(p);
                        b == n.bounds
                    });
                }
            } else {
                ok &= n.bounds.contains(&self.nodes[n.start as usize].bounds);
                ok &= n.bounds.contains(&self.nodes[n.right as usize].bounds);
            }
        }
        ok && seen.iter().all(|&c| c == 1)
    }
}

/// Per-ray constants of the watertight ray/triangle test: the ray is
/// sheared so it points down +z, and edge functions are evaluated in the
/// projected 2D frame, so shared edges are classified identically for both
/// adjacent triangles.
pub struct WatertightRay<T: Real> {
    origin: Vec3<T>,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: T,
    sy: T,
    sz: T,
}

impl<T: Real> WatertightRay<T> {
    pub fn new(ray: &Ray<T>) -> Self {
        let kz = ray.dir.max_abs_axis();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if ray.dir[kz] < T::zero() {
            std::mem::swap(&mut kx, &mut ky);
        }
        let dz = ray.dir[kz];
        Self { origin: ray.origin, kx, ky, kz, sx: ray.dir[kx] / dz, sy: ray.dir[ky] / dz, sz: T::one() / dz }
    }

    /// Two-sided intersection; returns `(t, barycentrics)`. Edge functions
    /// equal to zero count as inside, degenerate determinants as a miss.
    #[inline]
    pub fn intersect(&self, tri: &[Vec3<T>; 3]) -> Option<(T, [T; 3])> {
        let a = tri[0] - self.origin;
        let b = tri[1] - self.origin;
        let c = tri[2] - self.origin;
        let (ax, ay) = (a[self.kx] - self.sx * a[self.kz], a[self.ky] - self.sy * a[self.kz]);
        let (bx, by) = (b[self.kx] - self.sx * b[self.kz], b[self.ky] - self.sy * b[self.kz]);
        let (cx, cy) = (c[self.kx] - self.sx * c[self.kz], c[self.ky] - self.sy * c[self.kz]);
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        let zero = T::zero();
        if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
            return None;
        }
        let det = u + v + w;
        if det == zero || !det.is_finite() {
            return None;
        }
        let (az, bz, cz) = (self.sz * a[self.kz], self.sz * b[self.kz], self.sz * c[self.kz]);
        let t = (u * az + v * bz + w * cz) / det;
        if !t.is_finite() {
            return None;
        }
        Some((t, [u / det, v / det, w / det]))
    }
}

/// Nearest hit by testing every triangle; reference for the BVH.
pub fn brute_force_first_hit<T: Real>(mesh: &TriMesh<T>, ray: &Ray<T>, t_min: T) -> Option<Hit<T>> {
    let pre = WatertightRay::new(ray);
    let mut best: Option<Hit<T>> = None;
    for f in 0..mesh.triangles.len() {
        if let Some((t, bary)) = pre.intersect(&mesh.corners(f)) {
            if t > t_min && best.map_or(true, |b| t < b.t) {
                best = Some(Hit { face: f as u32, t, bary });
            }
        }
    }
    best
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, tri: &[Vec3<T>; 3]) -> Vec3<T> {
    let [a, b, c] = *tri;
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
