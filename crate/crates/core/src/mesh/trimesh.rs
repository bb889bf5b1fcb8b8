use std::collections::HashMap;

use rand::Rng;

use crate::geom::Vec3;
use crate::{Error, Real, Result};

/// Indexed triangle surface. The vertices are the optimization variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh<T: Real> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
}

/// Edge adjacency of a closed manifold mesh.
#[derive(Clone, Debug)]
pub struct Topology {
    /// Undirected edges, stored with `e[0] < e[1]`.
    pub edges: Vec<[u32; 2]>,
    /// The two faces sharing each edge; the first traverses it as
    /// `e[0] -> e[1]`.
    pub edge_faces: Vec<[u32; 2]>,
    /// Faces incident to each vertex.
    pub vertex_faces: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats<T> {
    /// Length of the bounding-box diagonal.
    pub diaglen: T,
    /// Mean edge length.
    pub edgelen: T,
}

impl<T: Real> TriMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.triangles.is_empty()
    }

    #[inline]
    pub fn corners(&self, f: usize) -> [Vec3<T>; 3] {
        self.triangles[f].map(|i| self.vertices[i as usize])
    }

    /// `(v1 - v0) × (v2 - v0)`: twice the area times the unit normal.
    #[inline]
    pub fn face_normal_raw(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(f);
        (b - a).cross(c - a)
    }

    /// Unit normal following the winding order.
    pub fn face_normal(&self, f: usize) -> Result<Vec3<T>> {
        let n = self.face_normal_raw(f);
        let len = n.norm();
        if !(len > T::zero()) {
            return Err(Error::DegenerateFace(f));
        }
        Ok(n / len)
    }

    pub fn face_area(&self, f: usize) -> T {
        self.face_normal_raw(f).norm() * T::half()
    }

    pub fn face_centroid(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(f);
        (a + b + c) / T::lit(3.0)
    }

    pub fn bbox(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }

    pub fn diaglen(&self) -> T {
        self.bbox().map_or(T::zero(), |(lo, hi)| (hi - lo).norm())
    }

    /// Bounding-box diagonal and mean edge length.
    pub fn stats(&self) -> Result<MeshStats<T>> {
        if self.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let edges = self.unique_edges();
        let total: T = edges
            .iter()
            .map(|e| (self.vertices[e[0] as usize] - self.vertices[e[1] as usize]).norm())
            .sum();
        Ok(MeshStats { diaglen: self.diaglen(), edgelen: total / T::from_usize_lossy(edges.len()) })
    }

    /// Undirected edges in first-seen order, each stored low index first.
    pub fn unique_edges(&self) -> Vec<[u32; 2]> {
        let mut seen = HashMap::with_capacity(self.triangles.len() * 2);
        let mut out = Vec::with_capacity(self.triangles.len() * 3 / 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Builds edge adjacency, failing unless every edge has exactly two
    /// incident faces traversing it in opposite directions.
    pub fn topology(&self) -> Result<Topology> {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 3);
        for (f, t) in self.triangles.iter().enumerate() {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::NonManifold(format!("face {f} repeats a vertex")));
            }
            if t.iter().any(|&v| v as usize >= self.vertices.len()) {
                return Err(Error::NonManifold(format!("face {f} indexes past the vertex array")));
            }
            for k in 0..3 {
                let key = (t[k], t[(k + 1) % 3]);
                if directed.insert(key, f as u32).is_some() {
                    return Err(Error::NonManifold(format!("directed edge {key:?} used twice")));
                }
            }
        }
        let mut edges = Vec::with_capacity(directed.len() / 2);
        let mut edge_faces = Vec::with_capacity(directed.len() / 2);
        for (f, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    let Some(&g) = directed.get(&(b, a)) else {
                        return Err(Error::NonManifold(format!("edge ({a}, {b}) has one incident face")));
                    };
                    edges.push([a, b]);
                    edge_faces.push([f as u32, g]);
                } else if !directed.contains_key(&(b, a)) {
                    return Err(Error::NonManifold(format!("edge ({b}, {a}) has one incident face")));
                }
            }
        }
        let mut vertex_faces = vec![Vec::new(); self.vertices.len()];
        for (f, t) in self.triangles.iter().enumerate() {
            for &v in t {
                vertex_faces[v as usize].push(f as u32);
            }
        }
        Ok(Topology { edges, edge_faces, vertex_faces })
    }

    /// Checks closed manifoldness and face non-degeneracy
    /// (area > 1e-12 · diaglen²).
    pub fn validate(&self) -> Result<Topology> {
        if self.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("vertex {i} is not finite")));
        }
        let topo = self.topology()?;
        let min_area = T::lit(1e-12) * self.diaglen() * self.diaglen();
        if let Some(f) = (0..self.triangles.len()).find(|&f| !(self.face_area(f) > min_area)) {
            return Err(Error::DegenerateFace(f));
        }
        Ok(topo)
    }

    /// `V - E + F` counting only referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.unique_edges().len() as i64 + self.triangles.len() as i64
    }

    /// Number of face-connected components.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, t[0] as usize), find(&mut parent, t[k] as usize));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = self.triangles.iter().map(|t| find(&mut parent, t[0] as usize)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Signed enclosed volume; positive for outward-facing winding.
    pub fn signed_volume(&self) -> T {
        (0..self.triangles.len())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(b.cross(c))
            })
            .sum::<T>()
            / T::lit(6.0)
    }

    pub fn surface_area(&self) -> T {
        (0..self.triangles.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3<T>> {
        let mut n = vec![Vec3::zero(); self.vertices.len()];
        for (f, t) in self.triangles.iter().enumerate() {
            let fnrm = self.face_normal_raw(f);
            for &v in t {
                n[v as usize] += fnrm;
            }
        }
        n.into_iter()
            .map(|v| {
                let len = v.norm();
                if len > T::zero() {
                    v / len
                } else {
                    v
                }
            })
            .collect()
    }

    /// Reverses every face's winding.
    pub fn flip_orientation(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    /// Drops vertices no face references, renumbering the rest.
    pub fn compact(&mut self) {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::with_capacity(self.vertices.len());
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                if remap[*v as usize] == u32::MAX {
                    remap[*v as usize] = verts.len() as u32;
                    verts.push(self.vertices[*v as usize]);
                }
                *v = remap[*v as usize];
            }
        }
        self.vertices = verts;
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        Self { vertices: self.vertices.iter().map(|&v| f(v)).collect(), triangles: self.triangles.clone() }
    }

    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh { vertices: self.vertices.iter().map(|v| v.cast()).collect(), triangles: self.triangles.clone() }
    }

    /// `n` points drawn uniformly by area over the surface.
    pub fn sample_surface(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec3<T>> {
        let mut cdf = Vec::with_capacity(self.triangles.len());
        let mut acc = 0.0;
        for f in 0..self.triangles.len() {
            acc += self.face_area(f).as_f64();
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Vec::new();
        }
        (0..n)
            .map(|_| {
                let x = rng.gen::<f64>() * acc;
                let f = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
                let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
                if a + b > 1.0 {
                    (a, b) = (1.0 - a, 1.0 - b);
                }
                let [p0, p1, p2] = self.corners(f);
                p0 + (p1 - p0) * T::lit(a) + (p2 - p0) * T::lit(b)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use rand::{Rng, SeedableRng};

    fn tri() -> TriMesh<f64> {
        TriMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
    }

    #[test]
    fn normal_follows_winding() {
        let mut m = tri();
        assert_eq!(m.face_normal(0).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        m.flip_orientation();
        assert_eq!(m.face_normal(0).unwrap(), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn degenerate_face_errors() {
        let m = TriMesh::new(vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)], vec![[0, 1, 2]]);
        assert!(matches!(m.face_normal(0), Err(Error::DegenerateFace(0))));
    }

    #[test]
    fn normal_matches_cross_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p: Vec<Vec3<f64>> =
                (0..3).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let m = TriMesh::new(p.clone(), vec![[0, 1, 2]]);
            let e1 = [p[1].x - p[0].x, p[1].y - p[0].y, p[1].z - p[0].z];
            let e2 = [p[2].x - p[0].x, p[2].y - p[0].y, p[2].z - p[0].z];
            let c = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
            let l = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            let n = m.face_normal(0).unwrap();
            assert!((n.x - c[0] / l).abs() < 1e-12 && (n.y - c[1] / l).abs() < 1e-12 && (n.z - c[2] / l).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_stats() {
        let cube = shapes::cube(1.0f64);
        let s = cube.stats().unwrap();
        assert!((s.diaglen - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(TriMesh::<f64>::default().stats(), Err(Error::EmptyMesh)));
    }

    #[test]
    fn equilateral_pair_edge_length() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, h, 0.0), Vec3::new(0.5, -h, 0.0)],
            vec![[0, 1, 2], [1, 0, 3]],
        );
        assert!((m.stats().unwrap().edgelen - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_edge_matches_brute_force() {
        let m = shapes::icosphere(2, 1.0f64).map_vertices(|v| v * (1.0 + 0.1 * v.x * v.y));
        let mut sum = 0.0;
        let mut count = 0;
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                // each undirected edge counted once: from the face listing it low->high
                if a < b {
                    sum += (m.vertices[a as usize] - m.vertices[b as usize]).norm();
                    count += 1;
                }
            }
        }
        assert!((m.stats().unwrap().edgelen - sum / count as f64).abs() < 1e-14);
    }

    #[test]
    fn topology_of_closed_mesh() {
        let m = shapes::icosphere(1, 1.0f64);
        let topo = m.validate().unwrap();
        assert_eq!(topo.edges.len(), 120);
        for (e, f) in topo.edges.iter().zip(&topo.edge_faces) {
            let t0 = m.triangles[f[0] as usize];
            assert!((0..3).any(|k| t0[k] == e[0] && t0[(k + 1) % 3] == e[1]));
        }
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let mut m = shapes::icosphere(1, 1.0f64);
        m.triangles.pop();
        assert!(matches!(m.topology(), Err(Error::NonManifold(_))));
    }
}
