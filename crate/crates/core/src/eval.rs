//! Evaluation: rigid ICP alignment, per-vertex surface distance, error
//! reports and the two-refraction coverage of a mesh.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::Bvh;
use crate::difftrace::find_paths;
use crate::geom::{Mat3, Vec3};
use crate::mesh::io::write_ply;
use crate::mesh::TriMesh;
use crate::optim::Observations;
use crate::rig::monitor_in_world;
use crate::{Error, Real, Result};

/// `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct RigidTransform<T: Real> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zero() }
    }

    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Self {
        Self { rotation, translation }
    }

    #[inline]
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &Self) -> Self {
        Self { rotation: self.rotation * first.rotation, translation: self.apply(first.translation) }
    }

    pub fn apply_mesh(&self, mesh: &TriMesh<T>) -> TriMesh<T> {
        mesh.map_vertices(|p| self.apply(p))
    }

    /// Homogeneous 4×4 matrix, row-major.
    pub fn to_matrix(&self) -> [[T; 4]; 4] {
        let (r, t) = (&self.rotation.rows, self.translation);
        [
            [r[0].x, r[0].y, r[0].z, t.x],
            [r[1].x, r[1].y, r[1].z, t.y],
            [r[2].x, r[2].y, r[2].z, t.z],
            [T::zero(), T::zero(), T::zero(), T::one()],
        ]
    }

    /// Largest absolute entry difference of the 4×4 matrices.
    pub fn max_difference(&self, o: &Self) -> T {
        let (a, b) = (self.to_matrix(), o.to_matrix());
        let mut d = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((a[i][j] - b[i][j]).abs());
            }
        }
        d
    }
}

/// Outcome of [`icp_align`].
#[derive(Clone, Debug)]
pub struct IcpResult<T: Real> {
    /// Maps the source onto the target.
    pub transform: RigidTransform<T>,
    /// Mean source-to-target distance before the first and after every
    /// accepted iteration; non-increasing.
    pub objective: Vec<T>,
    /// `false` when `max_iters` ran out while the objective still moved.
    pub converged: bool,
}

/// Symmetric 4×4 eigen-decomposition by cyclic Jacobi rotations. Returns
/// eigenvalues and the eigenvectors as columns.
fn jacobi_eigen4<T: Real>(mut a: [[T; 4]; 4]) -> ([T; 4], [[T; 4]; 4]) {
    let mut v = [[T::zero(); 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _ in 0..64 {
        let mut off = T::zero();
        for i in 0..4 {
            for j in i + 1..4 {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * T::lit(1e-8) {
            break;
        }
        for p in 0..4 {
            for q in p + 1..4 {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

/// Least-squares rigid transform taking `src[i]` to `dst[i]` (Horn's unit
/// quaternion method).
pub fn fit_rigid<T: Real>(src: &[Vec3<T>], dst: &[Vec3<T>]) -> Result<RigidTransform<T>> {
    if src.len() != dst.len() {
        return Err(Error::ShapeMismatch(src.len(), dst.len()));
    }
    if src.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let n = T::from_usize_lossy(src.len());
    let cs = src.iter().fold(Vec3::zero(), |a, p| a + *p) / n;
    let cd = dst.iter().fold(Vec3::zero(), |a, p| a + *p) / n;
    let mut s = [[T::zero(); 3]; 3];
    for (p, q) in src.iter().zip(dst) {
        let (a, b) = (*p - cs, *q - cd);
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = s[i][j] + a[i] * b[j];
            }
        }
    }
    let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = s;
    let m = [
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ];
    let (vals, vecs) = jacobi_eigen4(m);
    let best = (0..4).fold(0, |b, k| if vals[k] > vals[b] { k } else { b });
    let [w, x, y, z] = [vecs[0][best], vecs[1][best], vecs[2][best], vecs[3][best]];
    let two = T::two();
    let rotation = Mat3::from_rows([
        Vec3::new(w * w + x * x - y * y - z * z, two * (x * y - w * z), two * (x * z + w * y)),
        Vec3::new(two * (x * y + w * z), w * w - x * x + y * y - z * z, two * (y * z - w * x)),
        Vec3::new(two * (x * z - w * y), two * (y * z + w * x), w * w - x * x - y * y + z * z),
    ]);
    Ok(RigidTransform { rotation, translation: cd - rotation * cs })
}

fn mean_distance<T: Real>(points: &[Vec3<T>], bvh: &Bvh<T>) -> T {
    let d: Vec<T> = points.par_iter().map(|p| bvh.closest_point(*p).distance).collect();
    d.iter().copied().sum::<T>() / T::from_usize_lossy(d.len())
}

/// Solves the symmetric positive semi-definite system `a x = b` by Gaussian
/// elimination with partial pivoting; `None` when singular.
fn solve6<T: Real>(mut a: [[T; 6]; 6], mut b: [T; 6]) -> Option<[T; 6]> {
    for col in 0..6 {
        let piv = (col..6).fold(col, |m, r| if a[r][col].abs() > a[m][col].abs() { r } else { m });
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..6 {
            let f = a[r][col] / a[col][col];
            for c in col..6 {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = [T::zero(); 6];
    for r in (0..6).rev() {
        let mut acc = b[r];
        for c in r + 1..6 {
            acc = acc - a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Linearized point-to-plane update: the small rotation `ω` and translation
/// `t` minimizing `Σ ((p + ω×p + t - q)·n)²`, lightly damped so rotations
/// the surface does not constrain stay put.
fn point_to_plane<T: Real>(pairs: &[(Vec3<T>, Vec3<T>, Vec3<T>)]) -> Option<RigidTransform<T>> {
    let n = T::from_usize_lossy(pairs.len());
    let c = pairs.iter().fold(Vec3::zero(), |a, p| a + p.0) / n;
    let mut a = [[T::zero(); 6]; 6];
    let mut b = [T::zero(); 6];
    for (p, q, nrm) in pairs {
        let pc = *p - c;
        let row = pc.cross(*nrm);
        let j = [row.x, row.y, row.z, nrm.x, nrm.y, nrm.z];
        let r = (*p - *q).dot(*nrm);
        for i in 0..6 {
            for k in 0..6 {
                a[i][k] = a[i][k] + j[i] * j[k];
            }
            b[i] = b[i] - j[i] * r;
        }
    }
    let trace = (0..6).fold(T::zero(), |t, i| t + a[i][i]);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i] + trace * T::lit(1e-12);
    }
    let x = solve6(a, b)?;
    let omega = Vec3::new(x[0], x[1], x[2]);
    let angle = omega.norm();
    let rotation = if angle > T::zero() { Mat3::rotation_axis_angle(omega / angle, angle) } else { Mat3::identity() };
    // rotate about the centroid, then translate
    let t = Vec3::new(x[3], x[4], x[5]);
    Some(RigidTransform::new(rotation, c - rotation * c + t))
}

/// Rigid alignment of `src` onto the surface of `dst` by iterated closest
/// points. Starts by matching centroids, pairs each source vertex with its
/// nearest point on a `dst` triangle and drops pairs farther than three
/// times the median distance. Each iteration tries a point-to-point fit
/// (Horn) and a point-to-plane fit of the remaining pairs and keeps the one
/// with the lower mean distance; an iteration that would raise the mean
/// distance is rejected and ends the alignment.
pub fn icp_align<T: Real>(src: &TriMesh<T>, dst: &TriMesh<T>, max_iters: usize) -> Result<IcpResult<T>> {
    if src.is_empty() || dst.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let bvh = Bvh::build(dst)?;
    let centroid = |m: &TriMesh<T>| m.vertices.iter().fold(Vec3::zero(), |a, p| a + *p) / T::from_usize_lossy(m.vertices.len());
    let mut transform = RigidTransform::new(Mat3::identity(), centroid(dst) - centroid(src));
    let moved = |t: &RigidTransform<T>| src.vertices.iter().map(|p| t.apply(*p)).collect::<Vec<_>>();
    let initial = mean_distance(&moved(&RigidTransform::identity()), &bvh);
    let mut current = mean_distance(&moved(&transform), &bvh);
    if current > initial {
        transform = RigidTransform::identity();
        current = initial;
    }
    let mut objective = vec![current];
    let tol = T::lit(1e-15) * dst.diaglen();
    for _ in 0..max_iters {
        let pts = moved(&transform);
        let pairs: Vec<(Vec3<T>, Vec3<T>, Vec3<T>, T)> = pts
            .par_iter()
            .map(|p| {
                let c = bvh.closest_point(*p);
                let n = dst.face_normal(c.face as usize).unwrap_or(Vec3::zero());
                (*p, c.point, n, c.distance)
            })
            .collect();
        let mut d: Vec<T> = pairs.iter().map(|p| p.3).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let cut = d[d.len() / 2] * T::lit(3.0);
        let kept: Vec<_> = pairs.iter().filter(|p| p.3 <= cut).map(|p| (p.0, p.1, p.2)).collect();
        let (a, b): (Vec<_>, Vec<_>) = kept.iter().map(|p| (p.0, p.1)).unzip();
        let mut best: Option<(T, RigidTransform<T>)> = None;
        for step in [Some(fit_rigid(&a, &b)?), point_to_plane(&kept)].into_iter().flatten() {
            let next = step.after(&transform);
            let value = mean_distance(&moved(&next), &bvh);
            if best.as_ref().map_or(true, |(v, _)| value < *v) {
                best = Some((value, next));
            }
        }
        let Some((value, next)) = best else { break };
        if !(value <= current) {
            return Ok(IcpResult { transform, objective, converged: true });
        }
        transform = next;
        let gain = current - value;
        current = value;
        objective.push(value);
        if gain <= tol || value <= tol {
            return Ok(IcpResult { transform, objective, converged: true });
        }
    }
    log::warn!("ICP stopped after {max_iters} iterations without converging");
    Ok(IcpResult { transform, objective, converged: false })
}

/// Per-vertex distances from a reconstruction to the ground-truth surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct ErrorReport<T: Real> {
    pub distances: Vec<T>,
    pub mean: T,
    /// `mean` over the ground truth's bounding-box diagonal.
    pub mean_normalized: T,
    /// Applied to the reconstruction before measuring.
    pub transform: RigidTransform<T>,
}

/// Distance from every vertex of `recon` to the nearest point on any
/// triangle of `gt`. With `align`, `recon` is first moved onto `gt` by
/// [`icp_align`].
pub fn per_vertex_error<T: Real>(recon: &TriMesh<T>, gt: &TriMesh<T>, align: Option<usize>) -> Result<ErrorReport<T>> {
    if recon.is_empty() || gt.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let transform = match align {
        Some(iters) => icp_align(recon, gt, iters)?.transform,
        None => RigidTransform::identity(),
    };
    let bvh = Bvh::build(gt)?;
    let distances: Vec<T> = recon.vertices.par_iter().map(|p| bvh.closest_point(transform.apply(*p)).distance).collect();
    let mean = distances.iter().copied().sum::<T>() / T::from_usize_lossy(distances.len());
    Ok(ErrorReport { distances, mean, mean_normalized: mean / gt.diaglen(), transform })
}

/// Symmetric Hausdorff distance between the vertex sets of `a` and `b`
/// measured against the other's surface.
pub fn hausdorff<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let one_way = |x: &TriMesh<T>, y: &TriMesh<T>| -> Result<T> {
        let bvh = Bvh::build(y)?;
        Ok(x.vertices.par_iter().map(|p| bvh.closest_point(*p).distance).reduce(T::zero, T::max))
    };
    Ok(one_way(a, b)?.max(one_way(b, a)?))
}

/// Triangles of `mesh` crossed by an accepted two-refraction path in at
/// least one of `views`.
pub fn pierced_faces<T: Real>(mesh: &TriMesh<T>, obs: &Observations<T>, views: &[usize]) -> Result<Vec<bool>> {
    let mut hit = vec![false; mesh.triangles.len()];
    if mesh.is_empty() {
        return Ok(hit);
    }
    let bvh = Bvh::build(mesh)?;
    for &u in views {
        let cam = obs.cameras.get(u).ok_or(Error::InvalidView(u))?;
        let monitor = monitor_in_world(cam, &obs.monitor);
        for p in find_paths(mesh, &bvh, cam, &monitor, &obs.corr[u], obs.eta) {
            for f in p.faces {
                hit[f as usize] = true;
            }
        }
    }
    Ok(hit)
}

/// Fraction of triangles pierced by at least one two-refraction path over
/// the given views.
pub fn coverage<T: Real>(mesh: &TriMesh<T>, obs: &Observations<T>, views: &[usize]) -> Result<T> {
    let hit = pierced_faces(mesh, obs, views)?;
    if hit.is_empty() {
        return Ok(T::zero());
    }
    let n = hit.iter().filter(|h| **h).count();
    Ok(T::from_usize_lossy(n) / T::from_usize_lossy(hit.len()))
}

/// CSV with one `vertex,distance` row per vertex and a closing summary
/// comment.
pub fn write_error_csv<T: Real>(report: &ErrorReport<T>, w: &mut impl Write) -> Result<()> {
    writeln!(w, "vertex,distance")?;
    for (i, d) in report.distances.iter().enumerate() {
        writeln!(w, "{i},{:e}", d.as_f64())?;
    }
    writeln!(w, "# mean={:e} mean_normalized={:e}", report.mean.as_f64(), report.mean_normalized.as_f64())?;
    Ok(())
}

/// Linear blue-to-red color of `d` between `lo` and `hi`.
fn colormap(d: f64, lo: f64, hi: f64) -> [u8; 3] {
    let t = if hi > lo { ((d - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    [(255.0 * t).round() as u8, 0, (255.0 * (1.0 - t)).round() as u8]
}

/// The reconstruction as binary PLY with per-vertex error colors; the color
/// range is recorded in header comments.
pub fn write_error_ply<T: Real>(recon: &TriMesh<T>, report: &ErrorReport<T>, w: &mut impl Write) -> Result<()> {
    if report.distances.len() != recon.vertices.len() {
        return Err(Error::ShapeMismatch(report.distances.len(), recon.vertices.len()));
    }
    let d: Vec<f64> = report.distances.iter().map(|d| d.as_f64()).collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(0.0, f64::max);
    let colors: Vec<[u8; 3]> = d.iter().map(|x| colormap(*x, lo, hi)).collect();
    let comments = [format!("error_min {lo:e}"), format!("error_max {hi:e}")];
    write_ply(&report.transform.apply_mesh(recon), Some(&colors), &comments, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn motion() -> RigidTransform<f64> {
        let axis = Vec3::new(1.0, 2.0, 0.5).normalized();
        RigidTransform::new(Mat3::rotation_axis_angle(axis, 10f64.to_radians()), Vec3::new(0.05, -0.03, 0.02))
    }

    #[test]
    fn horn_recovers_an_exact_motion() {
        let mesh = shapes::blob::<f64>(2, 0.5);
        let m = motion();
        let moved: Vec<_> = mesh.vertices.iter().map(|p| m.apply(*p)).collect();
        let fit = fit_rigid(&mesh.vertices, &moved).unwrap();
        assert!(fit.max_difference(&m) < 1e-12);
        assert!((fit.rotation.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn icp_recovers_rotation_and_translation() {
        let src = shapes::blob::<f64>(3, 0.5);
        let m = motion();
        let dst = m.apply_mesh(&src);
        let fwd = icp_align(&src, &dst, 500).unwrap();
        assert!(fwd.converged);
        assert!(fwd.transform.max_difference(&m) < 1e-6, "{:?}", fwd.transform);
        let back = icp_align(&dst, &src, 500).unwrap();
        assert!(back.transform.max_difference(&m.inverse()) < 1e-6);
        for w in fwd.objective.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn icp_of_a_mesh_with_itself_is_identity() {
        let src = shapes::blob::<f64>(2, 0.5);
        let r = icp_align(&src, &src, 50).unwrap();
        assert!(r.transform.max_difference(&RigidTransform::identity()) < 1e-10);
    }

    #[test]
    fn icp_under_noise() {
        let src = shapes::blob::<f64>(3, 0.5);
        let diag = src.diaglen();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut noisy = src.clone();
        for p in &mut noisy.vertices {
            *p += Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (0.001 * diag);
        }
        let dst = motion().apply_mesh(&noisy);
        let r = icp_align(&src, &dst, 300).unwrap();
        assert!(*r.objective.last().unwrap() <= 0.002 * diag);
    }

    #[test]
    fn identical_meshes_have_zero_error() {
        let m = shapes::blob::<f64>(2, 0.5);
        let r = per_vertex_error(&m, &m, None).unwrap();
        assert!(r.distances.iter().all(|d| *d == 0.0));
        assert_eq!(r.mean, 0.0);
        assert!(per_vertex_error(&TriMesh::default(), &m, None).is_err());
    }

    #[test]
    fn offset_surface_error_is_the_offset() {
        let gt = shapes::icosphere::<f64>(4, 0.5);
        let delta = 0.01;
        let normals = gt.vertex_normals();
        let recon = TriMesh::new(gt.vertices.iter().zip(&normals).map(|(p, n)| *p + *n * delta).collect(), gt.triangles.clone());
        let r = per_vertex_error(&recon, &gt, None).unwrap();
        assert!((r.mean - delta).abs() <= 0.05 * delta, "{}", r.mean);
        assert!((r.mean_normalized - r.mean / gt.diaglen()).abs() < 1e-15);
    }

    #[test]
    fn sphere_against_its_icosahedral_polyhedron() {
        // vertices of a fine sphere mesh against icosphere(2) (320 faces):
        // the distance from a sphere point to the inscribed polyhedron is the
        // sagitta over its face, averaged over the sphere
        let coarse = shapes::icosphere::<f64>(2, 1.0);
        assert_eq!(coarse.triangles.len(), 320);
        let fine = shapes::icosphere::<f64>(6, 1.0);
        let measured = per_vertex_error(&fine, &coarse, None).unwrap().mean;
        // oracle: for each face, the mean of 1 - (plane offset)/cos over the
        // spherical cap it subtends, integrated numerically on a dense
        // barycentric grid projected onto the sphere
        let mut num = 0.0;
        let mut den = 0.0;
        let k = 40;
        for f in 0..coarse.triangles.len() {
            let [a, b, c] = coarse.corners(f);
            let n = coarse.face_normal(f).unwrap();
            let h = n.dot(a);
            let area = coarse.face_area(f);
            for i in 0..=k {
                for j in 0..=k - i {
                    let (u, v) = (i as f64 / k as f64, j as f64 / k as f64);
                    let p = a * (1.0 - u - v) + b * u + c * v;
                    let s = p.normalized();
                    // central projection onto the sphere scales area by h/|p|³
                    let wgt = area * h / p.norm().powi(3);
                    num += wgt * (s.dot(n) - h);
                    den += wgt;
                }
            }
        }
        let oracle = num / den;
        assert!((measured - oracle).abs() <= 0.1 * oracle, "{measured} vs {oracle}");
    }

    #[test]
    fn error_is_invariant_under_rigid_motion() {
        let gt = shapes::blob::<f64>(3, 0.5);
        let recon = shapes::icosphere::<f64>(3, 0.52);
        let m = motion();
        let a = per_vertex_error(&recon, &gt, None).unwrap();
        let b = per_vertex_error(&m.apply_mesh(&recon), &m.apply_mesh(&gt), None).unwrap();
        for (x, y) in a.distances.iter().zip(&b.distances) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn hausdorff_of_an_offset() {
        let gt = shapes::icosphere::<f64>(3, 0.5);
        let big = shapes::icosphere::<f64>(3, 0.6);
        let h = hausdorff(&gt, &big).unwrap();
        assert!(h >= 0.1 - 1e-9 && h < 0.12);
    }

    #[test]
    fn csv_and_ply_outputs() {
        let gt = shapes::icosphere::<f64>(2, 0.5);
        let recon = shapes::icosphere::<f64>(2, 0.55);
        let r = per_vertex_error(&recon, &gt, None).unwrap();
        let mut csv = Vec::new();
        write_error_csv(&r, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("vertex,distance\n0,"));
        assert_eq!(text.lines().count(), recon.vertices.len() + 2);
        assert!(text.lines().last().unwrap().starts_with("# mean="));
        let mut ply = Vec::new();
        write_error_ply(&recon, &r, &mut ply).unwrap();
        let head = String::from_utf8_lossy(&ply[..300]).to_string();
        assert!(head.contains("comment error_min") && head.contains("property uchar red"));
        let back = crate::mesh::io::read_ply::<f64>(std::io::BufReader::new(ply.as_slice())).unwrap();
        assert_eq!(back.triangles, recon.triangles);
        assert_eq!(colormap(0.0, 0.0, 1.0), [0, 0, 255]);
        assert_eq!(colormap(1.0, 0.0, 1.0), [255, 0, 0]);
    }

    #[test]
    fn sphere_coverage_grows_with_views() {
        let scene = crate::capture::Scene {
            gt_mesh: shapes::icosphere::<f64>(3, 0.5),
            eta: 1.5,
            cameras: crate::rig::TurntableRig::<f64>::default().cameras(),
            monitor: crate::rig::TurntableRig::<f64>::default().monitor(),
        };
        let obs = Observations::simulate(&scene).unwrap();
        let all: Vec<usize> = (0..36).collect();
        let full = coverage(&scene.gt_mesh, &obs, &all).unwrap();
        let one = coverage(&scene.gt_mesh, &obs, &[0]).unwrap();
        assert!(full >= 0.9, "{full}");
        assert!(one < full);
        assert_eq!(coverage(&TriMesh::<f64>::default(), &obs, &all).unwrap(), 0.0);
        // an occluder leaves no decodable pixel
        let mut dark = obs.clone();
        for c in &mut dark.corr {
            c.tags.iter_mut().for_each(|t| *t = crate::capture::Tag::Invalid);
            c.q.iter_mut().for_each(|q| *q = None);
        }
        assert_eq!(coverage(&scene.gt_mesh, &dark, &all).unwrap(), 0.0);
    }
}
