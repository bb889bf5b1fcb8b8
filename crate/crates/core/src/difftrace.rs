//! Differentiable re-tracing of two-refraction light paths.
//!
//! Paths are found by discrete tracing against the current mesh, then
//! re-evaluated on the planes of the two pierced faces so that the monitor
//! position `Q'` is a smooth function of the six face vertices. The
//! Jacobians are chained by hand through
//! plane hit → refraction → plane hit → refraction → monitor hit.

use rayon::prelude::*;

use crate::accel::Bvh;
use crate::capture::{CorrespondenceMap, Tag};
use crate::geom::{refract, Camera, Mat23, Mat3, MonitorPlane, Ray, TotalInternalReflection, Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::{Error, Real, Result};

/// One camera pixel whose ray refracts exactly twice through the current
/// mesh, together with the monitor point it should reach.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample<T: Real> {
    pub view: u32,
    pub pixel: [u32; 2],
    /// Entry face, then exit face.
    pub faces: [u32; 2],
    /// Vertex ids of the entry face followed by those of the exit face, in
    /// the order of `jacobians`.
    pub vertices: [u32; 6],
    pub entry: Vec3<T>,
    pub exit: Vec3<T>,
    pub bary: [[T; 3]; 2],
    /// Monitor position reached through the current mesh.
    pub simulated: Vec2<T>,
    /// Monitor position recorded in the correspondence map.
    pub observed: Vec2<T>,
    /// `∂Q'/∂v` for the six vertices, once evaluated.
    pub jacobians: Option<[Mat23<T>; 6]>,
}

impl<T: Real> PathSample<T> {
    /// `Q' - Q` in monitor pixels.
    pub fn residual(&self) -> Vec2<T> {
        self.simulated - self.observed
    }

    /// Re-evaluates `Q'` and its Jacobians at the mesh's current vertices,
    /// keeping the faces fixed.
    pub fn refresh(&mut self, mesh: &TriMesh<T>, cam: &Camera<T>, monitor: &MonitorPlane<T>, eta: T) -> Result<()> {
        let ray = cam.pixel_ray(self.pixel[0], self.pixel[1]);
        let tris = [mesh.corners(self.faces[0] as usize), mesh.corners(self.faces[1] as usize)];
        let (q, jac) = eval_path_with_grad(tris, &ray, monitor, eta)?;
        self.simulated = q;
        self.jacobians = Some(jac);
        Ok(())
    }
}

/// Ray parameter of the hit with the plane through `anchor` with (not
/// necessarily unit) normal `normal`.
#[inline]
fn plane_t<T: Real>(origin: Vec3<T>, dir: Vec3<T>, anchor: Vec3<T>, normal: Vec3<T>) -> Option<T> {
    let denom = dir.dot(normal);
    let t = (anchor - origin).dot(normal) / denom;
    t.is_finite().then_some(t)
}

/// Plane hit and its derivatives with respect to every input.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PlaneHit<T: Real> {
    pub point: Vec3<T>,
    pub d_origin: Mat3<T>,
    pub d_dir: Mat3<T>,
    pub d_anchor: Mat3<T>,
    pub d_normal: Mat3<T>,
}

pub(crate) fn plane_hit<T: Real>(origin: Vec3<T>, dir: Vec3<T>, anchor: Vec3<T>, normal: Vec3<T>) -> Option<PlaneHit<T>> {
    let t = plane_t(origin, dir, anchor, normal)?;
    let point = origin + dir * t;
    let inv = T::one() / dir.dot(normal);
    let dt_origin = normal * -inv;
    let dt_dir = normal * (-t * inv);
    let dt_anchor = normal * inv;
    let dt_normal = (anchor - point) * inv;
    Some(PlaneHit {
        point,
        d_origin: Mat3::identity() + dir.outer(dt_origin),
        d_dir: Mat3::diag(t) + dir.outer(dt_dir),
        d_anchor: dir.outer(dt_anchor),
        d_normal: dir.outer(dt_normal),
    })
}

/// Refracted direction and its derivatives with respect to the incident
/// direction and the unit normal; same conventions as [`refract`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Refraction<T: Real> {
    pub dir: Vec3<T>,
    pub d_dir: Mat3<T>,
    pub d_normal: Mat3<T>,
}

pub(crate) fn refract_with_jacobian<T: Real>(
    d: Vec3<T>,
    n: Vec3<T>,
    eta: T,
) -> Result<Refraction<T>, TotalInternalReflection> {
    let dir = refract(d, n, eta)?;
    let c = -d.dot(n);
    let s = (T::one() - eta * eta * (T::one() - c * c)).sqrt();
    let g = eta * c - s;
    // with eta = 1 and c > 0 the bending term vanishes identically
    let dg_dc = if s > T::zero() { eta - eta * eta * c / s } else { T::infinity() };
    Ok(Refraction {
        dir,
        d_dir: Mat3::diag(eta) - n.outer(n) * dg_dc,
        d_normal: Mat3::diag(g) - n.outer(d) * dg_dc,
    })
}

/// Face plane of triangle `[a, b, c]`: the raw normal `m = (b-a)×(c-a)`, the
/// unit normal, and the derivatives of both with respect to each corner.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FacePlane<T: Real> {
    pub raw: Vec3<T>,
    pub unit: Vec3<T>,
    pub d_raw: [Mat3<T>; 3],
    pub d_unit: [Mat3<T>; 3],
}

pub(crate) fn face_plane<T: Real>(tri: &[Vec3<T>; 3]) -> FacePlane<T> {
    let [a, b, c] = *tri;
    let raw = (b - a).cross(c - a);
    let len = raw.norm();
    let unit = raw / len;
    let d_raw = [Mat3::skew(c - b), Mat3::skew(a - c), Mat3::skew(b - a)];
    let proj = (Mat3::identity() - unit.outer(unit)) * (T::one() / len);
    FacePlane { raw, unit, d_raw, d_unit: d_raw.map(|m| proj * m) }
}

/// Monitor-plane coordinate map `x ↦ A(x - origin)` as a 2×3 matrix.
fn monitor_map<T: Real>(m: &MonitorPlane<T>) -> Mat23<T> {
    Mat23::from_rows(m.u_axis / m.u_axis.norm_squared(), m.v_axis / m.v_axis.norm_squared())
}

/// Points and directions of one fixed-topology path.
struct PathPoints<T: Real> {
    entry: Vec3<T>,
    exit: Vec3<T>,
    inside: Vec3<T>,
    leaving: Vec3<T>,
    q: Vec2<T>,
}

/// Value of the fixed-topology path.
fn eval_path<T: Real>(tris: [[Vec3<T>; 3]; 2], ray: &Ray<T>, monitor: &MonitorPlane<T>, eta: T) -> Result<PathPoints<T>> {
    let f1 = face_plane(&tris[0]);
    let f2 = face_plane(&tris[1]);
    let t1 = plane_t(ray.origin, ray.dir, tris[0][0], f1.raw).ok_or(Error::PathBroken)?;
    let entry = ray.origin + ray.dir * t1;
    let inside = refract(ray.dir, f1.unit, T::one() / eta).map_err(|_| Error::PathBroken)?;
    let t2 = plane_t(entry, inside, tris[1][0], f2.raw).ok_or(Error::PathBroken)?;
    let exit = entry + inside * t2;
    let leaving = refract(inside, -f2.unit, eta).map_err(|_| Error::PathBroken)?;
    let q = monitor.intersect(&Ray::new(exit, leaving)).ok_or(Error::PathBroken)?;
    Ok(PathPoints { entry, exit, inside, leaving, q })
}

/// Monitor position `Q'` reached by `ray` when it refracts into the plane
/// of `tris[0]` and out of the plane of `tris[1]`, and the exact
/// derivatives of `Q'` with respect to the six corners (entry face first).
///
/// Faces are treated as infinite planes. Fails with [`Error::PathBroken`] on
/// total internal reflection, a parallel plane, or a monitor miss.
pub fn eval_path_with_grad<T: Real>(
    tris: [[Vec3<T>; 3]; 2],
    ray: &Ray<T>,
    monitor: &MonitorPlane<T>,
    eta: T,
) -> Result<(Vec2<T>, [Mat23<T>; 6])> {
    let broken = |_| Error::PathBroken;
    let f1 = face_plane(&tris[0]);
    let f2 = face_plane(&tris[1]);
    let h1 = plane_hit(ray.origin, ray.dir, tris[0][0], f1.raw).ok_or(Error::PathBroken)?;
    let r1 = refract_with_jacobian(ray.dir, f1.unit, T::one() / eta).map_err(broken)?;
    let h2 = plane_hit(h1.point, r1.dir, tris[1][0], f2.raw).ok_or(Error::PathBroken)?;
    let r2 = refract_with_jacobian(r1.dir, -f2.unit, eta).map_err(broken)?;
    let leaving = Ray::new(h2.point, r2.dir);
    let q = monitor.intersect(&leaving).ok_or(Error::PathBroken)?;
    let h3 = plane_hit(h2.point, r2.dir, monitor.origin, monitor.normal()).ok_or(Error::PathBroken)?;
    let to_uv = monitor_map(monitor);

    let mut jac = [Mat23::zero(); 6];
    for (k, out) in jac.iter_mut().enumerate() {
        let (face, corner) = (k / 3, k % 3);
        let anchor = if corner == 0 { Mat3::identity() } else { Mat3::zero() };
        // entry point and interior direction
        let (dp1, dd1) = if face == 0 {
            (h1.d_anchor * anchor + h1.d_normal * f1.d_raw[corner], r1.d_normal * f1.d_unit[corner])
        } else {
            (Mat3::zero(), Mat3::zero())
        };
        let mut dp2 = h2.d_origin * dp1 + h2.d_dir * dd1;
        let mut dd2 = r2.d_dir * dd1;
        if face == 1 {
            dp2 = dp2 + h2.d_anchor * anchor + h2.d_normal * f2.d_raw[corner];
            dd2 = dd2 - r2.d_normal * f2.d_unit[corner];
        }
        let dx = h3.d_origin * dp2 + h3.d_dir * dd2;
        *out = to_uv.mul_mat3(&dx);
    }
    Ok((q, jac))
}

/// Traces every pixel tagged [`Tag::TwoRefraction`] in `corr` through
/// `mesh` and keeps the ones that refract exactly twice: the first hit
/// enters the mesh without total internal reflection, the next hit leaves
/// it, the leaving ray reaches the monitor and meets no further surface.
///
/// `Q'` is evaluated on the face planes, so it agrees with
/// [`eval_path_with_grad`] at the same vertices. Jacobians are left empty.
pub fn find_paths<T: Real>(
    mesh: &TriMesh<T>,
    bvh: &Bvh<T>,
    cam: &Camera<T>,
    monitor: &MonitorPlane<T>,
    corr: &CorrespondenceMap<T>,
    eta: T,
) -> Vec<PathSample<T>> {
    let t_eps = T::lit(1e-6) * mesh.diaglen();
    let candidates: Vec<usize> = (0..corr.tags.len()).filter(|&k| corr.tags[k] == Tag::TwoRefraction).collect();
    candidates
        .par_iter()
        .filter_map(|&k| {
            let observed = corr.q[k]?;
            let (i, j) = corr.pixel(k);
            let ray = cam.pixel_ray(i, j);
            let first = bvh.first_hit(&ray, T::zero())?;
            if ray.dir.dot(mesh.face_normal_raw(first.face as usize)) >= T::zero() {
                return None;
            }
            let n1 = mesh.face_normal_raw(first.face as usize).normalized();
            let inside = refract(ray.dir, n1, T::one() / eta).ok()?;
            let second = bvh.first_hit(&Ray::new(ray.point_at(first.t), inside), t_eps)?;
            if inside.dot(mesh.face_normal_raw(second.face as usize)) <= T::zero() {
                return None;
            }
            let faces = [first.face, second.face];
            let tris = [mesh.corners(faces[0] as usize), mesh.corners(faces[1] as usize)];
            let path = eval_path(tris, &ray, monitor, eta).ok()?;
            if bvh.any_hit(&Ray::new(path.exit, path.leaving), t_eps) {
                return None;
            }
            debug_assert!(path.inside.is_finite());
            let [t1, t2] = faces.map(|f| mesh.triangles[f as usize]);
            Some(PathSample {
                view: corr.view,
                pixel: [i, j],
                faces,
                vertices: [t1[0], t1[1], t1[2], t2[0], t2[1], t2[2]],
                entry: path.entry,
                exit: path.exit,
                bary: [first.bary, second.bary],
                simulated: path.q,
                observed,
                jacobians: None,
            })
        })
        .collect()
}
