use crate::geom::{Camera, Mat23, Vec2, Vec3};
use crate::mesh::{Topology, TriMesh};
use crate::Real;

/// A mesh edge on the occluding contour of one view, with its projection.
#[derive(Clone, Debug)]
pub struct SilhouetteEdge<T: Real> {
    pub edge: u32,
    /// Endpoint vertex ids.
    pub verts: [u32; 2],
    /// Projected endpoints.
    pub ends: [Vec2<T>; 2],
    /// Projection of the 3D edge midpoint.
    pub midpoint: Vec2<T>,
    /// Projection Jacobian evaluated at the 3D midpoint.
    pub midpoint_jacobian: Mat23<T>,
    /// Length of the projected edge in pixels.
    pub length: T,
    /// Unit image-space normal pointing away from the projected silhouette.
    pub normal: Vec2<T>,
}

/// `true` when the face's front side is visible from `eye`.
#[inline]
fn front_facing<T: Real>(mesh: &TriMesh<T>, f: usize, eye: Vec3<T>) -> bool {
    let n = mesh.face_normal_raw(f);
    (mesh.vertices[mesh.triangles[f][0] as usize] - eye).dot(n) < T::zero()
}

/// Edges whose two adjacent faces disagree on facing with respect to the
/// camera center.
///
/// Edges with an endpoint at or behind the camera plane are skipped with a
/// warning. The image normal is the projected edge direction rotated by 90°,
/// signed to point away from the projected opposite vertex of the
/// front-facing face.
pub fn silhouette_edges<T: Real>(mesh: &TriMesh<T>, topo: &Topology, cam: &Camera<T>) -> Vec<SilhouetteEdge<T>> {
    let eye = cam.center();
    let facing: Vec<bool> = (0..mesh.triangles.len()).map(|f| front_facing(mesh, f, eye)).collect();
    let mut out = Vec::new();
    let mut straddling = 0usize;
    for (e, (&[a, b], faces)) in topo.edges.iter().zip(&topo.edge_faces).enumerate() {
        let (f0, f1) = (faces[0] as usize, faces[1] as usize);
        if facing[f0] == facing[f1] {
            continue;
        }
        let front = if facing[f0] { f0 } else { f1 };
        let (pa, pb) = (mesh.vertices[a as usize], mesh.vertices[b as usize]);
        let mid3 = (pa + pb) * T::half();
        let (Ok(qa), Ok(qb), Ok((mid, jac))) = (cam.project(pa), cam.project(pb), cam.project_with_jacobian(mid3)) else {
            straddling += 1;
            continue;
        };
        let opposite = mesh.triangles[front].iter().copied().find(|&v| v != a && v != b).expect("triangle has a third vertex");
        let Ok(qc) = cam.project(mesh.vertices[opposite as usize]) else {
            straddling += 1;
            continue;
        };
        let dir = qb - qa;
        let length = dir.norm();
        if !(length > T::zero()) {
            continue;
        }
        let mut normal = dir.perp() / length;
        if normal.dot(qc - qa) > T::zero() {
            normal = -normal;
        }
        out.push(SilhouetteEdge {
            edge: e as u32,
            verts: [a, b],
            ends: [qa, qb],
            midpoint: mid,
            midpoint_jacobian: jac,
            length,
            normal,
        });
    }
    if straddling > 0 {
        log::warn!("skipped {straddling} silhouette edges crossing the camera plane");
    }
    out
}
