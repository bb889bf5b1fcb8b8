use glassmesh::accel::{brute_force_first_hit, Bvh};
use glassmesh::capture::Scene;
use glassmesh::carve::{carve_hull, extract_surface};
use glassmesh::eval::{per_vertex_error, RigidTransform};
use glassmesh::geom::{Mat3, Ray, Vec3};
use glassmesh::mesh::io::{load_mesh, save_mesh};
use glassmesh::mesh::{remesh, shapes, RemeshParams};
use glassmesh::optim::Observations;
use glassmesh::rig::TurntableRig;
use glassmesh::{TriMesh64, Vec3f64};
use proptest::prelude::*;

fn small_rig(views: usize) -> TurntableRig<f64> {
    TurntableRig { views, width: 32, height: 32, focal: 65.0, ..TurntableRig::default() }
}

#[test]
fn meshes_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let blob: TriMesh64 = shapes::blob(3, 0.5);
    for name in ["b.obj", "b.ply"] {
        let path = dir.path().join(name);
        save_mesh(&blob, &path).unwrap();
        let back: TriMesh64 = load_mesh(&path).unwrap();
        assert_eq!(back.triangles, blob.triangles);
        let worst = back.vertices.iter().zip(&blob.vertices).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{name}: {worst}");
    }
}

#[test]
fn simulate_then_carve_brackets_the_object() {
    let gt: TriMesh64 = shapes::icosphere(3, 0.5);
    let rig = small_rig(12);
    let scene = Scene { gt_mesh: gt.clone(), eta: 1.5, cameras: rig.cameras(), monitor: rig.monitor() };
    let obs = Observations::simulate(&scene).unwrap();
    assert_eq!(obs.view_count(), 12);
    let grid = carve_hull(&obs.masks, &obs.cameras, 48).unwrap();
    let hull = extract_surface(&grid).unwrap();
    hull.validate().unwrap();
    assert_eq!(hull.euler_characteristic(), 2);
    let ratio = hull.signed_volume() / gt.signed_volume();
    assert!((0.9..1.5).contains(&ratio), "{ratio}");
    let err = per_vertex_error(&hull, &gt, None).unwrap();
    assert!(err.mean_normalized < 0.02, "{}", err.mean_normalized);
}

#[test]
fn remesh_then_measure_against_source() {
    let gt: TriMesh64 = shapes::blob(4, 0.5);
    let d = gt.diaglen();
    let out = remesh(&gt, &RemeshParams::new(0.02 * d, d)).unwrap();
    assert_eq!(out.euler_characteristic(), gt.euler_characteristic());
    let err = per_vertex_error(&out, &gt, None).unwrap();
    assert!(err.mean < 1e-3 * d, "{}", err.mean);
}

#[test]
fn aligned_error_undoes_a_rigid_motion() {
    let gt: TriMesh64 = shapes::blob(3, 0.5);
    let moved = RigidTransform::new(Mat3::rotation_y(0.05), Vec3::new(0.01, -0.02, 0.0)).apply_mesh(&gt);
    let raw = per_vertex_error(&moved, &gt, None).unwrap();
    let aligned = per_vertex_error(&moved, &gt, Some(50)).unwrap();
    assert!(raw.mean > 1e-3);
    assert!(aligned.mean < 1e-6, "{}", aligned.mean);
}

fn unit(v: [f64; 3]) -> Option<Vec3f64> {
    let v = Vec3::new(v[0], v[1], v[2]);
    (v.norm() > 1e-3).then(|| v.normalized())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bvh_agrees_with_brute_force(o in prop::array::uniform3(-1.0f64..1.0), d in prop::array::uniform3(-1.0f64..1.0)) {
        let mesh: TriMesh64 = shapes::l_block(0.8);
        let bvh = Bvh::build(&mesh).unwrap();
        let Some(dir) = unit(d) else { return Ok(()) };
        let ray = Ray::new(Vec3::new(o[0], o[1], o[2]), dir);
        let a = bvh.first_hit(&ray, 1e-9);
        let b = brute_force_first_hit(&mesh, &ray, 1e-9);
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a.t - b.t).abs() < 1e-12);
        }
    }

    #[test]
    fn closest_point_lies_on_the_surface(p in prop::array::uniform3(-1.0f64..1.0)) {
        let mesh: TriMesh64 = shapes::blob(2, 0.5);
        let bvh = Bvh::build(&mesh).unwrap();
        let p = Vec3::new(p[0], p[1], p[2]);
        let c = bvh.closest_point(p);
        let brute = (0..mesh.triangles.len())
            .map(|f| (glassmesh::accel::closest_point_on_triangle(p, &mesh.corners(f)) - p).norm())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((c.distance - brute).abs() < 1e-12);
        prop_assert!(((c.point - p).norm() - c.distance).abs() < 1e-12);
    }
}
