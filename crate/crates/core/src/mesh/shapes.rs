//! Procedural test solids. All are closed, outward-wound and centered on the
//! origin.

use std::collections::HashMap;

use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::Real;

/// Subdivided icosahedron projected onto a sphere; `20·4^subdiv` faces.
pub fn icosphere<T: Real>(subdiv: u32, radius: T) -> TriMesh<T> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut verts: Vec<Vec3<f64>> = raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z).normalized()).collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdiv {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3<f64>>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalized());
                verts.len() as u32 - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(verts.into_iter().map(|v| v.cast::<T>() * radius).collect(), faces)
}

/// Axis-aligned box between `lo` and `hi`, two triangles per side.
pub fn cuboid<T: Real>(lo: Vec3<T>, hi: Vec3<T>) -> TriMesh<T> {
    let v = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let tris = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriMesh::new(v, tris)
}

/// Cube of side `size` centered on the origin.
pub fn cube<T: Real>(size: T) -> TriMesh<T> {
    let h = size * T::half();
    cuboid(Vec3::splat(-h), Vec3::splat(h))
}

/// Regular tetrahedron inscribed in a sphere of `radius`.
pub fn tetrahedron<T: Real>(radius: T) -> TriMesh<T> {
    let s = T::one() / T::lit(3.0).sqrt() * radius;
    let v = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    TriMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Sphere with three smooth Gaussian bumps, giving concave saddles between
/// them. `subdiv` controls the tessellation of the underlying icosphere.
pub fn blob<T: Real>(subdiv: u32, radius: T) -> TriMesh<T> {
    let bumps: [([f64; 3], f64); 3] = [([1.0, 0.35, 0.2], 0.28), ([-0.45, 0.2, 0.85], 0.22), ([-0.2, -0.6, -0.75], 0.25)];
    let bumps: Vec<(Vec3<f64>, f64)> =
        bumps.iter().map(|&(c, a)| (Vec3::new(c[0], c[1], c[2]).normalized(), a)).collect();
    let sphere = icosphere::<f64>(subdiv, 1.0);
    let mesh = sphere.map_vertices(|v| {
        let r = 1.0 + bumps.iter().map(|&(c, a)| a * (-(v - c).norm_squared() / 0.18).exp()).sum::<f64>();
        v * r
    });
    let mesh: TriMesh<T> = mesh.cast();
    mesh.map_vertices(|v| v * radius / T::lit(1.3))
}

/// L-shaped prism: a `2×2×1` block with one `1×1×1` quadrant removed,
/// scaled by `size`. The re-entrant corner makes rays exit and re-enter.
pub fn l_block<T: Real>(size: T) -> TriMesh<T> {
    // Outline in the xy plane (counter-clockwise), extruded along z.
    let outline = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)];
    let n = outline.len() as u32;
    let mut v = Vec::new();
    for z in [-0.5, 0.5] {
        for &(x, y) in &outline {
            v.push(Vec3::from_f64(x - 1.0, y - 1.0, z) * size);
        }
    }
    let mut tris = Vec::new();
    // caps: fan-free triangulation of the L outline
    let cap = [[0u32, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]];
    for t in cap {
        tris.push([n + t[0], n + t[1], n + t[2]]);
        tris.push([t[0], t[2], t[1]]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        tris.push([i, j, n + j]);
        tris.push([i, n + j, n + i]);
    }
    TriMesh::new(v, tris)
}
