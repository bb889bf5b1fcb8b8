//! The three loss terms and their per-vertex gradients.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::difftrace::{face_plane, PathSample};
use crate::geom::{Mask, Vec3};
use crate::mesh::{SilhouetteEdge, Topology, TriMesh};
use crate::{Error, Real, Result};

/// Lower clamp of the normal dot product inside the smoothness logarithm.
const SMOOTH_CLAMP: f64 = 1e-7;

/// Balancing coefficients of the refraction, silhouette and smoothness terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> LossWeights<T> {
    pub fn new(alpha: T, beta: T, gamma: T) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    /// Defaults for an `height × width` camera and a mesh with mean edge
    /// length `edgelen`: `1e4/(H·W)`, `0.5/min(H, W)` and `1e3/edgelen`.
    pub fn auto(height: u32, width: u32, edgelen: T) -> Self {
        let (h, w) = (T::from_usize_lossy(height as usize), T::from_usize_lossy(width as usize));
        Self { alpha: T::lit(1e4) / (h * w), beta: T::half() / h.min(w), gamma: T::lit(1e3) / edgelen }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Invalid(format!("loss weight {name} = {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Loss weights where each term is either fixed or left to [`LossWeights::auto`]
/// (`None`), resolved against the current mesh at the start of a stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec<T> {
    pub alpha: Option<T>,
    pub beta: Option<T>,
    pub gamma: Option<T>,
}

impl<T: Real> WeightSpec<T> {
    pub fn resolve(&self, height: u32, width: u32, edgelen: T) -> Result<LossWeights<T>> {
        let auto = LossWeights::auto(height, width, edgelen);
        LossWeights::new(
            self.alpha.unwrap_or(auto.alpha),
            self.beta.unwrap_or(auto.beta),
            self.gamma.unwrap_or(auto.gamma),
        )
    }
}

/// Per-vertex gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer<T: Real> {
    grad: Vec<Vec3<T>>,
}

impl<T: Real> GradBuffer<T> {
    pub fn zeros(n: usize) -> Self {
        Self { grad: vec![Vec3::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.grad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad.is_empty()
    }

    #[inline]
    pub fn add(&mut self, v: u32, g: Vec3<T>) {
        self.grad[v as usize] += g;
    }

    pub fn as_slice(&self) -> &[Vec3<T>] {
        &self.grad
    }

    pub fn into_inner(self) -> Vec<Vec3<T>> {
        self.grad
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: T, other: &Self) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::ShapeMismatch(self.len(), other.len()));
        }
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += *b * s;
        }
        Ok(())
    }

    /// First vertex with a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.grad.iter().position(|g| !g.is_finite())
    }

    pub fn max_norm(&self) -> T {
        self.grad.iter().map(|g| g.norm()).fold(T::zero(), T::max)
    }
}

impl<T: Real> From<Vec<Vec3<T>>> for GradBuffer<T> {
    fn from(grad: Vec<Vec3<T>>) -> Self {
        Self { grad }
    }
}

/// `Σ ‖Q - Q'‖²` over the samples, in squared monitor pixels. Each sample
/// adds `2 (Q' - Q)ᵀ ∂Q'/∂v` to its six vertices; samples without
/// Jacobians contribute to the value only.
pub fn refraction_loss<T: Real>(samples: &[PathSample<T>], out: &mut GradBuffer<T>) -> T {
    let mut loss = T::zero();
    for s in samples {
        let r = s.residual();
        loss = loss + r.dot(r);
        if let Some(jac) = &s.jacobians {
            for (v, j) in s.vertices.iter().zip(jac) {
                out.add(*v, j.transpose_mul(r * T::two()));
            }
        }
    }
    loss
}

/// Count of silhouette edges whose projected midpoint is strictly inside or
/// strictly outside the mask, summed over views. `sil[k]` are the edges of
/// view `k`, seen against `masks[k]`.
///
/// The descent direction of an edge is `χ‖b‖N_b` in the image; it is pulled
/// back through the projection Jacobian at the 3D midpoint and half of it
/// goes to each endpoint, so each endpoint gradient is `-½ Jᵀ χ‖b‖N_b`.
pub fn silhouette_loss<T: Real>(sil: &[Vec<SilhouetteEdge<T>>], masks: &[&Mask], out: &mut GradBuffer<T>) -> Result<T> {
    if sil.len() != masks.len() {
        return Err(Error::ShapeMismatch(sil.len(), masks.len()));
    }
    let mut count = 0usize;
    for (edges, mask) in sil.iter().zip(masks) {
        for e in edges {
            let chi = mask.lookup(e.midpoint).chi();
            if chi == 0 {
                continue;
            }
            count += 1;
            let dir = e.normal * (T::lit(chi as f64) * e.length);
            let g = e.midpoint_jacobian.transpose_mul(dir) * -T::half();
            out.add(e.verts[0], g);
            out.add(e.verts[1], g);
        }
    }
    Ok(T::from_usize_lossy(count))
}

/// `Σ_e -ln(1 + clamp(N1·N2, -1 + 1e-7, 1))` over interior edges, with the
/// gradient through both face normals.
pub fn smoothness_loss<T: Real>(mesh: &TriMesh<T>, topo: &Topology, out: &mut GradBuffer<T>) -> T {
    let planes: Vec<_> = (0..mesh.triangles.len()).into_par_iter().map(|f| face_plane(&mesh.corners(f))).collect();
    let lo = T::lit(SMOOTH_CLAMP) - T::one();
    let terms: Vec<(T, [(u32, Vec3<T>); 6])> = topo
        .edge_faces
        .par_iter()
        .map(|&[f0, f1]| {
            let (p0, p1) = (&planes[f0 as usize], &planes[f1 as usize]);
            let dot = p0.unit.dot(p1.unit);
            let clamped = dot.max(lo).min(T::one());
            let value = -(T::one() + clamped).ln();
            let slope = if dot > lo { -T::one() / (T::one() + clamped) } else { T::zero() };
            let (t0, t1) = (mesh.triangles[f0 as usize], mesh.triangles[f1 as usize]);
            let mut g = [(0u32, Vec3::zero()); 6];
            for k in 0..3 {
                // d(N0·N1)/dv = (∂N0/∂v)ᵀ N1
                g[k] = (t0[k], p0.d_unit[k].transpose() * p1.unit * slope);
                g[3 + k] = (t1[k], p1.d_unit[k].transpose() * p0.unit * slope);
            }
            (value, g)
        })
        .collect();
    let mut loss = T::zero();
    for (value, g) in terms {
        loss = loss + value;
        for (v, d) in g {
            out.add(v, d);
        }
    }
    loss
}

/// Adds a per-vertex bound on the Gauss-Newton curvature of the refraction
/// loss to `out`. A sample's Hessian block between vertices `v` and `w` is
/// `2 J_vᵀ J_w`; each vertex gets the row sum `2 ‖J_v‖ Σ_w ‖J_w‖` of the
/// block norms (Frobenius), so scaling by its inverse keeps every
/// eigenvalue at or below one.
pub fn refraction_curvature<T: Real>(samples: &[PathSample<T>], out: &mut [T]) {
    for s in samples {
        if let Some(jac) = &s.jacobians {
            let norms = jac.map(|j| (j.rows[0].norm_squared() + j.rows[1].norm_squared()).sqrt());
            let sum: T = norms.iter().copied().sum();
            for (v, n) in s.vertices.iter().zip(norms) {
                out[*v as usize] = out[*v as usize] + T::two() * n * sum;
            }
        }
    }
}

/// Adds a per-vertex curvature bound of the smoothness loss to `out`.
///
/// Each edge term is `φ(θ) = -ln(1 + cos θ)` of its dihedral angle, with
/// `φ'' = 1/(1 + cos θ)`. The angle moves at rate `1/h` with the vertex
/// opposite the edge in a face of height `h` over the edge; each edge
/// endpoint gets the mean of the two rates. A vertex with rate `r_v` gets
/// `φ'' r_v Σ_w r_w` over the edge's four vertices.
pub fn smoothness_curvature<T: Real>(mesh: &TriMesh<T>, topo: &Topology, out: &mut [T]) {
    let terms: Vec<[(u32, T); 4]> = topo
        .edges
        .par_iter()
        .zip(&topo.edge_faces)
        .map(|(&[a, b], &[f0, f1])| {
            let opposite = |f: u32| {
                let t = mesh.triangles[f as usize];
                t.into_iter().find(|&v| v != a && v != b).expect("triangle has a third vertex")
            };
            let (c, d) = (opposite(f0), opposite(f1));
            let edge = (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm();
            let rate = |f: u32| {
                let twice_area = mesh.face_normal_raw(f as usize).norm();
                if twice_area > T::zero() {
                    edge / twice_area
                } else {
                    T::zero()
                }
            };
            let (rc, rd) = (rate(f0), rate(f1));
            let n0 = mesh.face_normal_raw(f0 as usize).normalized();
            let n1 = mesh.face_normal_raw(f1 as usize).normalized();
            let cos = n0.dot(n1).max(T::lit(SMOOTH_CLAMP) - T::one()).min(T::one());
            let phi2 = T::one() / (T::one() + cos);
            let re = (rc + rd) * T::half();
            let sum = re + re + rc + rd;
            [(a, phi2 * re * sum), (b, phi2 * re * sum), (c, phi2 * rc * sum), (d, phi2 * rd * sum)]
        })
        .collect();
    for t in terms {
        for (v, h) in t {
            if h.is_finite() {
                out[v as usize] = out[v as usize] + h;
            }
        }
    }
}

/// Loss values and gradients of one evaluation.
#[derive(Clone, Debug)]
pub struct LossTerms<T: Real> {
    pub refraction: T,
    pub silhouette: T,
    pub smoothness: T,
    pub grad_refraction: GradBuffer<T>,
    pub grad_silhouette: GradBuffer<T>,
    pub grad_smoothness: GradBuffer<T>,
    pub valid_paths: usize,
}

/// `α L_refract + β L_silhouette + γ L_smooth` and the matching gradient.
pub fn total_loss<T: Real>(terms: &LossTerms<T>, weights: &LossWeights<T>) -> Result<(T, GradBuffer<T>)> {
    let n = terms.grad_refraction.len();
    let mut grad = GradBuffer::zeros(n);
    grad.add_scaled(weights.alpha, &terms.grad_refraction)?;
    grad.add_scaled(weights.beta, &terms.grad_silhouette)?;
    grad.add_scaled(weights.gamma, &terms.grad_smoothness)?;
    let total = weights.alpha * terms.refraction + weights.beta * terms.silhouette + weights.gamma * terms.smoothness;
    Ok((total, grad))
}

/// One row of the loss log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord<T> {
    pub stage: usize,
    pub iter: usize,
    pub refraction: T,
    pub silhouette: T,
    pub smoothness: T,
    pub total: T,
    pub valid_paths: usize,
}

pub const LOSS_CSV_HEADER: &str = "stage,iter,L_refract,L_silhouette,L_smooth,total,valid_path_count";

impl<T: Real> LossRecord<T> {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{},{},{:e},{:e},{:e},{:e},{}",
            self.stage,
            self.iter,
            self.refraction.as_f64(),
            self.silhouette.as_f64(),
            self.smoothness.as_f64(),
            self.total.as_f64(),
            self.valid_paths
        )?;
        Ok(())
    }
}
