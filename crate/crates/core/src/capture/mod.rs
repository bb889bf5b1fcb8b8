//! Synthetic acquisition: refractive forward tracing of a ground-truth mesh
//! into per-view correspondence maps and silhouette masks, plus Gray-code
//! environment matting.

mod gray;
mod io;

pub use gray::{decode_gray, encode_gray, gray_bits, matting_pipeline, GrayPatternStack, StripeOrientation};
pub use io::{read_corr, read_pgm, write_corr, write_pgm};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::Bvh;
use crate::geom::{refract, Camera, Mask, MonitorPlane, Ray, Vec2};
use crate::mesh::TriMesh;
use crate::rig::monitor_in_world;
use crate::{Error, Real, Result};

/// Maximum number of surface interactions followed per camera ray.
pub const TRACE_DEPTH: usize = 30;

/// A capture setup. `monitor` is expressed in camera coordinates and keeps
/// that pose in every view; cameras are given in the object frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct Scene<T: Real> {
    #[serde(skip)]
    pub gt_mesh: TriMesh<T>,
    /// Refractive index of the object relative to air.
    pub eta: T,
    pub cameras: Vec<Camera<T>>,
    pub monitor: MonitorPlane<T>,
}

impl<T: Real> Scene<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= T::one()) {
            return Err(Error::Invalid(format!("refractive index {} must be at least 1", self.eta)));
        }
        if self.cameras.is_empty() {
            return Err(Error::Invalid("scene has no views".into()));
        }
        for cam in &self.cameras {
            cam.validate()?;
        }
        self.monitor.validate()
    }

    pub fn view_count(&self) -> usize {
        self.cameras.len()
    }

    pub fn camera(&self, u: usize) -> Result<&Camera<T>> {
        self.cameras.get(u).ok_or(Error::InvalidView(u))
    }

    /// The monitor of view `u` in the object frame.
    pub fn monitor_for(&self, u: usize) -> Result<MonitorPlane<T>> {
        Ok(monitor_in_world(self.camera(u)?, &self.monitor))
    }
}

/// Outcome of tracing one camera pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tag {
    /// Entered and left the object once, then reached the monitor.
    TwoRefraction = 0,
    /// Saw the monitor directly.
    MissedObject = 1,
    /// Any other number of refractions, or the trace depth ran out.
    MoreThanTwo = 2,
    /// Total internal reflection ended the path.
    Tir = 3,
    /// The final ray left without reaching the monitor.
    MissedMonitor = 4,
    /// Matting could not decode a consistent monitor position.
    Invalid = 5,
}

impl Tag {
    pub const ALL: [Tag; 6] = [Tag::TwoRefraction, Tag::MissedObject, Tag::MoreThanTwo, Tag::Tir, Tag::MissedMonitor, Tag::Invalid];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    /// Whether a correspondence map stores a monitor position for this tag.
    pub fn carries_q(self) -> bool {
        matches!(self, Tag::TwoRefraction | Tag::MissedObject)
    }
}

/// Per-pixel monitor positions observed in one view, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceMap<T: Real> {
    pub view: u32,
    pub width: u32,
    pub height: u32,
    pub res: [u32; 2],
    pub tags: Vec<Tag>,
    pub q: Vec<Option<Vec2<T>>>,
}

impl<T: Real> CorrespondenceMap<T> {
    #[inline]
    pub fn index(&self, i: u32, j: u32) -> usize {
        j as usize * self.width as usize + i as usize
    }

    /// Pixel coordinates of a row-major index.
    #[inline]
    pub fn pixel(&self, idx: usize) -> (u32, u32) {
        ((idx % self.width as usize) as u32, (idx / self.width as usize) as u32)
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    /// Checks the tag/position pairing and the monitor range.
    pub fn validate(&self) -> Result<()> {
        let n = self.width as usize * self.height as usize;
        if self.tags.len() != n || self.q.len() != n {
            return Err(Error::ShapeMismatch(self.tags.len().max(self.q.len()), n));
        }
        for (k, (t, q)) in self.tags.iter().zip(&self.q).enumerate() {
            match q {
                Some(q) if t.carries_q() => {
                    let (ru, rv) = (T::from_usize_lossy(self.res[0] as usize), T::from_usize_lossy(self.res[1] as usize));
                    if !(q.x >= T::zero() && q.x < ru && q.y >= T::zero() && q.y < rv) {
                        return Err(Error::Invalid(format!("pixel {k}: monitor position outside the screen")));
                    }
                }
                None if !t.carries_q() => {}
                _ => return Err(Error::Invalid(format!("pixel {k}: tag {t:?} disagrees with stored position"))),
            }
        }
        Ok(())
    }
}

/// Result of following one ray through the object.
#[derive(Clone, Copy, Debug)]
pub struct Traced<T: Real> {
    pub tag: Tag,
    pub refractions: usize,
    /// Whether the first interaction hit the object.
    pub hit_object: bool,
    /// The last ray segment (the leaving ray unless the path ended inside).
    pub last: Ray<T>,
    /// Monitor position of the leaving ray, when it reaches the monitor.
    /// Also set for paths with more than two refractions.
    pub q: Option<Vec2<T>>,
}

/// Forward tracer for one scene.
pub struct SceneTracer<'a, T: Real> {
    scene: &'a Scene<T>,
    bvh: Option<Bvh<T>>,
    monitors: Vec<MonitorPlane<T>>,
    t_eps: T,
}

impl<'a, T: Real> SceneTracer<'a, T> {
    pub fn new(scene: &'a Scene<T>) -> Result<Self> {
        scene.validate()?;
        let bvh = if scene.gt_mesh.triangles.is_empty() { None } else { Some(Bvh::build(&scene.gt_mesh)?) };
        let monitors = (0..scene.view_count()).map(|u| scene.monitor_for(u)).collect::<Result<_>>()?;
        let t_eps = T::lit(1e-6) * if scene.gt_mesh.is_empty() { T::one() } else { scene.gt_mesh.diaglen() };
        Ok(Self { scene, bvh, monitors, t_eps })
    }

    /// Follows `ray` through the object with Snell refraction at every
    /// interface; reflections are not traced. `monitor` receives the last ray.
    pub fn trace_ray(&self, ray: Ray<T>, monitor: &MonitorPlane<T>) -> Traced<T> {
        let eta = self.scene.eta;
        let mut ray = ray;
        let mut count = 0usize;
        let mut t_min = T::zero();
        let mut hit_object = false;
        let mut exhausted = true;
        for _ in 0..TRACE_DEPTH {
            let Some(hit) = self.bvh.as_ref().and_then(|b| b.first_hit(&ray, t_min)) else {
                exhausted = false;
                break;
            };
            hit_object = true;
            let n = self.scene.gt_mesh.face_normal_raw(hit.face as usize).normalized();
            let p = ray.point_at(hit.t);
            let refracted = if ray.dir.dot(n) < T::zero() { refract(ray.dir, n, T::one() / eta) } else { refract(ray.dir, -n, eta) };
            let Ok(dir) = refracted else {
                return Traced { tag: Tag::Tir, refractions: count, hit_object, last: ray, q: None };
            };
            count += 1;
            ray = Ray::new(p, dir);
            t_min = self.t_eps;
        }
        let q = monitor.intersect(&ray);
        let tag = if exhausted || (count != 0 && count != 2) {
            Tag::MoreThanTwo
        } else if q.is_none() {
            Tag::MissedMonitor
        } else if count == 2 {
            Tag::TwoRefraction
        } else {
            Tag::MissedObject
        };
        Traced { tag, refractions: count, hit_object, last: ray, q }
    }

    /// Traces pixel `(i, j)` of view `u`.
    pub fn trace_pixel(&self, u: usize, i: u32, j: u32) -> Result<Traced<T>> {
        let cam = self.scene.camera(u)?;
        if i >= cam.width || j >= cam.height {
            return Err(Error::Invalid(format!("pixel ({i}, {j}) outside the image")));
        }
        Ok(self.trace_ray(cam.pixel_ray(i, j), &self.monitors[u]))
    }

    /// Traces every pixel of view `u`, row-major.
    pub fn trace_view(&self, u: usize) -> Result<Vec<Traced<T>>> {
        let cam = self.scene.camera(u)?;
        let w = cam.width;
        let monitor = &self.monitors[u];
        Ok((0..cam.pixel_count())
            .into_par_iter()
            .map(|k| self.trace_ray(cam.pixel_ray(k as u32 % w, k as u32 / w), monitor))
            .collect())
    }

    pub fn scene(&self) -> &Scene<T> {
        self.scene
    }
}

/// Traces one pixel of view `u`.
pub fn trace_forward<T: Real>(scene: &Scene<T>, u: usize, i: u32, j: u32) -> Result<(Tag, Option<Vec2<T>>)> {
    let t = SceneTracer::new(scene)?.trace_pixel(u, i, j)?;
    Ok((t.tag, t.q.filter(|_| t.tag.carries_q())))
}

/// Correspondence map and silhouette mask of view `u`.
pub fn simulate_view<T: Real>(scene: &Scene<T>, u: usize) -> Result<(CorrespondenceMap<T>, Mask)> {
    simulate_with(&SceneTracer::new(scene)?, u)
}

/// As [`simulate_view`], reusing a tracer across views.
pub fn simulate_with<T: Real>(tracer: &SceneTracer<'_, T>, u: usize) -> Result<(CorrespondenceMap<T>, Mask)> {
    let traced = tracer.trace_view(u)?;
    let cam = tracer.scene.camera(u)?;
    let inside: Vec<bool> = traced.iter().map(|t| t.hit_object).collect();
    let map = CorrespondenceMap {
        view: u as u32,
        width: cam.width,
        height: cam.height,
        res: [tracer.scene.monitor.res_u, tracer.scene.monitor.res_v],
        tags: traced.iter().map(|t| t.tag).collect(),
        q: traced.iter().map(|t| t.q.filter(|_| t.tag.carries_q())).collect(),
    };
    Ok((map, Mask::from_binary(cam.width, cam.height, &inside)))
}
