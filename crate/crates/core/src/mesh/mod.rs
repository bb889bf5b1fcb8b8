//! Triangle meshes: adjacency, I/O, builtin shapes, silhouette edges and
//! isotropic remeshing.

pub mod io;
mod remesh;
pub mod shapes;
mod silhouette;
mod trimesh;

pub use remesh::{remesh, target_length, RemeshParams, FINEST_FRACTION};
pub use silhouette::{silhouette_edges, SilhouetteEdge};
pub use trimesh::{MeshStats, Topology, TriMesh};
