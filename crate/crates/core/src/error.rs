use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies behind the camera")]
    BehindCamera,
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error("mesh has no vertices or triangles")]
    EmptyMesh,
    #[error("mesh is not a closed manifold: {0}")]
    NonManifold(String),
    #[error("remeshing could not preserve manifoldness: {0}")]
    RemeshFailed(String),
    #[error("value {index} does not fit in {bits} bits")]
    OutOfRange { index: u64, bits: u32 },
    #[error("space carving removed every voxel")]
    AllCarved,
    #[error("occupancy grid has no surface to extract")]
    NoSurface,
    #[error("refraction path broke under the perturbed vertices")]
    PathBroken,
    #[error("buffer lengths differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("view sampling needs at least 9 views, got {0}")]
    TooFewViews(usize),
    #[error("non-finite gradient at vertex {0}")]
    NonFiniteGradient(usize),
    #[error("invalid view id {0}")]
    InvalidView(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed {format} data: {msg}")]
    Format { format: &'static str, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(format: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { format, msg: msg.into() }
    }
}
