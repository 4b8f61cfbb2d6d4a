use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse mesh {path}: {message} (at byte offset {offset})")]
    MeshParse {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    #[error("mesh has no usable faces")]
    EmptyMesh,
    #[error("vertex {index} has a non-finite coordinate")]
    NonFiniteVertex { index: usize },
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("target volume {target:.4} mm^3 exceeds the {max:.4} mm^3 reachable at full gel thickness")]
    VolumeUnreachable { target: f64, max: f64 },
    #[error("sensor rays never intersect the object")]
    NoContact,
    #[error("lookup table coverage too low: {populated} of {total} bins populated")]
    InsufficientCoverage { populated: usize, total: usize },
    #[error("resolution mismatch: expected {expected:?}, got {actual:?}")]
    ResolutionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("closing axis misses the object on the {0} side")]
    NoGraspContact(&'static str),
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("empty sweep axis: {0}")]
    EmptyAxis(&'static str),
    #[error("lookup table file: {0}")]
    TableFormat(String),
    #[error("grid file: {0}")]
    GridFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Stable identifier used in the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MeshParse { .. } => "mesh_parse",
            Error::EmptyMesh => "empty_mesh",
            Error::NonFiniteVertex { .. } => "non_finite_vertex",
            Error::FaceIndexOutOfRange { .. } => "face_index_out_of_range",
            Error::InvalidPose(_) => "invalid_pose",
            Error::InvalidCamera(_) => "invalid_camera",
            Error::InvalidInput(_) => "invalid_input",
            Error::VolumeUnreachable { .. } => "volume_unreachable",
            Error::NoContact => "no_contact",
            Error::InsufficientCoverage { .. } => "insufficient_coverage",
            Error::ResolutionMismatch { .. } => "resolution_mismatch",
            Error::NoGraspContact(_) => "no_grasp_contact",
            Error::DegenerateSamples(_) => "degenerate_samples",
            Error::EmptyAxis(_) => "empty_axis",
            Error::TableFormat(_) => "table_format",
            Error::GridFormat(_) => "grid_format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Image(_) => "image",
        }
    }
}
