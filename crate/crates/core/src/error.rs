use thiserror::Error;

/// Errors produced across the gaze pipeline.
#[derive(Debug, Error)]
pub enum GazeError {
    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested configuration is not geometrically realizable.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// An iterative solver failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("no ellipse found: {0}")]
    NoEllipseFound(String),
    #[error("tracking lost after {frames} consecutive low-confidence frames")]
    TrackingLost { frames: usize },
    #[error("crop not found: peak score {score:.4} below threshold {threshold:.4}")]
    CropNotFound { score: f64, threshold: f64 },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GazeError {
    /// Process exit code used by the `gaze` binary: 2 for configuration
    /// problems, 3 for everything data related.
    pub fn exit_code(&self) -> i32 {
        match self {
            GazeError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, GazeError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GazeError::Domain(msg.into()))
}

pub(crate) fn geometry<T>(msg: impl Into<String>) -> Result<T> {
    Err(GazeError::Geometry(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(GazeError::Config(msg.into()))
}
