use std::path::PathBuf;

/// Errors produced by the simulator, optimizer and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("span matrix is ill-conditioned (cond = {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("relative flow speed {speed:.4} m/s at element {element} is below the model floor")]
    ModelStall { element: usize, speed: f64 },

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("wake meshes are not index-aligned: {left} vs {right} vertices")]
    MeshMismatch { left: usize, right: usize },

    #[error("infeasible candidate: {0}")]
    Infeasible(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::ModelStall { .. }
                | Error::NonFinite { .. }
                | Error::Infeasible(_)
                | Error::DegenerateGeometry(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
