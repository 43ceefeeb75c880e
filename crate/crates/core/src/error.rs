use std::path::PathBuf;

use thiserror::Error;

/// Which mesh invariant a validation failure broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    /// Edge used by a single face.
    OpenBoundary,
    /// Edge used by three or more faces.
    NonManifoldEdge,
    /// Vertex whose incident faces do not form one fan.
    NonManifoldVertex,
    /// Two faces traverse a shared edge in the same direction.
    InconsistentOrientation,
    /// Face with repeated vertex indices or zero area.
    DegenerateFace,
    /// Face index outside the vertex range.
    IndexOutOfRange,
    /// Vertex not referenced by any face.
    IsolatedVertex,
    /// More than one connected component.
    Disconnected,
    /// Strict triangle inequality fails for a face's edge lengths.
    TriangleInequality,
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Defect::OpenBoundary => "open boundary edge",
            Defect::NonManifoldEdge => "non-manifold edge",
            Defect::NonManifoldVertex => "non-manifold vertex",
            Defect::InconsistentOrientation => "inconsistent face orientation",
            Defect::DegenerateFace => "degenerate face",
            Defect::IndexOutOfRange => "vertex index out of range",
            Defect::IsolatedVertex => "isolated vertex",
            Defect::Disconnected => "disconnected surface",
            Defect::TriangleInequality => "triangle inequality violated",
        };
        f.write_str(s)
    }
}

/// Kind of simplex an error points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simplex {
    Vertex,
    Edge,
    Face,
}

impl std::fmt::Display for Simplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Simplex::Vertex => "vertex",
            Simplex::Edge => "edge",
            Simplex::Face => "face",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{defect} at {simplex} {index}")]
    Validation {
        defect: Defect,
        simplex: Simplex,
        index: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Short machine-readable tag used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::InvalidInput(_) => "invalid_input",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything the
    /// caller can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that every entry of a per-vertex field is finite and that the field has
/// the expected length.
pub(crate) fn check_field(name: &str, values: &[f64], len: usize) -> Result<()> {
    if values.len() != len {
        return Err(Error::invalid(format!(
            "{name} has {} entries, expected {len}",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} is not finite at vertex {i}")));
    }
    Ok(())
}
