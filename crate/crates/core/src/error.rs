use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coupling outside the physical domain: {0}")]
    Domain(String),

    #[error("catalog error in {source_name} (line {line}): {message}")]
    Catalog {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("no catalog available for setting (N={n}, d={d})")]
    UnknownSetting { n: usize, d: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("basis expansion did not converge: last shift {shift:.3e} at basis sizes {sizes:?}")]
    NotConverged {
        shift: f64,
        sizes: Vec<usize>,
        best: Box<crate::spectral::Spectrum>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::NotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
