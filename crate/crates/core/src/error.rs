use thiserror::Error;

use crate::spaces::SpacePoint;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, descriptors or lengths that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// NaN or infinite values where finite numbers are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The barycenter iteration did not reach its stopping tolerance.
    #[error("barycenter solver stopped after {iterations} iterations with residual {residual:e}")]
    Solver {
        iterations: usize,
        residual: f64,
        last: Box<SpacePoint>,
    },

    /// A computation would exceed the configured size cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Failure while solving at a specific grid index.
    #[error("at index {index:?}: {source}")]
    AtIndex {
        index: Vec<i64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Short machine-readable name of the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Numeric(_) => "numeric",
            Error::Domain(_) => "domain",
            Error::Solver { .. } => "solver",
            Error::Resource(_) => "resource",
            Error::AtIndex { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
