//! Error type shared by all solver stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Problem data rejected at construction (parameter ranges, finiteness).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// One of the data assumptions (inf b > 0, inf c > 0, inf c - (eps2/2)b' > 0)
    /// fails on the sampling grid.
    #[error("data assumption violated: {inequality} at x = {x} (value {value})")]
    AssumptionViolated {
        inequality: &'static str,
        x: f64,
        value: f64,
    },

    /// A coefficient returned a non-finite value.
    #[error("non-finite coefficient sample: {0}")]
    NonFiniteSample(String),

    /// Argument outside an operation's documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Layer elements would overlap (left breakpoint at or past the right one).
    #[error("mesh collision: {0}")]
    MeshCollision(String),

    /// LU factorization found no pivot; indicates an assembly or mesh bug
    /// since coercivity guarantees a nonsingular system.
    #[error("singular linear system (dof = {0})")]
    SingularSystem(usize),

    /// Solved system failed the scaled residual post-check.
    #[error("linear solve residual check failed: scaled residual {0:.3e} > 1e-10")]
    ResidualCheck(f64),

    /// Energy norm of the truth is zero; relative error undefined.
    #[error("degenerate truth: zero energy norm")]
    ZeroTruthNorm,

    /// Rate fitting needs at least four usable rows.
    #[error("insufficient data for rate fit: {0} usable rows, need at least 4")]
    InsufficientData(usize),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
