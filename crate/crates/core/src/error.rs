use thiserror::Error;

pub type SimResult<T> = Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    /// A mathematical precondition was violated (nonpositive mass,
    /// coincident points where a kernel is singular, index out of range).
    #[error("domain error: {0}")]
    Domain(String),

    /// An experiment or species configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The iterative field solver failed to reach its residual target.
    #[error("field solver did not converge: residual {residual:.3e} > tolerance {tolerance:.3e} after {iterations} iterations")]
    SolverDiverged {
        residual: f64,
        tolerance: f64,
        iterations: usize,
    },

    /// A particle position became non-finite during propagation.
    #[error("particle {id} produced a non-finite position during a step")]
    NonFiniteState { id: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
