use thiserror::Error;

/// Errors raised by the simulator, metrics, loss and optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaserError {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotUnit { trace: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("joint state dimension {0} is not even")]
    OddJointDimension(usize),

    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(
        "truncation overflow{}: population {population:e} in the top Fock levels",
        collision.map(|k| format!(" at collision {k}")).unwrap_or_default()
    )]
    TruncationOverflow {
        collision: Option<usize>,
        population: f64,
    },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("objective evaluation failed at coordinate {coordinate}: {source}")]
    Gradient {
        coordinate: usize,
        #[source]
        source: Box<MaserError>,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),
}

impl MaserError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            MaserError::TruncationOverflow { .. } | MaserError::EigenNoConvergence => true,
            MaserError::Gradient { source, .. } => source.is_numerical(),
            MaserError::Optimization(_) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, MaserError>;
