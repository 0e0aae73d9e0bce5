//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by channel synthesis, estimation, detection and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied spatial correlation matrix is not positive semidefinite.
    #[error("explicit correlation matrix is not PSD (min eigenvalue {min_eig:.3e})")]
    ExplicitNotPsd { min_eig: f64 },

    /// A matrix expected to be Hermitian failed the symmetry check.
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    /// The Toeplitz temporal Gram matrix could not be factorized even after jitter.
    #[error("temporal correlation Gram matrix is not PSD")]
    TemporalGramNotPsd,

    /// Constellation order not supported for the requested modulation.
    #[error("unsupported constellation order {order} for {kind}")]
    UnsupportedOrder { kind: &'static str, order: usize },

    /// A bit payload had the wrong length.
    #[error("bad payload length: expected {expected} bits, got {got}")]
    BadLength { expected: usize, got: usize },

    /// A symbol value does not belong to the configured constellation.
    #[error("symbol value is not a constellation point")]
    NotInConstellation,

    /// Matrix dimensions do not match what the operation requires.
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    /// The candidate set cardinality exceeds the configured cap.
    #[error("search space of {size} candidates exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    /// Degenerate pilot epoch matrix (requires distinct pilot epochs).
    #[error("pilot epoch matrix is singular (frame length must be positive)")]
    SingularT,

    /// Decision-directed update asked to refresh an antenna whose pseudo-pilot
    /// column carries no energy.
    #[error("rank-deficient truncated pseudo-pilot block (antenna {antenna})")]
    RankDeficientTruncation { antenna: usize },

    /// Cholesky factorization failed even after a jitter retry.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// Detection was invoked with no candidates.
    #[error("empty candidate set")]
    EmptyCandidateSet,

    /// The quadratic-form CDF quadrature exceeded its evaluation budget.
    #[error("quadratic-form CDF integration did not converge within budget")]
    IntegrationNotConverged,

    /// A per-block BER average is missing one of the required block indices.
    #[error("missing block index {index} in per-block average")]
    MissingBlockIndex { index: usize },

    /// Invalid system or scenario configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Scenario file parse failure.
    #[error("scenario parse error: {0}")]
    Parse(String),

    /// Filesystem failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
