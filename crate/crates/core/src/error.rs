//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes do not match the operation's contract.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    /// Coil index outside `[0, ncoils)`.
    #[error("coil index {index} out of range for {ncoils} coils")]
    CoilIndexOutOfRange { index: usize, ncoils: usize },

    /// Image dimensions are not divisible by `2^levels`.
    #[error("dimensions {m}x{n} not divisible by 2^{levels} for the wavelet transform")]
    DimensionNotDivisible { m: usize, n: usize, levels: usize },

    /// Parameter values violate an operation's contract.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A preconditioner diagonal is numerically singular.
    #[error("singular preconditioner: {0}")]
    SingularPreconditioner(String),

    /// The CG recurrence produced a non-finite quantity.
    #[error("non-finite breakdown in pcg at iteration {iteration}")]
    NonfiniteBreakdown { iteration: usize },

    /// `<p, Ap> <= 0`: the operator is not positive definite.
    #[error("indefiniteness detected in pcg at iteration {iteration}: <p, Ap> = {value}")]
    IndefinitenessDetected { iteration: usize, value: f64 },

    /// The sampling budget cannot accommodate the requested fully sampled center.
    #[error("infeasible mask: {0}")]
    InfeasibleMask(String),

    /// The support mask selects no pixels.
    #[error("degenerate support: no pixel exceeds the threshold")]
    DegenerateSupport,

    /// Requested virtual-coil count outside `[1, ncoils]`.
    #[error("keep={keep} out of range for {ncoils} coils")]
    KeepOutOfRange { keep: usize, ncoils: usize },

    /// The FLOP model is defined for power-of-two image sizes only.
    #[error("N = {n} is not a power of two")]
    NonPowerOfTwo { n: u64 },

    /// Dense-oracle request beyond the guard size.
    #[error("dense oracle size N = {n} exceeds cap {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    /// Dense Cholesky factorization failed.
    #[error("dense system is not positive definite")]
    NotPositiveDefinite,

    /// File does not start with the CIMG magic bytes.
    #[error("bad magic: not a CIMG file")]
    BadMagic,

    /// CIMG container version not understood by this reader.
    #[error("unsupported CIMG version {version}")]
    UnsupportedVersion { version: u32 },

    /// File ends before the declared payload is complete.
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    /// Underlying IO failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
