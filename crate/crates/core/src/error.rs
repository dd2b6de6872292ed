use crate::pbh::PbhMode;

pub type Result<T, E = CodesignError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodesignError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no stabilizing solution: Hamiltonian has eigenvalues on or near the imaginary axis (min |Re| = {margin:e})")]
    NoStabilizingSolution { margin: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not Hurwitz (max Re λ = {max_real:e})")]
    NotHurwitz { max_real: f64 },

    #[error("PBH {mode} test failed at eigenvalue {re} + {im}i (rank margin {margin:e})")]
    PbhViolation {
        mode: PbhMode,
        re: f64,
        im: f64,
        margin: f64,
    },

    #[error("matrix is not skew-symmetric (|Ω + Ωᵀ|_F = {0:e})")]
    NotSkew(f64),

    #[error("eigenvalue λ_{index} = {value} is not negative")]
    NonNegativeEigenvalue { index: usize, value: f64 },

    #[error("support block {support:?} is singular (reciprocal condition {rcond:e})")]
    SingularBlock { support: Vec<usize>, rcond: f64 },

    #[error("dimension {n} exceeds the enumeration cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("placement is not an equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },

    #[error("degenerate step: pre-normalization vector has norm {norm:e}")]
    DegenerateStep { norm: f64 },

    #[error("all {starts} starts failed")]
    AllStartsFailed { starts: usize },

    #[error("path {path} diverged at t = {time}")]
    Diverged { path: usize, time: f64 },

    #[error("{diverged} of {total} paths diverged")]
    TooManyDiverged { diverged: usize, total: usize },

    #[error("decomposition failed: {0}")]
    Decomposition(&'static str),
}
