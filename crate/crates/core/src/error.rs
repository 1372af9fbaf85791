use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: ‖H − H†‖_F = {residual:.3e} exceeds {bound:.3e}")]
    NotHermitian { residual: f64, bound: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below {bound:.3e}")]
    NotPsd { min_eigenvalue: f64, bound: f64 },

    #[error("trace is not one: |Tr − 1| = {deviation:.3e} exceeds {bound:.3e}")]
    TraceNotOne { deviation: f64, bound: f64 },

    #[error("state vector is not normalized: ‖ψ‖ = {norm}")]
    NotNormalized { norm: f64 },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("Hermitian eigensolver did not converge")]
    NoConvergence,

    #[error("spectral function undefined at eigenvalue {eigenvalue:.6e}")]
    Domain { eigenvalue: f64 },

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("map is not trace preserving: ‖Σ K†K − I‖_F = {residual:.3e}")]
    NotTracePreserving { residual: f64 },

    #[error("trace lost under channel: deficit {deficit:.3e} exceeds allowed {allowed:.3e}")]
    TraceLoss { deficit: f64, allowed: f64 },

    #[error("matrix is not unitary: ‖U†U − I‖_F = {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("finite representation is not closed under products")]
    NotClosed,

    #[error("operation requires a {expected} representation")]
    WrongVariant { expected: &'static str },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("Fock truncation too small: need at least {required} levels, got {got}")]
    GuardBandViolation { required: usize, got: usize },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("closed forms of the relative entropy of asymmetry disagree by {difference:.3e}")]
    ClosedFormMismatch { difference: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
