use alloc::string::String;

use crate::model::Plane;

/// Errors raised by the numerical and symbolic pipelines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no crossing of {plane} before t = {max_time}")]
    NoCrossing { plane: Plane, max_time: f64 },

    #[error("tangential crossing of {plane}: normal velocity {velocity:e}")]
    TangencyDetected { plane: Plane, velocity: f64 },

    #[error("orbit left the bounding box max|x_i| <= {bound}")]
    OrbitEscaped { bound: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("unperturbed orbit does not close: defect {defect:e}")]
    OrbitNotClosed { defect: f64 },

    #[error("corner point {corner} could not be solved: residual {residual:e}")]
    CornerSolveFailed { corner: char, residual: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e}")]
    QuadratureNotConverged { estimate: f64 },

    #[error("singular corner matrix {which}: |det| = {det:e}")]
    SingularCornerMatrix { which: &'static str, det: f64 },

    #[error("system is not in planar Hamiltonian form: {0}")]
    FormMismatch(&'static str),

    #[error("shooting diverged after {iterations} iterations (residual {residual:e})")]
    ShootingDiverged { iterations: usize, residual: f64 },

    #[error("shooting left the admissible window at h1 = {h1}")]
    ShootingLeftWindow { h1: f64 },

    #[error("coefficient pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("target polynomial cannot be realized by the given coefficient slots")]
    Unrealizable,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A rank or determinant test landed in the band `[1e-12, 1e-9]`.
    NearDegenerate { what: &'static str, value: f64 },
    /// A corner matrix has condition number above `1e8`.
    IllConditioned { which: &'static str, condition: f64 },
    /// Gradients were obtained by central differences.
    FiniteDifferenceGradient,
    /// Two accepted roots lie closer than ten deduplication radii.
    WindowTooCoarse { distance: f64 },
}
