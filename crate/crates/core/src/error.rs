use thiserror::Error;

/// Errors raised by the analytic and numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quaternion is singular (|a|^2 + |b|^2 = {det:e})")]
    SingularQuaternion { det: f64 },

    #[error("degenerate quadratic: |c| = 1 and d = 0 give a double root u1 = u2")]
    DegenerateQuadratic,

    #[error("c = 0: use the dedicated c = 0 formula")]
    ZeroC,

    #[error("|c| = 1, d = 0 lies on the unit-circle singularity of the unitary Green's function")]
    OnUnitCircleSingularity,

    #[error("|z| = 1 lies on the support of the CUE spectrum")]
    OnUnitCircle,

    #[error("c = 0 branch has no solution for |b| = {b_abs} (requires 0 < |b| <= 1/2)")]
    NoBlueAtZeroC { b_abs: f64 },

    #[error("nonlinear solve did not converge (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },

    #[error("finite-difference stencil failed at ({x}, {y}): {reason}")]
    StencilFailure { x: f64, y: f64, reason: String },

    #[error("no border crossing found along the ray")]
    NoBracket,

    #[error("denominator 2p^2*omega - x collapsed ({value:e})")]
    DenominatorCollapse { value: f64 },

    #[error("no cubic root satisfies the branch rule at ({x}, {y})")]
    NoValidRoot { x: f64, y: f64 },

    #[error("density denominator vanishes")]
    DensityDenominatorZero,

    #[error("eigenvalue iteration failed to converge after {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },

    #[error("eigenvector basis is ill-conditioned (condition estimate {condition:e})")]
    IllConditionedEigenbasis { condition: f64 },

    #[error("eigenvalue cloud is empty")]
    EmptyCloud,

    #[error("eigensolver failed on sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
