use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no HE11 root found in (k, k n_f) for radius {radius} and index {index}")]
    NoGuidedMode { radius: f64, index: f64 },

    #[error("root refinement did not converge: {0}")]
    NonConvergence(String),

    #[error("atom at r = {r} lies inside the fiber of radius {radius}")]
    InvalidPosition { r: f64, radius: f64 },

    #[error("occupied sites {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),

    #[error("matrix {matrix} is not Hermitian (max deviation {deviation:e})")]
    HermiticityViolation { matrix: &'static str, deviation: f64 },

    #[error("matrix {matrix} is not positive semidefinite (smallest eigenvalue {eigenvalue:e})")]
    PsdViolation { matrix: &'static str, eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear system is numerically singular (pivot ratio {0:e})")]
    SingularSystem(f64),

    #[error("{atoms} atoms exceed the register cap of {cap}")]
    DimensionCap { atoms: usize, cap: usize },

    #[error("stationary state is not unique ({0} null vectors)")]
    DegenerateSteadyState(usize),

    #[error("stationary residual {0:e} exceeds tolerance")]
    Residual(f64),

    #[error("SCGF samples are not convex: second difference {worst:e} at s = {at}")]
    NonConvexInput { worst: f64, at: f64 },

    #[error("inverse Radon transform needs at least {needed} angles, got {got}")]
    InsufficientAngles { needed: usize, got: usize },

    #[error("linear algebra backend failed: {0}")]
    Backend(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
