//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("operands live on different lattices")]
    LatticeMismatch,
    #[error("zero function where a normalizable one is required")]
    ZeroFunction,
}

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("ball radius {ell} does not contain the scaled potential support {support}")]
    EllTooSmall { ell: f64, support: f64 },
    #[error("no eigenvalue bracket found below {lambda_max}")]
    BracketNotFound { lambda_max: f64 },
    #[error("limiting kernel is singular at x = 0; use the lattice regularization")]
    OmegaSingularity,
}

#[derive(Debug, Error)]
pub enum CondensateError {
    #[error("initial state must have positive L2 norm")]
    ZeroInitialState,
    #[error("time step and horizon must be positive")]
    InvalidTimeGrid,
    #[error("requested time {t} is not on the stored trajectory grid")]
    TimeNotOnGrid { t: f64 },
}

#[derive(Debug, Error)]
pub enum KernelFamilyError {
    #[error("condensate orbital must be L2-normalized (got {norm})")]
    UnnormalizedOrbital { norm: f64 },
    #[error("kernel family is missing the `{0}` member")]
    MissingMember(&'static str),
}

#[derive(Debug, Error)]
pub enum BogoliubovError {
    #[error("symplectic defect {defect} exceeds {limit}; reduce the time step")]
    PropagationFailure { defect: f64, limit: f64 },
    #[error(transparent)]
    Family(#[from] KernelFamilyError),
}

#[derive(Debug, Error)]
pub enum FockError {
    #[error("Fock dimension {dim} exceeds the configured limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },
    #[error("generator is not hermitian (defect {defect})")]
    NonHermitianGenerator { defect: f64 },
    #[error("shape mismatch between coefficient matrices and mode count")]
    ShapeMismatch,
    #[error("cutoff leakage {leakage} above {limit}: verdict inconclusive, raise n_max")]
    Inconclusive { leakage: f64, limit: f64 },
}

#[derive(Debug, Error)]
pub enum CltError {
    #[error("inputs refer to different times")]
    TimeMismatch,
    #[error("covariance matrix is singular; Gaussian density undefined")]
    SingularCovariance,
    #[error("test-function transform fails the integrability precondition: {0}")]
    NonIntegrableTransform(String),
    #[error("empty observable list")]
    EmptyObservables,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a kernel snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("snapshot payload truncated")]
    Truncated,
    #[error(transparent)]
    Grid(#[from] GridError),
}
