use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("SVD did not converge within {max_iter} iterations")]
    SvdNoConvergence { max_iter: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("theta argument {imag} outside the convergence strip |Im u| < {bound}")]
    ConvergenceGuard { imag: f64, bound: f64 },

    #[error("theta product did not converge within {0} factors")]
    TruncationCap(usize),

    #[error("invariant undefined: {0} vanishes")]
    UndefinedInvariant(&'static str),

    #[error("expected {expected} weights, found {found}")]
    ParityMismatch { expected: &'static str, found: &'static str },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("lattice shape not allowed: {0}")]
    LatticeShape(String),

    #[error("sampler failed after {0} restarts")]
    SamplerFailed(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite => "non_finite",
            Error::SvdNoConvergence { .. } => "svd_no_convergence",
            Error::Domain(_) => "domain",
            Error::ConvergenceGuard { .. } => "convergence_guard",
            Error::TruncationCap(_) => "truncation_cap",
            Error::UndefinedInvariant(_) => "undefined_invariant",
            Error::ParityMismatch { .. } => "parity_mismatch",
            Error::SizeGuard(_) => "size_guard",
            Error::LatticeShape(_) => "lattice_shape",
            Error::SamplerFailed(_) => "sampler_failed",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
