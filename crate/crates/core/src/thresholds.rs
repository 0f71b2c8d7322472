//! Default pass/fail thresholds shared by the CLI, the tests and the
//! acceptance suite.

/// Normalized Yang-Baxter residuals.
pub const RESIDUAL: f64 = 1e-10;

/// Relative singular-value cutoff for kernel detection.
pub const KERNEL: f64 = 1e-8;

/// Relative commutator norms of transfer matrices.
pub const COMMUTATOR: f64 = 1e-9;

/// Relative agreement between two partition-function backends.
pub const ENUMERATION_AGREEMENT: f64 = 1e-11;

/// Imaginary parts below this are treated as rounding noise.
pub const REALNESS: f64 = 1e-10;

/// Negative controls must exceed this.
pub const CONTROL: f64 = 1e-3;

/// Free-fermion and Krinsky-invariant residuals of sampled points.
pub const SAMPLER: f64 = 1e-9;

/// A partition function counts as vanishing below this fraction of its scale.
pub const VANISHING: f64 = 1e-12;
