//! Numerical laboratory for the even and odd eight-vertex models with
//! arrow-reversal symmetric weights.
//!
//! The crate builds the 4×4 Lax operators and R-matrices of both vertex
//! families, parameterizes the weights with Jacobi theta functions, forms row
//! transfer matrices for uniform and staggered chains, and evaluates every
//! integrability statement about them (Yang-Baxter residuals, commuting
//! transfer families, staggered partition-function equivalences, the
//! free-fermion and Krinsky manifolds) on small lattices.
//!
//! Basis conventions are fixed throughout: a two-state edge carries index 0
//! for an arrow pointing right (horizontal edge) or up (vertical edge), and a
//! Lax operator acts on `auxiliary ⊗ quantum` with the auxiliary (horizontal)
//! factor first, so the composite index is `2·aux + quantum`.

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod thresholds;
pub mod transfer;
pub mod weights;

pub use error::{Error, Result};
pub use linalg::{C64, SquareMatrix};
pub use weights::{Parity, WeightsEight, WeightsSym};
