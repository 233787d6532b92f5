//! A laboratory for the matrix-vector-product query model.
//!
//! The crate hides a symmetric matrix behind a counted oracle, samples the
//! Wishart hard instances whose smallest eigenvalue resists estimation with
//! fewer than `d` queries, runs the Krylov and shift-and-invert solvers that
//! match those limits from above, and checks the conditional-Wishart
//! decoupling numerically.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod quad;
pub mod rng;
pub mod solvers;
pub mod spectral;
pub mod verify;
pub mod wishart;

pub use error::{Error, Result};
pub use oracle::{make_oracle, MatVecOracle, QueryOracle};
pub use rng::TrialRng;
pub use spectral::{eig_sym, Spectrum, SymmetricMatrix};
