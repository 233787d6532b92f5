//! Query-model solvers. Each consumes only a [`MatVecOracle`].
//!
//! Eigen-solvers implement [`EigVecAlg`], linear-system solvers implement
//! [`LinSysAlg`]; the wrappers ([`Bootstrapped`], [`boost_restarts`],
//! [`ShiftInvert`]) compose them without ever touching the hidden matrix.

mod bootstrap;
mod cg;
mod lanczos;
mod power;
mod shift_invert;

pub use bootstrap::{boost_restarts, bootstrap_solve, BootstrapSchedule, Bootstrapped};
pub use cg::{conjugate_gradient, contract_iterations, CertifiedCg, CgStop, TruncatedCg};
pub use lanczos::{lanczos, Lanczos};
pub use power::{power_method, PowerMethod};
pub use shift_invert::{shift_invert_eig, shift_oracle, ShiftInvert, DEFAULT_ROUND_CONSTANT};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::MatVecOracle;
use crate::rng::TrialRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub residual: f64,
    pub rayleigh: f64,
}

/// What a solver returns. Fields that do not apply stay `None`.
#[derive(Clone, Debug, Default)]
pub struct SolverOutcome {
    /// Estimate of the top eigenvalue.
    pub lambda_hat: Option<f64>,
    /// Estimate of the bottom eigenvalue (Lanczos only).
    pub lambda_hat_min: Option<f64>,
    pub v_hat: Option<Vec<f64>>,
    pub x_hat: Option<Vec<f64>>,
    pub queries_used: usize,
    pub trace: Vec<TraceRecord>,
    /// An exact invariant subspace or a zero iterate stopped the run early.
    pub breakdown: bool,
}

/// A randomized algorithm returning an approximate top eigenvector.
pub trait EigVecAlg: Sync {
    fn run(&self, oracle: &mut dyn MatVecOracle, rng: &mut TrialRng) -> Result<SolverOutcome>;
}

/// A randomized algorithm returning an approximate solution of `A x = b`
/// started from `x0`.
pub trait LinSysAlg: Sync {
    fn solve(
        &self,
        oracle: &mut dyn MatVecOracle,
        b: &[f64],
        x0: &[f64],
        rng: &mut TrialRng,
    ) -> Result<SolverOutcome>;

    /// True when the output does not depend on `rng`. Independent copies of
    /// such an algorithm are identical, so wrappers may run just one.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Class parameters `(gap, alpha)` and the shift-and-invert constants they
/// induce.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftParams {
    pub gap_param: f64,
    pub alpha: f64,
}

impl ShiftParams {
    pub fn new(gap_param: f64, alpha: f64) -> Result<Self> {
        if !(gap_param > 0.0 && gap_param < 1.0) {
            return Err(Error::DomainError(format!(
                "gap parameter must lie in (0, 1), got {gap_param}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::DomainError(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { gap_param, alpha })
    }

    /// `1 / (3 + 4 alpha)`: guaranteed lower bound on `gap(A^{-1})`.
    pub fn gap_alpha(&self) -> f64 {
        1.0 / (3.0 + 4.0 * self.alpha)
    }

    /// `1/gap + (1 + alpha)`: guaranteed upper bound on `cond(A)`.
    pub fn cond_alpha(&self) -> f64 {
        1.0 / self.gap_param + (1.0 + self.alpha)
    }

    /// Shift `sigma` in `A = sigma I - M`.
    pub fn sigma(&self) -> f64 {
        1.0 + (1.0 + self.alpha) * self.gap_param
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionError { expected, got });
    }
    Ok(())
}
