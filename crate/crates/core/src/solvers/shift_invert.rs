use super::{CertifiedCg, EigVecAlg, LinSysAlg, ShiftParams, SolverOutcome, TraceRecord};
use crate::dense;
use crate::error::{Error, Result};
use crate::oracle::{MatVecOracle, ShiftedOracle};
use crate::rng::TrialRng;

/// Constant `C` in the default round count `R = ceil(C ln(1/eps) / gap_alpha)`.
pub const DEFAULT_ROUND_CONSTANT: f64 = 8.0;

/// Oracle for `A = sigma I - M` with the shift fixed by `sp`.
pub fn shift_oracle<O: MatVecOracle + ?Sized>(o: &mut O, sp: ShiftParams) -> ShiftedOracle<'_, O> {
    ShiftedOracle::new(o, sp.sigma())
}

impl ShiftParams {
    /// Per-round relative error the inner solver has to reach:
    /// `eps * gap_alpha / 5`.
    pub fn inner_tolerance(&self, eps: f64) -> f64 {
        eps * self.gap_alpha() / 5.0
    }

    pub fn default_rounds(&self, eps: f64, constant: f64) -> usize {
        ((constant * (1.0 / eps).ln()) / self.gap_alpha())
            .ceil()
            .max(1.0) as usize
    }

    /// CG with a residual target strong enough to certify the inner
    /// tolerance: `||x - x*|| <= ||r|| / lambda_min(A)` with
    /// `lambda_min(A) >= gap` and `||A^{-1} b|| >= ||b|| / sigma`.
    pub fn certified_inner(&self, eps: f64, d: usize) -> CertifiedCg {
        CertifiedCg {
            rel_tol: self.inner_tolerance(eps) * self.gap_param / self.sigma(),
            max_queries: 50 * d + 200,
        }
    }
}

/// Power iteration on `A^{-1}`, each round approximated by `inner`.
///
/// With a `subspace` basis (orthonormal), the start vector is uniform on the
/// unit sphere of its span. `lambda_hat` is `v^T M v` and costs one query.
pub fn shift_invert_eig<O: MatVecOracle + ?Sized>(
    oracle: &mut O,
    sp: ShiftParams,
    rounds: usize,
    inner: &dyn LinSysAlg,
    subspace: Option<&[Vec<f64>]>,
    rng: &mut TrialRng,
) -> Result<SolverOutcome> {
    if rounds == 0 {
        return Err(Error::DomainError("shift-and-invert needs R >= 1".into()));
    }
    let d = oracle.dim();
    let start = oracle.query_count();
    let mut u = match subspace {
        None => rng.unit_sphere(d),
        Some(basis) => {
            let mut u = vec![0.0; d];
            for q in basis {
                super::check_dim(d, q.len())?;
                dense::axpy(rng.gaussian(), q, &mut u);
            }
            if dense::normalize(&mut u) == 0.0 {
                return Err(Error::DomainError("empty start subspace".into()));
            }
            u
        }
    };
    let zeros = vec![0.0; d];
    let mut trace = Vec::with_capacity(rounds);
    let mut breakdown = false;
    for round in 0..rounds {
        let mut inner_rng = rng.fork(round as u64);
        let mut a = shift_oracle(oracle, sp);
        let out = inner
            .solve(&mut a, &u, &zeros, &mut inner_rng)
            .map_err(|e| Error::InnerSolveFailed {
                round,
                source: Box::new(e),
            })?;
        let mut x = out.x_hat.unwrap_or_default();
        let rayleigh = dense::dot(&u, &x);
        trace.push(TraceRecord {
            iteration: round,
            residual: out.trace.last().map_or(f64::NAN, |t| t.residual),
            rayleigh,
        });
        if dense::normalize(&mut x) == 0.0 {
            breakdown = true;
            break;
        }
        u = x;
    }
    let mu = oracle.query(&u)?;
    Ok(SolverOutcome {
        lambda_hat: Some(dense::dot(&u, &mu)),
        v_hat: Some(u),
        queries_used: oracle.query_count() - start,
        trace,
        breakdown,
        ..SolverOutcome::default()
    })
}

/// [`shift_invert_eig`] packaged as an eigenvector algorithm.
pub struct ShiftInvert<L: LinSysAlg> {
    pub params: ShiftParams,
    pub rounds: usize,
    pub inner: L,
    pub subspace: Option<Vec<Vec<f64>>>,
}

impl<L: LinSysAlg> EigVecAlg for ShiftInvert<L> {
    fn run(&self, oracle: &mut dyn MatVecOracle, rng: &mut TrialRng) -> Result<SolverOutcome> {
        shift_invert_eig(
            oracle,
            self.params,
            self.rounds,
            &self.inner,
            self.subspace.as_deref(),
            rng,
        )
    }
}
