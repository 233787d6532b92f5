use super::{check_dim, LinSysAlg, SolverOutcome, TraceRecord};
use crate::dense;
use crate::error::{Error, Result};
use crate::oracle::MatVecOracle;
use crate::rng::TrialRng;

/// Stopping rule for [`conjugate_gradient`]. Either limit may be absent; with
/// both absent the run stops only on an exactly zero residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgStop {
    /// Maximum number of products with `A`, including the initial residual
    /// product when `x0 != 0`.
    pub max_queries: Option<usize>,
    /// Stop once `||A x - b|| <= tol * ||b||` (recursive residual).
    pub rel_tol: Option<f64>,
}

/// Plain conjugate gradient on `A x = b` from `x0`. The trace records the
/// residual norm and the curvature `p^T A p / p^T p` of each search
/// direction; nonpositive curvature marks the run as broken down.
pub fn conjugate_gradient<O: MatVecOracle + ?Sized>(
    oracle: &mut O,
    b: &[f64],
    x0: &[f64],
    stop: CgStop,
) -> Result<SolverOutcome> {
    let d = oracle.dim();
    check_dim(d, b.len())?;
    check_dim(d, x0.len())?;
    let start = oracle.query_count();
    let budget = stop.max_queries.unwrap_or(usize::MAX);
    let b_norm = dense::norm2(b);
    let target = stop.rel_tol.map(|t| t * b_norm);
    let mut x = x0.to_vec();
    let mut trace = Vec::new();

    let mut r = if x0.iter().any(|&v| v != 0.0) {
        if budget == 0 {
            return Ok(done(x, 0, trace, false));
        }
        let ax = oracle.query(&x)?;
        dense::sub(b, &ax)
    } else {
        b.to_vec()
    };
    let mut rr = dense::dot(&r, &r);
    let mut p = r.clone();
    let mut breakdown = false;

    loop {
        let used = oracle.query_count() - start;
        let r_norm = rr.sqrt();
        if rr == 0.0 || target.is_some_and(|t| r_norm <= t) || used >= budget {
            break;
        }
        let ap = oracle.query(&p)?;
        let pap = dense::dot(&p, &ap);
        let pp = dense::dot(&p, &p);
        trace.push(TraceRecord {
            iteration: trace.len(),
            residual: r_norm,
            rayleigh: pap / pp,
        });
        if !(pap > 0.0) {
            breakdown = true;
            break;
        }
        let alpha = rr / pap;
        dense::axpy(alpha, &p, &mut x);
        dense::axpy(-alpha, &ap, &mut r);
        let rr_next = dense::dot(&r, &r);
        if !rr_next.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite conjugate gradient iterate at step {}",
                trace.len()
            )));
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let used = oracle.query_count() - start;
    let mut out = done(x, used, trace, breakdown);
    out.trace.push(TraceRecord {
        iteration: out.trace.len(),
        residual: rr.sqrt(),
        rayleigh: f64::NAN,
    });
    Ok(out)
}

fn done(x: Vec<f64>, used: usize, trace: Vec<TraceRecord>, breakdown: bool) -> SolverOutcome {
    SolverOutcome {
        x_hat: Some(x),
        queries_used: used,
        trace,
        breakdown,
        ..SolverOutcome::default()
    }
}

/// Smallest `T` with `2 rho^T <= 1 / sqrt(e * cond)`, `rho = (sqrt(cond)-1)/(sqrt(cond)+1)`.
///
/// The standard CG bound `||e_T||_A <= 2 rho^T ||e_0||_A` together with
/// `||e_0||_A^2 <= lambda_1 ||e_0||^2` then gives the moderate-precision
/// contract `||e_T||_A^2 <= lambda_1 ||e_0||^2 / (e cond)` deterministically.
pub fn contract_iterations(cond: f64) -> usize {
    if cond <= 1.0 {
        return 1;
    }
    let s = cond.sqrt();
    let rate = ((s + 1.0) / (s - 1.0)).ln();
    ((2.0 * (std::f64::consts::E * cond).sqrt()).ln() / rate)
        .ceil()
        .max(1.0) as usize
}

/// CG stopped after a fixed number of products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedCg {
    pub max_queries: usize,
}

impl TruncatedCg {
    /// Enough iterations to meet the moderate-precision contract for every
    /// `A` with `cond(A) <= cond`, plus one product for the initial residual.
    pub fn for_contract(cond: f64) -> Self {
        Self {
            max_queries: contract_iterations(cond) + 1,
        }
    }
}

impl LinSysAlg for TruncatedCg {
    fn solve(
        &self,
        oracle: &mut dyn MatVecOracle,
        b: &[f64],
        x0: &[f64],
        _rng: &mut TrialRng,
    ) -> Result<SolverOutcome> {
        conjugate_gradient(
            oracle,
            b,
            x0,
            CgStop {
                max_queries: Some(self.max_queries),
                rel_tol: None,
            },
        )
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// CG run to a relative residual tolerance; failing to reach it within
/// `max_queries` is an error rather than a silent early exit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedCg {
    pub rel_tol: f64,
    pub max_queries: usize,
}

impl LinSysAlg for CertifiedCg {
    fn solve(
        &self,
        oracle: &mut dyn MatVecOracle,
        b: &[f64],
        x0: &[f64],
        _rng: &mut TrialRng,
    ) -> Result<SolverOutcome> {
        let out = conjugate_gradient(
            oracle,
            b,
            x0,
            CgStop {
                max_queries: Some(self.max_queries),
                rel_tol: Some(self.rel_tol),
            },
        )?;
        let final_residual = out.trace.last().map_or(f64::INFINITY, |t| t.residual);
        if out.breakdown || final_residual > self.rel_tol * dense::norm2(b) {
            return Err(Error::NumericalBreakdown(format!(
                "conjugate gradient reached residual {final_residual:.3e} after {} products, \
                 target {:.3e}",
                out.queries_used,
                self.rel_tol * dense::norm2(b)
            )));
        }
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}
