use super::{EigVecAlg, SolverOutcome, TraceRecord};
use crate::dense;
use crate::error::{Error, Result};
use crate::oracle::MatVecOracle;
use crate::rng::TrialRng;

/// Power iteration from a uniform start: `T` products for the iterations
/// and one more for the final Rayleigh quotient.
pub fn power_method<O: MatVecOracle + ?Sized>(
    oracle: &mut O,
    iterations: usize,
    rng: &mut TrialRng,
) -> Result<SolverOutcome> {
    if iterations == 0 {
        return Err(Error::DomainError("power method needs T >= 1".into()));
    }
    let start = oracle.query_count();
    let d = oracle.dim();
    let mut u = rng.unit_sphere(d);
    let mut w = oracle.query(&u)?;
    let mut trace = Vec::with_capacity(iterations + 1);
    let mut breakdown = false;
    for t in 0..iterations {
        let rho = dense::dot(&u, &w);
        trace.push(TraceRecord {
            iteration: t,
            residual: residual(&w, &u, rho),
            rayleigh: rho,
        });
        let mut next = w.clone();
        if dense::normalize(&mut next) == 0.0 {
            // M u = 0: u is already an eigenvector
            breakdown = true;
            break;
        }
        u = next;
        w = oracle.query(&u)?;
    }
    let rho = dense::dot(&u, &w);
    trace.push(TraceRecord {
        iteration: trace.len(),
        residual: residual(&w, &u, rho),
        rayleigh: rho,
    });
    Ok(SolverOutcome {
        lambda_hat: Some(rho),
        v_hat: Some(u),
        queries_used: oracle.query_count() - start,
        trace,
        breakdown,
        ..SolverOutcome::default()
    })
}

fn residual(w: &[f64], u: &[f64], rho: f64) -> f64 {
    w.iter()
        .zip(u)
        .map(|(wi, ui)| (wi - rho * ui).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct PowerMethod {
    pub iterations: usize,
}

impl EigVecAlg for PowerMethod {
    fn run(&self, oracle: &mut dyn MatVecOracle, rng: &mut TrialRng) -> Result<SolverOutcome> {
        power_method(oracle, self.iterations, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::QueryOracle;
    use crate::spectral::SymmetricMatrix;
    use crate::wishart::sample_wishart;

    #[test]
    fn converges_on_diagonal() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::diag(&[2.0, 1.0]).unwrap());
        let out = power_method(&mut o, 60, &mut TrialRng::from_seed(1)).unwrap();
        assert!((out.lambda_hat.unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(out.queries_used, 61);
        assert_eq!(o.query_count(), 61);
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::identity(4));
        let out = power_method(&mut o, 1, &mut TrialRng::from_seed(2)).unwrap();
        assert!((out.lambda_hat.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_top_eigenvalue() {
        let m = SymmetricMatrix::diag(&[3.0, 3.0, 1.0]).unwrap();
        let mut o = QueryOracle::unlimited(m);
        let out = power_method(&mut o, 60, &mut TrialRng::from_seed(3)).unwrap();
        assert!((out.lambda_hat.unwrap() - 3.0).abs() < 1e-9);
        let v = out.v_hat.unwrap();
        assert!(v[2].abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_propagates() {
        let mut o = QueryOracle::new(SymmetricMatrix::identity(3), Some(3), false).unwrap();
        let err = power_method(&mut o, 5, &mut TrialRng::from_seed(4)).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 3 }));
    }

    #[test]
    fn rayleigh_trace_is_monotone_on_psd() {
        let mut rng = TrialRng::from_seed(5);
        for _ in 0..20 {
            let w = sample_wishart(24, &mut rng).unwrap();
            let mut o = QueryOracle::unlimited(w.w.clone());
            let out = power_method(&mut o, 40, &mut rng).unwrap();
            for pair in out.trace.windows(2) {
                assert!(pair[1].rayleigh >= pair[0].rayleigh - 1e-12);
            }
            let v = out.v_hat.unwrap();
            assert!((dense::norm2(&v) - 1.0).abs() < 1e-12);
        }
    }
}
