use super::{EigVecAlg, SolverOutcome, TraceRecord};
use crate::dense;
use crate::error::{Error, Result};
use crate::oracle::MatVecOracle;
use crate::rng::TrialRng;
use crate::spectral::eig_tridiagonal;

/// Relative size of the next Lanczos residual below which the Krylov space
/// is treated as invariant.
const BREAKDOWN_TOLERANCE: f64 = 1e-13;

/// `T`-step Lanczos with full (two-pass) reorthogonalization against every
/// previous basis vector. Spends exactly one query per step, so at most `T`
/// in total, and returns both extreme Ritz pairs.
pub fn lanczos<O: MatVecOracle + ?Sized>(
    oracle: &mut O,
    steps: usize,
    rng: &mut TrialRng,
) -> Result<SolverOutcome> {
    let d = oracle.dim();
    if steps == 0 || steps > d {
        return Err(Error::DomainError(format!(
            "Lanczos needs 1 <= T <= d = {d}, got T = {steps}"
        )));
    }
    let start = oracle.query_count();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    basis.push(rng.unit_sphere(d));
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut trace = Vec::with_capacity(steps);
    let mut scale: f64 = 0.0;
    let mut breakdown = false;

    for j in 0..steps {
        let mut w = oracle.query(&basis[j])?;
        let alpha = dense::dot(&basis[j], &w);
        for _pass in 0..2 {
            for q in &basis {
                let c = dense::dot(q, &w);
                dense::axpy(-c, q, &mut w);
            }
        }
        let beta = dense::norm2(&w);
        alphas.push(alpha);
        scale = scale.max(alpha.abs()).max(beta);
        trace.push(TraceRecord {
            iteration: j,
            residual: beta,
            rayleigh: alpha,
        });
        if j + 1 == steps {
            break;
        }
        if beta <= BREAKDOWN_TOLERANCE * scale.max(1.0) {
            breakdown = true;
            break;
        }
        dense::scale_in_place(1.0 / beta, &mut w);
        betas.push(beta);
        basis.push(w);
    }

    let k = alphas.len();
    let ritz = eig_tridiagonal(&alphas, &betas[..k - 1])?;
    let top = ritz_vector(&basis[..k], &ritz.vector(0));
    Ok(SolverOutcome {
        lambda_hat: Some(ritz.lambda_max()),
        lambda_hat_min: Some(ritz.lambda_min()),
        v_hat: Some(top),
        queries_used: oracle.query_count() - start,
        trace,
        breakdown,
        ..SolverOutcome::default()
    })
}

fn ritz_vector(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; basis[0].len()];
    for (q, &c) in basis.iter().zip(coeffs) {
        dense::axpy(c, q, &mut v);
    }
    dense::normalize(&mut v);
    v
}

#[derive(Clone, Copy, Debug)]
pub struct Lanczos {
    pub steps: usize,
}

impl EigVecAlg for Lanczos {
    fn run(&self, oracle: &mut dyn MatVecOracle, rng: &mut TrialRng) -> Result<SolverOutcome> {
        lanczos(oracle, self.steps, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::QueryOracle;
    use crate::spectral::SymmetricMatrix;
    use crate::wishart::sample_wishart;

    #[test]
    fn full_krylov_space_on_diagonal() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::diag(&[3.0, 2.0, 1.0]).unwrap());
        let out = lanczos(&mut o, 3, &mut TrialRng::from_seed(1)).unwrap();
        assert!((out.lambda_hat.unwrap() - 3.0).abs() < 1e-12);
        assert!((out.lambda_hat_min.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(out.queries_used, 3);
    }

    #[test]
    fn one_step_is_the_start_rayleigh_quotient() {
        let m = SymmetricMatrix::diag(&[3.0, 2.0, 1.0]).unwrap();
        let mut rng = TrialRng::from_seed(9);
        let start = rng.clone().unit_sphere(3);
        let rq = m.quadratic_form(&start);
        let mut o = QueryOracle::unlimited(m);
        let out = lanczos(&mut o, 1, &mut rng).unwrap();
        assert!((out.lambda_hat.unwrap() - rq).abs() < 1e-15);
        assert_eq!(out.lambda_hat, out.lambda_hat_min);
    }

    #[test]
    fn exact_at_full_budget_on_wishart() {
        let mut rng = TrialRng::from_seed(2);
        for _ in 0..5 {
            let w = sample_wishart(64, &mut rng).unwrap();
            let mut o = QueryOracle::unlimited(w.w.clone());
            let out = lanczos(&mut o, 64, &mut rng).unwrap();
            assert!((out.lambda_hat_min.unwrap() - w.lambda_min()).abs() < 1e-8);
            assert!((out.lambda_hat.unwrap() - w.spectrum.lambda_max()).abs() < 1e-10);
            assert_eq!(out.queries_used, 64);
        }
    }

    #[test]
    fn invariant_subspace_breakdown() {
        // identity: the first Krylov vector already spans an invariant subspace
        let mut o = QueryOracle::unlimited(SymmetricMatrix::identity(5));
        let out = lanczos(&mut o, 4, &mut TrialRng::from_seed(3)).unwrap();
        assert!(out.breakdown);
        assert_eq!(out.queries_used, 1);
        assert!((out.lambda_hat.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range_steps() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::identity(2));
        assert!(lanczos(&mut o, 0, &mut TrialRng::from_seed(1)).is_err());
        assert!(lanczos(&mut o, 3, &mut TrialRng::from_seed(1)).is_err());
    }
}
