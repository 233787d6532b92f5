use super::{check_dim, EigVecAlg, LinSysAlg, SolverOutcome, TraceRecord};
use crate::dense;
use crate::error::{Error, Result};
use crate::oracle::MatVecOracle;
use crate::rng::TrialRng;

/// Restart count `k = ceil(ln(1/eps))` and copies per restart
/// `q = ceil(ln(ln(1/eps) / delta))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapSchedule {
    pub restarts: usize,
    pub copies: usize,
}

impl BootstrapSchedule {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("eps", eps), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::DomainError(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        let log_eps = (1.0 / eps).ln();
        let restarts = log_eps.ceil().max(1.0) as usize;
        let copies = (log_eps / delta).ln().ceil().max(1.0) as usize;
        Ok(Self { restarts, copies })
    }

    /// Products spent by a base algorithm using `base_queries` per call:
    /// `k (q T + q)` for `q > 1`, `k T` otherwise.
    pub fn query_bound(&self, base_queries: usize, deterministic: bool) -> usize {
        let q = if deterministic { 1 } else { self.copies };
        let select = if q > 1 { q } else { 0 };
        self.restarts * (q * base_queries + select)
    }
}

/// Bootstrapped solve of `A x = b` from `x0` (see [`BootstrapSchedule`]).
///
/// Each restart runs `q` independent copies of `base` from the current
/// iterate and keeps the one with the smallest `f(x) = x^T A x / 2 - b^T x`,
/// which costs one product per copy. A deterministic base yields identical
/// copies, so only one is run and no selection product is spent.
pub fn bootstrap_solve<O: MatVecOracle + ?Sized>(
    base: &dyn LinSysAlg,
    mut oracle: &mut O,
    b: &[f64],
    x0: &[f64],
    schedule: BootstrapSchedule,
    rng: &mut TrialRng,
) -> Result<SolverOutcome> {
    let d = oracle.dim();
    check_dim(d, b.len())?;
    check_dim(d, x0.len())?;
    let start = oracle.query_count();
    let copies = if base.is_deterministic() {
        1
    } else {
        schedule.copies
    };
    let mut x = x0.to_vec();
    let mut trace = Vec::with_capacity(schedule.restarts);
    for restart in 0..schedule.restarts {
        let seed = rng.next_u64();
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for j in 0..copies {
            let mut copy_rng = TrialRng::for_trial(seed, "bootstrap-copy", j as u64);
            let out = base.solve(&mut oracle, b, &x, &mut copy_rng)?;
            let residual = out.trace.last().map_or(f64::NAN, |t| t.residual);
            let xj = out.x_hat.ok_or_else(|| {
                Error::NumericalBreakdown("base solver returned no iterate".into())
            })?;
            let f = if copies > 1 {
                let ax = oracle.query(&xj)?;
                0.5 * dense::dot(&xj, &ax) - dense::dot(b, &xj)
            } else {
                f64::NAN
            };
            let better = match &best {
                None => true,
                Some((fb, _, _)) => f < *fb,
            };
            if better {
                best = Some((f, xj, residual));
            }
        }
        let (f, xb, residual) = best.expect("at least one copy");
        trace.push(TraceRecord {
            iteration: restart,
            residual,
            rayleigh: f,
        });
        x = xb;
    }
    Ok(SolverOutcome {
        x_hat: Some(x),
        queries_used: oracle.query_count() - start,
        trace,
        ..SolverOutcome::default()
    })
}

/// [`bootstrap_solve`] packaged as a linear-system algorithm.
#[derive(Clone, Debug)]
pub struct Bootstrapped<B: LinSysAlg> {
    pub base: B,
    pub schedule: BootstrapSchedule,
}

impl<B: LinSysAlg> LinSysAlg for Bootstrapped<B> {
    fn solve(
        &self,
        oracle: &mut dyn MatVecOracle,
        b: &[f64],
        x0: &[f64],
        rng: &mut TrialRng,
    ) -> Result<SolverOutcome> {
        bootstrap_solve(&self.base, oracle, b, x0, self.schedule, rng)
    }

    fn is_deterministic(&self) -> bool {
        self.base.is_deterministic()
    }
}

/// Runs `L` independent copies of `alg` and keeps the vector with the largest
/// Rayleigh quotient (one extra product per copy; ties go to the lower
/// index). Copy `j` draws from a stream that depends only on `j` and one
/// value taken from `rng`, so the copies of a run with `L` restarts are a
/// prefix of those with `L' > L`.
pub fn boost_restarts<O: MatVecOracle + ?Sized>(
    alg: &dyn EigVecAlg,
    mut oracle: &mut O,
    copies: usize,
    rng: &mut TrialRng,
) -> Result<SolverOutcome> {
    if copies == 0 {
        return Err(Error::DomainError("boost_restarts needs L >= 1".into()));
    }
    let start = oracle.query_count();
    let seed = rng.next_u64();
    let mut best: Option<(f64, SolverOutcome)> = None;
    let mut trace = Vec::with_capacity(copies);
    for j in 0..copies {
        let mut copy_rng = TrialRng::for_trial(seed, "boost-copy", j as u64);
        let out = alg.run(&mut oracle, &mut copy_rng)?;
        let v = out
            .v_hat
            .as_ref()
            .ok_or_else(|| Error::NumericalBreakdown("eigen-solver returned no vector".into()))?;
        let mv = oracle.query(v)?;
        let rq = dense::dot(v, &mv);
        trace.push(TraceRecord {
            iteration: j,
            residual: f64::NAN,
            rayleigh: rq,
        });
        if best.as_ref().is_none_or(|(b, _)| rq > *b) {
            best = Some((rq, out));
        }
    }
    let (rq, mut out) = best.expect("at least one copy");
    out.lambda_hat = Some(rq);
    out.queries_used = oracle.query_count() - start;
    out.trace = trace;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::QueryOracle;
    use crate::solvers::{PowerMethod, TruncatedCg};
    use crate::spectral::{random_spd, suboptimality, QuadraticProblem, SymmetricMatrix};

    /// Solves exactly from white-box access; only for exercising the wrapper.
    struct Exact(SymmetricMatrix);

    impl LinSysAlg for Exact {
        fn solve(
            &self,
            _oracle: &mut dyn MatVecOracle,
            b: &[f64],
            _x0: &[f64],
            _rng: &mut TrialRng,
        ) -> Result<SolverOutcome> {
            Ok(SolverOutcome {
                x_hat: Some(dense::solve(self.0.as_matrix(), b)?),
                ..SolverOutcome::default()
            })
        }
    }

    #[test]
    fn schedule_formulae() {
        let s = BootstrapSchedule::new((-10.0f64).exp(), 0.1).unwrap();
        assert_eq!(s.restarts, 10);
        assert_eq!(s.copies, (100.0f64).ln().ceil() as usize);
        assert_eq!(s.query_bound(5, false), 10 * (5 * s.copies + s.copies));
        assert_eq!(s.query_bound(5, true), 50);
        assert!(BootstrapSchedule::new(1.0, 0.1).is_err());
    }

    #[test]
    fn exact_base_is_exact_after_one_restart() {
        let a = SymmetricMatrix::diag(&[4.0, 2.0, 1.0]).unwrap();
        let b = vec![1.0, 1.0, 1.0];
        let mut o = QueryOracle::unlimited(a.clone());
        let sched = BootstrapSchedule {
            restarts: 1,
            copies: 1,
        };
        let out = bootstrap_solve(
            &Exact(a),
            &mut o,
            &b,
            &[0.0; 3],
            sched,
            &mut TrialRng::from_seed(1),
        )
        .unwrap();
        assert_eq!(out.x_hat.unwrap(), vec![0.25, 0.5, 1.0]);
        assert_eq!(out.queries_used, 0);
    }

    #[test]
    fn selection_discards_a_corrupted_copy() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        // the second copy of every restart is far off
        struct OneBad(SymmetricMatrix, AtomicUsize);
        impl LinSysAlg for OneBad {
            fn solve(
                &self,
                _o: &mut dyn MatVecOracle,
                b: &[f64],
                _x0: &[f64],
                _rng: &mut TrialRng,
            ) -> Result<SolverOutcome> {
                let call = self.1.fetch_add(1, Ordering::Relaxed);
                let mut x = dense::solve(self.0.as_matrix(), b)?;
                if call % 3 == 1 {
                    x.iter_mut().for_each(|v| *v += 100.0);
                }
                Ok(SolverOutcome {
                    x_hat: Some(x),
                    ..SolverOutcome::default()
                })
            }
        }
        let a = SymmetricMatrix::diag(&[3.0, 1.0]).unwrap();
        let b = vec![3.0, 1.0];
        let sched = BootstrapSchedule {
            restarts: 4,
            copies: 3,
        };
        let mut o = QueryOracle::unlimited(a.clone());
        let out = bootstrap_solve(
            &OneBad(a, AtomicUsize::new(0)),
            &mut o,
            &b,
            &[0.0; 2],
            sched,
            &mut TrialRng::from_seed(5),
        )
        .unwrap();
        let x = out.x_hat.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert_eq!(out.queries_used, 4 * 3);
    }

    #[test]
    fn truncated_cg_contracts() {
        let mut rng = TrialRng::from_seed(8);
        let sched = BootstrapSchedule::new((-10.0f64).exp(), 0.1).unwrap();
        let base = TruncatedCg { max_queries: 10 };
        let a = random_spd(64, 100.0, &mut rng);
        let b = rng.gaussian_vec(64);
        let x0 = rng.gaussian_vec(64);
        let p = QuadraticProblem::new(a.clone(), b.clone(), x0.clone()).unwrap();
        let mut o = QueryOracle::unlimited(a);
        let out = bootstrap_solve(&base, &mut o, &b, &x0, sched, &mut rng).unwrap();
        assert!(
            suboptimality(&p, out.x_hat.as_ref().unwrap())
                <= (-10.0f64).exp() * suboptimality(&p, &x0)
        );
        assert_eq!(out.queries_used, o.query_count());
        assert!(out.queries_used <= sched.query_bound(10, true));
    }

    #[test]
    fn boost_single_copy_matches_plain_run() {
        let m = SymmetricMatrix::diag(&[2.0, 1.0, 0.5]).unwrap();
        let alg = PowerMethod { iterations: 5 };
        let mut rng = TrialRng::from_seed(3);
        let mut o = QueryOracle::unlimited(m.clone());
        let boosted = boost_restarts(&alg, &mut o, 1, &mut rng.clone()).unwrap();
        let seed = rng.next_u64();
        let mut o2 = QueryOracle::unlimited(m);
        let plain = alg
            .run(&mut o2, &mut TrialRng::for_trial(seed, "boost-copy", 0))
            .unwrap();
        assert_eq!(boosted.v_hat, plain.v_hat);
        assert_eq!(boosted.queries_used, plain.queries_used + 1);
    }

    #[test]
    fn boost_picks_largest_rayleigh_quotient() {
        struct Fixed;
        impl EigVecAlg for Fixed {
            fn run(&self, _o: &mut dyn MatVecOracle, rng: &mut TrialRng) -> Result<SolverOutcome> {
                // picks e1 (value 0.9) or e2 (value 0.99) at random
                let v = if rng.uniform() < 0.5 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                };
                Ok(SolverOutcome {
                    v_hat: Some(v),
                    ..SolverOutcome::default()
                })
            }
        }
        let m = SymmetricMatrix::diag(&[0.9, 0.99]).unwrap();
        let mut o = QueryOracle::unlimited(m);
        let out = boost_restarts(&Fixed, &mut o, 12, &mut TrialRng::from_seed(1)).unwrap();
        assert_eq!(out.v_hat.unwrap(), vec![0.0, 1.0]);
        assert!((out.lambda_hat.unwrap() - 0.99).abs() < 1e-15);
        assert_eq!(out.queries_used, 12);
    }
}
