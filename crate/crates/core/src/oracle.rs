//! Budgeted matrix-vector product access.
//!
//! Solvers only ever see a [`MatVecOracle`]; the hidden matrix behind a
//! [`QueryOracle`] is reachable solely through [`QueryOracle::white_box`],
//! which the experiment harness and the lemma checks use for ground truth.
//! Query counts are therefore exact by construction.

use crate::dense;
use crate::error::{Error, Result};
use crate::spectral::SymmetricMatrix;

/// Anything that answers `v -> M v` and counts how often it was asked.
pub trait MatVecOracle {
    fn dim(&self) -> usize;

    /// One matrix-vector product. Failed calls are not counted.
    fn query(&mut self, v: &[f64]) -> Result<Vec<f64>>;

    fn query_count(&self) -> usize;
}

impl<O: MatVecOracle + ?Sized> MatVecOracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn query(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        (**self).query(v)
    }

    fn query_count(&self) -> usize {
        (**self).query_count()
    }
}

/// Count of answered queries plus, optionally, the full transcript.
#[derive(Clone, Debug, Default)]
pub struct QueryLedger {
    count: usize,
    retain: bool,
    history: Vec<(Vec<f64>, Vec<f64>)>,
}

impl QueryLedger {
    pub fn count(&self) -> usize {
        self.count
    }

    /// `(query, response)` pairs in order. Empty unless retention is on.
    pub fn history(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.history
    }

    pub fn queries(&self) -> Vec<Vec<f64>> {
        self.history.iter().map(|(q, _)| q.clone()).collect()
    }

    fn record(&mut self, v: &[f64], w: &[f64]) {
        self.count += 1;
        if self.retain {
            self.history.push((v.to_vec(), w.to_vec()));
        }
    }
}

/// A hidden symmetric matrix answerable only through counted products.
#[derive(Clone, Debug)]
pub struct QueryOracle {
    hidden: SymmetricMatrix,
    ledger: QueryLedger,
    budget: Option<usize>,
}

impl QueryOracle {
    pub fn new(m: SymmetricMatrix, budget: Option<usize>, retain_history: bool) -> Result<Self> {
        if budget == Some(0) {
            return Err(Error::InvalidBudget);
        }
        Ok(Self {
            hidden: m,
            ledger: QueryLedger {
                retain: retain_history,
                ..QueryLedger::default()
            },
            budget,
        })
    }

    pub fn unlimited(m: SymmetricMatrix) -> Self {
        Self::new(m, None, false).expect("no budget is always valid")
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    /// Direct access to the hidden matrix. Reserved for ground truth and
    /// white-box verification; never hand this to a solver.
    pub fn white_box(&self) -> &SymmetricMatrix {
        &self.hidden
    }
}

impl MatVecOracle for QueryOracle {
    fn dim(&self) -> usize {
        self.hidden.dim()
    }

    fn query(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.hidden.dim();
        if v.len() != d {
            return Err(Error::DimensionError {
                expected: d,
                got: v.len(),
            });
        }
        if let Some(budget) = self.budget {
            if self.ledger.count >= budget {
                return Err(Error::BudgetExceeded { budget });
            }
        }
        let w = self.hidden.mul_vec(v);
        self.ledger.record(v, &w);
        Ok(w)
    }

    fn query_count(&self) -> usize {
        self.ledger.count
    }
}

/// Builds a fresh oracle; `budget = Some(0)` is rejected.
pub fn make_oracle(
    m: SymmetricMatrix,
    budget: Option<usize>,
    retain_history: bool,
) -> Result<QueryOracle> {
    QueryOracle::new(m, budget, retain_history)
}

/// Oracle for `A = sigma I - M` driven by an oracle for `M`. Each product
/// with `A` spends exactly one product with `M` on the underlying ledger.
pub struct ShiftedOracle<'a, O: MatVecOracle + ?Sized> {
    base: &'a mut O,
    sigma: f64,
    count: usize,
}

impl<'a, O: MatVecOracle + ?Sized> ShiftedOracle<'a, O> {
    pub fn new(base: &'a mut O, sigma: f64) -> Self {
        Self {
            base,
            sigma,
            count: 0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn base(&self) -> &O {
        self.base
    }
}

impl<O: MatVecOracle + ?Sized> MatVecOracle for ShiftedOracle<'_, O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn query(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        let mv = self.base.query(v)?;
        self.count += 1;
        Ok(v.iter()
            .zip(&mv)
            .map(|(vi, mvi)| self.sigma * vi - mvi)
            .collect())
    }

    fn query_count(&self) -> usize {
        self.count
    }
}

/// A linear system `A x = b` with starting point `x0`, where `A` is only
/// available through an oracle.
pub struct LinSysInstance<O: MatVecOracle> {
    pub oracle: O,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
}

impl<O: MatVecOracle> LinSysInstance<O> {
    pub fn new(oracle: O, b: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let d = oracle.dim();
        for v in [&b, &x0] {
            if v.len() != d {
                return Err(Error::DimensionError {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        Ok(Self { oracle, b, x0 })
    }
}

/// Relative residual below which a vector counts as dependent.
pub const DEPENDENCE_TOLERANCE: f64 = 1e-10;

/// Modified Gram–Schmidt with one full reorthogonalization pass. Fails on
/// the first vector whose residual after projection falls below
/// `DEPENDENCE_TOLERANCE` relative to its original norm.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        match orthogonalize_against(&basis, v) {
            Some(u) => basis.push(u),
            None => return Err(Error::DependentVector { index }),
        }
    }
    Ok(basis)
}

/// Like [`gram_schmidt`] but drops dependent vectors instead of failing.
/// Returns the basis and the indices that were dropped.
pub fn gram_schmidt_dropping(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    let mut dropped = Vec::new();
    for (index, v) in vectors.iter().enumerate() {
        match orthogonalize_against(&basis, v) {
            Some(u) => basis.push(u),
            None => dropped.push(index),
        }
    }
    (basis, dropped)
}

fn orthogonalize_against(basis: &[Vec<f64>], v: &[f64]) -> Option<Vec<f64>> {
    let original = dense::norm2(v);
    if original == 0.0 || !original.is_finite() {
        return None;
    }
    let mut u = v.to_vec();
    for _pass in 0..2 {
        for q in basis {
            let c = dense::dot(q, &u);
            dense::axpy(-c, q, &mut u);
        }
    }
    let r = dense::norm2(&u);
    if r < DEPENDENCE_TOLERANCE * original {
        return None;
    }
    dense::scale_in_place(1.0 / r, &mut u);
    Some(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_oracle_and_counting() {
        let mut o = make_oracle(SymmetricMatrix::identity(3), Some(5), false).unwrap();
        assert_eq!(o.query_count(), 0);
        for k in 1..=3 {
            o.query(&[1.0, 0.0, 0.0]).unwrap();
            assert_eq!(o.query_count(), k);
        }
        assert!(matches!(
            make_oracle(SymmetricMatrix::identity(3), Some(0), false),
            Err(Error::InvalidBudget)
        ));
    }

    #[test]
    fn budget_is_enforced_and_permanent() {
        let m = SymmetricMatrix::diag(&[2.0, 1.0]).unwrap();
        let mut o = make_oracle(m, Some(3), false).unwrap();
        assert_eq!(o.query(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        o.query(&[0.0, 1.0]).unwrap();
        o.query(&[1.0, 1.0]).unwrap();
        for _ in 0..2 {
            assert!(matches!(
                o.query(&[1.0, 0.0]),
                Err(Error::BudgetExceeded { budget: 3 })
            ));
            assert_eq!(o.query_count(), 3);
        }
    }

    #[test]
    fn dimension_mismatch_is_not_counted() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::identity(2));
        assert!(matches!(
            o.query(&[1.0]),
            Err(Error::DimensionError {
                expected: 2,
                got: 1
            })
        ));
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn history_retention() {
        let m = SymmetricMatrix::diag(&[2.0, 1.0]).unwrap();
        let mut o = make_oracle(m, None, true).unwrap();
        o.query(&[1.0, 1.0]).unwrap();
        o.query(&[0.0, 1.0]).unwrap();
        assert_eq!(o.ledger().history().len(), o.query_count());
        assert_eq!(o.ledger().history()[0].1, vec![2.0, 1.0]);
    }

    #[test]
    fn shifted_oracle_costs_one_base_query() {
        let mut o = QueryOracle::unlimited(SymmetricMatrix::identity(2));
        {
            let mut a = ShiftedOracle::new(&mut o, 1.2);
            let w = a.query(&[1.0, -1.0]).unwrap();
            assert!((w[0] - 0.2).abs() < 1e-15 && (w[1] + 0.2).abs() < 1e-15);
            assert_eq!(a.query_count(), 1);
        }
        assert_eq!(o.query_count(), 1);
    }

    #[test]
    fn gram_schmidt_examples() {
        let out = gram_schmidt(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(out[0], vec![1.0, 0.0]);
        assert!(out[1][0].abs() < 1e-15 && (out[1][1] - 1.0).abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let out = gram_schmidt(&[vec![s, s], vec![1.0, 0.0]]).unwrap();
        assert!((out[1][0].abs() - s).abs() < 1e-12);
        assert!((out[1][0] + out[1][1]).abs() < 1e-12);

        let ortho = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]];
        let out = gram_schmidt(&ortho).unwrap();
        for (a, b) in out.iter().zip(&ortho) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }

        assert!(matches!(
            gram_schmidt(&[vec![1.0, 0.0], vec![2.0, 0.0]]),
            Err(Error::DependentVector { index: 1 })
        ));
        let (basis, dropped) = gram_schmidt_dropping(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(basis.len(), 1);
        assert_eq!(dropped, vec![1]);
    }
}
