//! Dense symmetric matrices and their exact spectra.
//!
//! `eig_sym` is Householder tridiagonalization followed by the implicit-shift
//! QL iteration with full accumulation of the transformations. It is
//! deterministic and has no dependence on an external LAPACK, so ground-truth
//! spectra replay bit-for-bit across runs.

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::oracle::gram_schmidt;
use crate::rng::TrialRng;

/// Absolute asymmetry (relative to `max(1, max|entry|)`) that is silently
/// averaged away on construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// A real symmetric matrix. Exactly symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    inner: Matrix,
}

impl SymmetricMatrix {
    /// Validates and symmetrizes `m` as `(m + m^T) / 2`.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if m.rows() != m.cols() {
            return Err(Error::InvalidMatrix(format!(
                "not square: {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let n = m.rows();
        let tol = SYMMETRY_TOLERANCE * m.max_abs().max(1.0);
        let mut s = m;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (s[(i, j)], s[(j, i)]);
                if (a - b).abs() > tol {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetry {:e} at ({i},{j}) exceeds tolerance",
                        (a - b).abs()
                    )));
                }
                let avg = 0.5 * (a + b);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(Self { inner: s })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(Matrix::diag(values))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Matrix::identity(n),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Dense product `M v`.
    #[inline]
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.inner.matvec(v)
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dense::dot(v, &self.mul_vec(v))
    }

    /// `gamma * self`.
    pub fn scaled(&self, gamma: f64) -> SymmetricMatrix {
        let mut m = self.inner.clone();
        m.scale(gamma);
        SymmetricMatrix { inner: m }
    }

    /// `sigma * I - self`.
    pub fn shifted_negation(&self, sigma: f64) -> SymmetricMatrix {
        let mut m = self.inner.clone();
        m.scale(-1.0);
        for i in 0..self.dim() {
            m[(i, i)] += sigma;
        }
        SymmetricMatrix { inner: m }
    }

    /// Largest absolute entry, used as a cheap scale for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }
}

/// Eigenvalues in non-increasing order with paired orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// lambda_1, the largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    /// lambda_d, the smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Eigenvector paired with `values[j]`.
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// Operator norm (largest |lambda|).
    pub fn norm(&self) -> f64 {
        self.lambda_max().abs().max(self.lambda_min().abs())
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= self.values[j];
            }
        }
        scaled.matmul(&self.vectors.transpose())
    }
}

/// Full symmetric eigendecomposition.
pub fn eig_sym(m: &SymmetricMatrix) -> Result<Spectrum> {
    let n = m.dim();
    if m.as_matrix().as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let mut v = m.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep the order the QL sweep produced
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length `diag.len() - 1`), together with eigenvectors
/// in the tridiagonal basis. Sorted non-increasing.
pub fn eig_tridiagonal(diag: &[f64], off: &[f64]) -> Result<Spectrum> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length");
    let mut v = Matrix::identity(n);
    let mut d = diag.to_vec();
    // ql_implicit expects the sub-diagonal in e[1..n]
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(off);
    ql_implicit(&mut v, &mut d, &mut e)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(Spectrum { values, vectors })
}

// Householder reduction to tridiagonal form (EISPACK tred2). On exit `v`
// holds the accumulated orthogonal transform, `d` the diagonal and
// `e[1..n]` the sub-diagonal.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e[1..n]) accumulating rotations
// into the columns of `v` (EISPACK tql2).
fn ql_implicit(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NumericalBreakdown(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Relative eigengap `(lambda_1 - lambda_2) / lambda_1`.
pub fn gap(m: &SymmetricMatrix) -> Result<f64> {
    gap_of(&eig_sym(m)?)
}

pub fn gap_of(spec: &Spectrum) -> Result<f64> {
    if spec.dim() < 2 {
        return Err(Error::DomainError("gap needs dimension >= 2".into()));
    }
    let l1 = spec.values[0];
    if l1 <= 0.0 {
        return Err(Error::UndefinedGap { lambda1: l1 });
    }
    Ok(((l1 - spec.values[1]) / l1).max(0.0))
}

/// Condition number `lambda_1 / lambda_d` of a positive definite matrix.
pub fn cond(a: &SymmetricMatrix) -> Result<f64> {
    cond_of(&eig_sym(a)?)
}

pub fn cond_of(spec: &Spectrum) -> Result<f64> {
    let lmin = spec.lambda_min();
    if lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite { lambda_min: lmin });
    }
    Ok(spec.lambda_max() / lmin)
}

/// The strongly convex quadratic `f(x) = x^T A x / 2 - b^T x` with a
/// starting point.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    pub a: SymmetricMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    minimizer: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: SymmetricMatrix, b: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let d = a.dim();
        for v in [&b, &x0] {
            if v.len() != d {
                return Err(Error::DimensionError {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        let spec = eig_sym(&a)?;
        if spec.lambda_min() <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                lambda_min: spec.lambda_min(),
            });
        }
        let minimizer = dense::solve(a.as_matrix(), &b)?;
        Ok(Self {
            a,
            b,
            x0,
            minimizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `A^{-1} b` from a direct solve.
    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        objective(&self.a, &self.b, x)
    }
}

/// `f_{A,b}(x) = x^T A x / 2 - b^T x`.
pub fn objective(a: &SymmetricMatrix, b: &[f64], x: &[f64]) -> f64 {
    0.5 * a.quadratic_form(x) - dense::dot(b, x)
}

/// `f(x) - min f`, evaluated as `(x - x*)^T A (x - x*) / 2`.
pub fn suboptimality(p: &QuadraticProblem, x: &[f64]) -> f64 {
    let e = dense::sub(x, &p.minimizer);
    0.5 * p.a.quadratic_form(&e)
}

/// Random `Q diag(lambda) Q^T` with `Q` Haar-orthogonal and eigenvalues
/// equispaced from `1` to `cond`, so `cond(A) = cond` up to rounding.
pub fn random_spd(d: usize, cond: f64, rng: &mut TrialRng) -> SymmetricMatrix {
    assert!(d >= 1 && cond >= 1.0);
    let gauss: Vec<Vec<f64>> = (0..d).map(|_| rng.gaussian_vec(d)).collect();
    let q = gram_schmidt(&gauss).expect("Gaussian vectors are independent almost surely");
    let mut a = Matrix::zeros(d, d);
    for (k, qk) in q.iter().enumerate() {
        let lam = if d == 1 {
            1.0
        } else {
            1.0 + (cond - 1.0) * k as f64 / (d - 1) as f64
        };
        for i in 0..d {
            let s = lam * qk[i];
            dense::axpy(s, qk, a.row_mut(i));
        }
    }
    SymmetricMatrix::new(a).expect("symmetric up to rounding")
}
