//! Rotations that move the information revealed by `T` orthonormal queries
//! into the leading rows and columns of `V X R`.

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::spectral::{eig_sym, SymmetricMatrix};

/// Relative size below which a residual direction counts as zero.
const SPAN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct RotationPair {
    /// Orthogonal; row `t` is the `t`-th orthonormal query for `t < T`.
    pub v: Matrix,
    /// Orthogonal; `V X R` is zero above the diagonal in its first `T` rows.
    pub r: Matrix,
    pub t: usize,
}

/// Orthogonal `n x n` matrix whose first row (and, by symmetry before the
/// sign fix, first column) is the unit vector `y`. Rows after the first get
/// their largest-magnitude entry made positive.
fn reflector_with_first(y: &[f64]) -> Matrix {
    let n = y.len();
    let mut w = vec![0.0; n];
    if y[0] > 0.0 {
        let tail: f64 = y[1..].iter().map(|v| v * v).sum();
        w[0] = tail / (1.0 + y[0]);
    } else {
        w[0] = 1.0 - y[0];
    }
    for i in 1..n {
        w[i] = -y[i];
    }
    let ww = dense::dot(&w, &w);
    let mut h = Matrix::identity(n);
    if ww > 0.0 {
        for i in 0..n {
            let s = 2.0 * w[i] / ww;
            for j in 0..n {
                h[(i, j)] -= s * w[j];
            }
        }
    }
    for i in 1..n {
        let row = h.row_mut(i);
        let lead = row
            .iter()
            .fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m });
        if lead < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    h
}

/// Replaces rows `k..` of `m` by `h * m[k.., :]`.
fn apply_rows(m: &mut Matrix, k: usize, h: &Matrix) {
    let n = m.rows();
    let tail = m.block(k, n, 0, m.cols());
    m.set_block(k, 0, &h.matmul(&tail));
}

/// Replaces columns `k..` of `m` by `m[:, k..] * g`.
fn apply_cols(m: &mut Matrix, k: usize, g: &Matrix) {
    let n = m.cols();
    let tail = m.block(0, m.rows(), k, n);
    m.set_block(0, k, &tail.matmul(g));
}

/// Builds `V = V_T ... V_1` and `R = R_1 ... R_T` step by step.
///
/// `V_t = diag(I_{t-1}, H_t)` puts query `t` in row `t`; `R_t = diag(I_{t-1},
/// G_t)` rotates row `t` of `V_{1:t} X R_{1:t-1}` onto its first `t`
/// columns. Both completions depend only on their inputs.
pub fn build_rotations(queries: &[Vec<f64>], x: &Matrix) -> Result<RotationPair> {
    let d = x.rows();
    if x.cols() != d {
        return Err(Error::DimensionError {
            expected: d,
            got: x.cols(),
        });
    }
    let t_total = queries.len();
    if t_total >= d {
        return Err(Error::DomainError(format!(
            "rotation construction needs T < d, got T = {t_total}, d = {d}"
        )));
    }
    let mut v = Matrix::identity(d);
    let mut r = Matrix::identity(d);
    let mut z = x.clone();
    let x_scale = x.max_abs().max(f64::MIN_POSITIVE);
    for (step, q) in queries.iter().enumerate() {
        if q.len() != d {
            return Err(Error::DimensionError {
                expected: d,
                got: q.len(),
            });
        }
        let coords = v.matvec(q);
        let lead: f64 = coords[..step].iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut y = coords[step..].to_vec();
        let ny = dense::normalize(&mut y);
        if lead > 1e-8 || (ny - 1.0).abs() > 1e-8 {
            return Err(Error::DomainError(format!(
                "query {step} is not orthonormal to the previous ones"
            )));
        }
        let h = reflector_with_first(&y);
        apply_rows(&mut v, step, &h);
        apply_rows(&mut z, step, &h);

        let mut g0 = z.row(step)[step..].to_vec();
        let norm = dense::normalize(&mut g0);
        if norm <= SPAN_TOLERANCE * x_scale {
            return Err(Error::DegenerateSpan { step });
        }
        let g = reflector_with_first(&g0).transpose();
        apply_cols(&mut r, step, &g);
        apply_cols(&mut z, step, &g);
    }
    Ok(RotationPair { v, r, t: t_total })
}

/// The three pieces of `V W V^T` for `W = X X^T`.
#[derive(Clone, Debug)]
pub struct CornerExtract {
    /// `V_par X R_par`, `T x T`, lower triangular.
    pub y1: Matrix,
    /// `V_perp X R_par`, `(d-T) x T`.
    pub y2: Matrix,
    /// `(V_perp X R_perp)(V_perp X R_perp)^T`.
    pub w_tilde: SymmetricMatrix,
    /// `V_perp X R_perp` itself.
    pub corner_factor: Matrix,
}

impl CornerExtract {
    /// `[[Y1 Y1^T, Y1 Y2^T], [Y2 Y1^T, Y2 Y2^T + W~]]`.
    pub fn assemble(&self) -> Matrix {
        assemble_blocks(&self.y1, &self.y2, self.w_tilde.as_matrix())
    }
}

pub fn extract_corner(rp: &RotationPair, x: &Matrix) -> Result<CornerExtract> {
    let d = x.rows();
    let t = rp.t;
    let z = rp.v.matmul(x).matmul(&rp.r);
    let y1 = z.block(0, t, 0, t);
    let y2 = z.block(t, d, 0, t);
    let corner_factor = z.block(t, d, t, d);
    let w_tilde = SymmetricMatrix::new(corner_factor.gram_rows())?;
    Ok(CornerExtract {
        y1,
        y2,
        w_tilde,
        corner_factor,
    })
}

/// `[[A A^T, A B^T], [B A^T, B B^T + W]]`.
pub fn assemble_blocks(a: &Matrix, b: &Matrix, w: &Matrix) -> Matrix {
    let t = a.rows();
    let n = w.rows();
    let d = t + n;
    let mut m = Matrix::zeros(d, d);
    let stacked = {
        let mut s = Matrix::zeros(d, a.cols());
        s.set_block(0, 0, a);
        s.set_block(t, 0, b);
        s
    };
    m.set_block(0, 0, &stacked.gram_rows());
    for i in 0..n {
        for j in 0..n {
            m[(t + i, t + j)] += w[(i, j)];
        }
    }
    m
}

/// `max |V W V^T - assembled|` divided by `||W||`.
pub fn block_identity_residual(
    rp: &RotationPair,
    ce: &CornerExtract,
    w: &SymmetricMatrix,
) -> Result<f64> {
    let vwvt = rp.v.matmul(w.as_matrix()).matmul(&rp.v.transpose());
    let norm = eig_sym(w)?.norm().max(f64::MIN_POSITIVE);
    Ok(vwvt.max_abs_diff(&ce.assemble()) / norm)
}

/// Witness for `lambda_min(M) <= lambda_min(W)` with `M` as in
/// [`assemble_blocks`].
#[derive(Clone, Debug)]
pub struct Witness {
    pub z: Vec<f64>,
    /// `z^T M z` evaluated on the assembled matrix.
    pub quadratic: f64,
    /// `||A^T z1 + B^T z2||^2 + z2^T W z2`, the same quantity in factored form.
    pub quadratic_factored: f64,
    /// `z^T M z / ||z||^2`.
    pub value: f64,
    pub lambda_min_w: f64,
    /// Frobenius-norm condition estimate of `A`.
    pub cond_a: f64,
}

/// Largest accepted Frobenius condition estimate of `A`.
pub const MAX_BLOCK_CONDITION: f64 = 1e12;

/// `z = (-A^{-T} B^T v, v)` with `v` the bottom eigenvector of `W`.
pub fn corner_witness(a: &Matrix, b: &Matrix, w: &SymmetricMatrix) -> Result<Witness> {
    let t = a.rows();
    let n = w.dim();
    if a.cols() != t || b.rows() != n || b.cols() != t {
        return Err(Error::DimensionError {
            expected: t,
            got: a.cols(),
        });
    }
    let cond_a = frobenius_condition(a)?;
    if !(cond_a <= MAX_BLOCK_CONDITION) {
        return Err(Error::SingularBlock { cond: cond_a });
    }
    let spec = eig_sym(w)?;
    let v = spec.vector(n - 1);
    let btv = b.matvec_t(&v);
    let at = a.transpose();
    let z1: Vec<f64> = dense::solve(&at, &btv)
        .map_err(|_| Error::SingularBlock {
            cond: f64::INFINITY,
        })?
        .into_iter()
        .map(|c| -c)
        .collect();
    let mut z = z1.clone();
    z.extend_from_slice(&v);
    let m = assemble_blocks(a, b, w.as_matrix());
    let quadratic = dense::dot(&z, &m.matvec(&z));
    let mut resid = a.matvec_t(&z1);
    dense::axpy(1.0, &btv, &mut resid);
    let quadratic_factored = dense::dot(&resid, &resid) + w.quadratic_form(&v);
    Ok(Witness {
        value: quadratic / dense::dot(&z, &z),
        z,
        quadratic,
        quadratic_factored,
        lambda_min_w: spec.lambda_min(),
        cond_a,
    })
}

fn frobenius_condition(a: &Matrix) -> Result<f64> {
    let t = a.rows();
    if t == 0 {
        return Ok(1.0);
    }
    let mut inv_sq = 0.0;
    for j in 0..t {
        let mut e = vec![0.0; t];
        e[j] = 1.0;
        match dense::solve(a, &e) {
            Ok(col) => inv_sq += dense::dot(&col, &col),
            Err(_) => return Ok(f64::INFINITY),
        }
    }
    let fro: f64 = a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(fro * inv_sq.sqrt())
}
