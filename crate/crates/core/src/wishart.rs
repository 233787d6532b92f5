//! Wishart ensembles, the hard-edge limit law, and the hard instance
//! `M = blockdiag(I_s - W/5, 0)`.
//!
//! Normalization: `X` is d×d with i.i.d. `N(0, 1/d)` entries and
//! `W = X X^T`, so `E tr W = d` and the spectrum fills `[0, 4]`. The
//! smallest eigenvalue lives at scale `d^{-2}`; `d^2 lambda_min(W)`
//! converges to the law with density
//! `f(x) = (x^{-1/2} + 1)/2 * exp(-(x/2 + sqrt x))` on `x >= 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::rng::TrialRng;
use crate::spectral::{eig_sym, gap_of, Spectrum, SymmetricMatrix};

/// Operator-norm cap in the good event.
pub const NORM_CAP: f64 = 5.0;

/// A Wishart draw with its Gaussian factor and cached spectrum.
#[derive(Clone, Debug)]
pub struct WishartSample {
    pub d: usize,
    pub x: Matrix,
    pub w: SymmetricMatrix,
    pub spectrum: Spectrum,
}

impl WishartSample {
    /// Builds a sample from a given factor `x`.
    pub fn from_factor(x: Matrix) -> Result<Self> {
        if x.rows() != x.cols() {
            return Err(Error::DimensionError {
                expected: x.rows(),
                got: x.cols(),
            });
        }
        let w = SymmetricMatrix::new(x.gram_rows())?;
        let spectrum = eig_sym(&w)?;
        Ok(Self {
            d: x.rows(),
            x,
            w,
            spectrum,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.lambda_min()
    }

    /// `d^2 lambda_min(W)`, the hard-edge statistic.
    pub fn scaled_edge(&self) -> f64 {
        (self.d * self.d) as f64 * self.lambda_min()
    }

    /// `d^2 (lambda_{d-1} - lambda_d)`; zero for `d = 1`.
    pub fn scaled_edge_gap(&self) -> f64 {
        if self.d < 2 {
            return 0.0;
        }
        let v = &self.spectrum.values;
        (self.d * self.d) as f64 * (v[self.d - 2] - v[self.d - 1])
    }
}

/// Draws the d×d factor with `N(0, 1/d)` entries.
pub fn sample_factor(d: usize, rng: &mut TrialRng) -> Matrix {
    let sd = 1.0 / (d as f64).sqrt();
    let data = (0..d * d).map(|_| sd * rng.gaussian()).collect();
    Matrix::from_row_major(d, d, data).expect("sized buffer")
}

pub fn sample_wishart(d: usize, rng: &mut TrialRng) -> Result<WishartSample> {
    if d == 0 {
        return Err(Error::DomainError("Wishart dimension must be >= 1".into()));
    }
    WishartSample::from_factor(sample_factor(d, rng))
}

/// Density and CDF of the limiting law of `d^2 lambda_min(W)`.
pub fn limiting_edge_law(x: f64) -> Result<(f64, f64)> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::DomainError(format!(
            "edge law is supported on x >= 0, got {x}"
        )));
    }
    Ok((edge_pdf(x), edge_cdf(x)))
}

/// `f(x) = (x^{-1/2} + 1)/2 * exp(-(x/2 + sqrt x))`; infinite at 0.
pub fn edge_pdf(x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    let s = x.sqrt();
    0.5 * (1.0 / s + 1.0) * (-(0.5 * x + s)).exp()
}

/// `F(x) = 1 - exp(-(x/2 + sqrt x))`.
pub fn edge_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -(-(0.5 * x + x.sqrt())).exp_m1()
}

/// `F(x)` by adaptive quadrature of [`edge_pdf`], substituting `x = u^2`
/// to remove the `x^{-1/2}` singularity. Independent of the closed form.
pub fn edge_cdf_by_quadrature(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (v, _) = crate::quad::integrate(|u| 2.0 * u * edge_pdf(u * u), 0.0, x.sqrt(), 1e-13);
    v
}

/// Inverse of [`edge_cdf`] on `[0, 1)`.
pub fn edge_quantile(u: f64) -> f64 {
    let l = -(-u).ln_1p();
    let s = -1.0 + (1.0 + 2.0 * l).sqrt();
    s * s
}

/// One draw from the limiting edge law by inversion.
pub fn sample_limiting(rng: &mut TrialRng) -> f64 {
    edge_quantile(rng.uniform())
}

/// Constants of the good event
/// `{lambda_d <= C1/d^2} ∩ {lambda_{d-1} - lambda_d >= C2/d^2} ∩ {||W|| < 5}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodEventParams {
    pub c1: f64,
    pub c2: f64,
    pub norm_cap: f64,
}

impl GoodEventParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::DomainError(format!(
                "good-event constants must be positive, got C1={c1}, C2={c2}"
            )));
        }
        Ok(Self {
            c1,
            c2,
            norm_cap: NORM_CAP,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodEventFlags {
    pub edge_small: bool,
    pub gap_large: bool,
    pub norm_ok: bool,
}

impl GoodEventFlags {
    pub fn all(&self) -> bool {
        self.edge_small && self.gap_large && self.norm_ok
    }
}

pub fn check_good_event(w: &WishartSample, p: &GoodEventParams) -> GoodEventFlags {
    flags_from_spectrum(&w.spectrum, p)
}

pub fn flags_from_spectrum(spec: &Spectrum, p: &GoodEventParams) -> GoodEventFlags {
    let d = spec.dim();
    let d2 = (d * d) as f64;
    let lmin = spec.lambda_min();
    let gap_large = d >= 2 && spec.values[d - 2] - lmin >= p.c2 / d2;
    GoodEventFlags {
        edge_small: lmin <= p.c1 / d2,
        gap_large,
        norm_ok: spec.norm() < p.norm_cap,
    }
}

/// `M = blockdiag(I_s - W/5, 0_{(d-s)×(d-s)})` with its ground truth.
#[derive(Clone, Debug)]
pub struct HardInstance {
    pub s: usize,
    pub d: usize,
    pub source: WishartSample,
    pub m: SymmetricMatrix,
    pub truth: Spectrum,
    pub good_event: GoodEventFlags,
}

impl HardInstance {
    pub fn lambda_max(&self) -> f64 {
        self.truth.lambda_max()
    }

    /// Orthonormal basis of the coordinate subspace holding the block.
    pub fn block_subspace(&self) -> Vec<Vec<f64>> {
        (0..self.s)
            .map(|i| {
                let mut e = vec![0.0; self.d];
                e[i] = 1.0;
                e
            })
            .collect()
    }
}

pub fn build_hard_instance(
    s: usize,
    d: usize,
    w: WishartSample,
    params: &GoodEventParams,
) -> Result<HardInstance> {
    if s > d {
        return Err(Error::EmbedError { s, d });
    }
    if w.d != s {
        return Err(Error::DimensionError {
            expected: s,
            got: w.d,
        });
    }
    let mut m = Matrix::zeros(d, d);
    for i in 0..s {
        for j in 0..s {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = delta - w.w.get(i, j) / 5.0;
        }
    }
    let m = SymmetricMatrix::new(m)?;
    let truth = eig_sym(&m)?;
    let good_event = check_good_event(&w, params);
    Ok(HardInstance {
        s,
        d,
        source: w,
        m,
        truth,
        good_event,
    })
}

/// Membership in the class of matrices with `gap(M) >= gap_param`,
/// `|lambda_1 - 1| <= alpha * gap_param`, `lambda_1 ∈ [1/2, 2]`, and (when a
/// subspace basis is given) top eigenvector inside that subspace.
pub fn check_class_membership(
    m: &SymmetricMatrix,
    gap_param: f64,
    alpha: f64,
    subspace: Option<&[Vec<f64>]>,
) -> Result<bool> {
    let spec = eig_sym(m)?;
    Ok(class_membership_of(&spec, gap_param, alpha, subspace))
}

pub fn class_membership_of(
    spec: &Spectrum,
    gap_param: f64,
    alpha: f64,
    subspace: Option<&[Vec<f64>]>,
) -> bool {
    let l1 = spec.lambda_max();
    let Ok(g) = gap_of(spec) else {
        return false;
    };
    let mut member =
        g >= gap_param && (l1 - 1.0).abs() <= alpha * gap_param && (0.5..=2.0).contains(&l1);
    if member {
        if let Some(basis) = subspace {
            let (basis, _) = crate::oracle::gram_schmidt_dropping(basis);
            let v1 = spec.vector(0);
            let mut resid = v1.clone();
            for q in &basis {
                dense::axpy(-dense::dot(q, &v1), q, &mut resid);
            }
            member = dense::norm2(&resid) <= 1e-8;
        }
    }
    member
}

/// Induced estimator of `lambda_min(W)` from an estimate of `lambda_1(M)`.
pub fn lambda_min_estimator_from_eig(lambda_hat: f64) -> f64 {
    5.0 * (1.0 - lambda_hat)
}

/// Calibrated good-event constants for one dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub d: usize,
    pub seed: u64,
    pub delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "pilot_N")]
    pub pilot_n: usize,
    /// Fraction of pilot samples inside the full good event.
    pub event_rate: f64,
    pub quantiles: Vec<PilotQuantile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PilotQuantile {
    pub p: f64,
    pub scaled_edge: f64,
    pub scaled_gap: f64,
}

impl Calibration {
    pub fn params(&self) -> GoodEventParams {
        GoodEventParams {
            c1: self.c1,
            c2: self.c2,
            norm_cap: NORM_CAP,
        }
    }

    /// Cap on rejection-sampling attempts: 100 times the expected count.
    pub fn max_attempts(&self) -> usize {
        if self.event_rate <= 0.0 {
            return 0;
        }
        (100.0 / self.event_rate).ceil() as usize
    }
}

/// Empirical quantile `x_(ceil(p n))` of a sorted sample.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// `C1 = F^{-1}(1 - delta/3)` from the limit law; `C2` = empirical
/// `delta/3`-quantile of `d^2 (lambda_{d-1} - lambda_d)` over a pilot run.
pub fn calibrate(d: usize, delta: f64, pilot_n: usize, seed: u64) -> Result<Calibration> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("delta", "must lie in (0, 1)"));
    }
    if d < 2 {
        return Err(Error::config("d", "calibration needs d >= 2"));
    }
    if pilot_n == 0 {
        return Err(Error::config("pilot_n", "must be positive"));
    }
    let c1 = edge_quantile(1.0 - delta / 3.0);
    let stats: Vec<(f64, f64, f64)> = (0..pilot_n)
        .into_par_iter()
        .map(|i| {
            let mut rng = TrialRng::for_trial(seed, "calibrate", i as u64);
            let w = sample_wishart(d, &mut rng)?;
            Ok((w.scaled_edge(), w.scaled_edge_gap(), w.spectrum.norm()))
        })
        .collect::<Result<_>>()?;
    let mut gaps: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let mut edges: Vec<f64> = stats.iter().map(|s| s.0).collect();
    gaps.sort_by(f64::total_cmp);
    edges.sort_by(f64::total_cmp);
    let c2 = empirical_quantile(&gaps, delta / 3.0);
    if c2 <= 0.0 {
        return Err(Error::CalibrationError(format!(
            "non-positive gap quantile {c2} at d={d}"
        )));
    }
    let inside = stats
        .iter()
        .filter(|(e, g, n)| *e <= c1 && *g >= c2 && *n < NORM_CAP)
        .count();
    let quantiles = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&p| PilotQuantile {
            p,
            scaled_edge: empirical_quantile(&edges, p),
            scaled_gap: empirical_quantile(&gaps, p),
        })
        .collect();
    Ok(Calibration {
        d,
        seed,
        delta,
        c1,
        c2,
        pilot_n,
        event_rate: inside as f64 / pilot_n as f64,
        quantiles,
    })
}

/// A hard instance conditioned on the good event, by rejection sampling
/// from one trial stream. Returns the instance and the number of attempts.
pub fn sample_conditioned(
    s: usize,
    d: usize,
    cal: &Calibration,
    rng: &mut TrialRng,
) -> Result<(HardInstance, usize)> {
    if cal.d != s {
        return Err(Error::CalibrationError(format!(
            "calibration is for d={}, instance block needs s={s}",
            cal.d
        )));
    }
    let params = cal.params();
    let cap = cal.max_attempts();
    for attempt in 1..=cap {
        let w = sample_wishart(s, rng)?;
        if check_good_event(&w, &params).all() {
            return Ok((build_hard_instance(s, d, w, &params)?, attempt));
        }
    }
    Err(Error::CalibrationError(format!(
        "good event not reached within {cap} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_wishart_has_unit_mean() {
        let n = 20_000;
        let mut rng = TrialRng::from_seed(11);
        let mean = (0..n)
            .map(|_| sample_wishart(1, &mut rng).unwrap().w.get(0, 0))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn wishart_invariants() {
        let mut rng = TrialRng::from_seed(3);
        let w = sample_wishart(12, &mut rng).unwrap();
        let direct = w.x.matmul(&w.x.transpose());
        assert!(direct.max_abs_diff(w.w.as_matrix()) <= 1e-12 * 12.0);
        assert!(w.lambda_min() >= -1e-10);
    }

    #[test]
    fn edge_law_values() {
        assert_eq!(limiting_edge_law(0.0).unwrap().1, 0.0);
        let (_, c1) = limiting_edge_law(1.0).unwrap();
        assert!((c1 - (1.0 - (-1.5f64).exp())).abs() < 1e-15);
        assert!((c1 - 0.776_870).abs() < 1e-6);
        assert!(matches!(
            limiting_edge_law(-0.1),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn closed_form_cdf_matches_quadrature() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let q = edge_cdf_by_quadrature(x);
            assert!(
                (q - edge_cdf(x)).abs() < 1e-8,
                "x={x}: {q} vs {}",
                edge_cdf(x)
            );
        }
        assert!((edge_cdf_by_quadrature(1.0) - 0.776_870).abs() < 1e-6);
        assert!((edge_cdf_by_quadrature(60.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        assert_eq!(edge_quantile(0.0), 0.0);
        let x = edge_quantile(1.0 - (-1.5f64).exp());
        assert!((x - 1.0).abs() < 1e-12);
        for &u in &[1e-9, 0.01, 0.3, 0.5, 0.9, 0.999] {
            assert!((edge_cdf(edge_quantile(u)) - u).abs() < 1e-12);
        }
        assert!(edge_quantile(1e-12) < 1e-20);
    }

    #[test]
    fn median_solves_defining_equation() {
        // bisection on x/2 + sqrt(x) = ln 2, independent of edge_quantile
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid / 2.0 + mid.sqrt() < std::f64::consts::LN_2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((edge_quantile(0.5) - root).abs() < 1e-12);
        assert!((root - 0.296_77).abs() < 1e-4);
    }

    #[test]
    fn good_event_flags() {
        let p = GoodEventParams::new(1.0, 0.1).unwrap();
        let w = WishartSample::from_factor(Matrix::diag(&[1.0, 0.0])).unwrap();
        let f = check_good_event(&w, &p);
        assert!(f.edge_small && f.gap_large && f.norm_ok);

        let big = WishartSample::from_factor(Matrix::diag(&[6f64.sqrt(), 0.5])).unwrap();
        assert!((big.spectrum.norm() - 6.0).abs() < 1e-12);
        assert!(!check_good_event(&big, &p).norm_ok);
        assert!(GoodEventParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn hard_instance_scalar() {
        let w = WishartSample::from_factor(Matrix::diag(&[0.2])).unwrap();
        let p = GoodEventParams::new(1.0, 1.0).unwrap();
        let h = build_hard_instance(1, 1, w, &p).unwrap();
        assert!((h.m.get(0, 0) - 0.992).abs() < 1e-15);
        assert!((h.lambda_max() - 0.992).abs() < 1e-15);
    }

    #[test]
    fn hard_instance_embedding() {
        let mut rng = TrialRng::from_seed(5);
        let w = sample_wishart(2, &mut rng).unwrap();
        let lmin = w.lambda_min();
        let p = GoodEventParams::new(1.0, 1.0).unwrap();
        let h = build_hard_instance(2, 4, w, &p).unwrap();
        for i in 2..4 {
            for j in 0..4 {
                assert_eq!(h.m.get(i, j), 0.0);
                assert_eq!(h.m.get(j, i), 0.0);
            }
        }
        assert!(h.m.as_matrix().count_nonzeros() <= 4);
        // eigenvalues 1 - lambda(W)/5 are positive here, so zeros come last
        assert!(h.truth.values[2].abs() < 1e-15 && h.truth.values[3].abs() < 1e-15);
        assert!((h.lambda_max() - (1.0 - lmin / 5.0)).abs() < 1e-12);

        let w = sample_wishart(3, &mut rng).unwrap();
        assert!(matches!(
            build_hard_instance(3, 2, w, &p),
            Err(Error::EmbedError { s: 3, d: 2 })
        ));
    }

    #[test]
    fn class_membership_examples() {
        let m = SymmetricMatrix::diag(&[1.0, 0.5]).unwrap();
        assert!(check_class_membership(&m, 0.4, 0.1, None).unwrap());
        let m = SymmetricMatrix::diag(&[3.0, 1.0]).unwrap();
        assert!(!check_class_membership(&m, 0.4, 0.1, None).unwrap());

        let m = SymmetricMatrix::diag(&[0.2, 1.0, 0.5]).unwrap();
        let inside = vec![vec![0.0, 1.0, 0.0]];
        let outside = vec![vec![1.0, 0.0, 0.0]];
        assert!(check_class_membership(&m, 0.4, 0.1, Some(&inside)).unwrap());
        assert!(!check_class_membership(&m, 0.4, 0.1, Some(&outside)).unwrap());
    }

    #[test]
    fn estimator_arithmetic() {
        assert_eq!(lambda_min_estimator_from_eig(1.0), 0.0);
        assert!((lambda_min_estimator_from_eig(0.95) - 0.25).abs() < 1e-15);
        let lmin = 3.7e-5;
        assert!((lambda_min_estimator_from_eig(1.0 - lmin / 5.0) - lmin).abs() < 1e-12);
    }

    #[test]
    fn empirical_quantile_convention() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&xs, 0.25), 1.0);
        assert_eq!(empirical_quantile(&xs, 0.26), 2.0);
        assert_eq!(empirical_quantile(&xs, 1.0), 4.0);
        assert_eq!(empirical_quantile(&xs, 0.0), 1.0);
    }
}
