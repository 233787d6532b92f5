//! White-box checks of the lower-bound machinery: the rotation construction,
//! the law of the unrevealed corner `W~`, and the corner-eigenvalue witness.

mod ks;
mod rotation;

pub use ks::{ks_one_sample, ks_two_sample, ks_two_sample_critical};
pub use rotation::{
    assemble_blocks, block_identity_residual, build_rotations, corner_witness, extract_corner,
    CornerExtract, RotationPair, Witness, MAX_BLOCK_CONDITION,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::oracle::{gram_schmidt, MatVecOracle, QueryOracle};
use crate::rng::TrialRng;
use crate::spectral::{eig_sym, SymmetricMatrix};
use crate::wishart::{sample_factor, sample_wishart};

/// Summary written for every verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub lemma: String,
    pub d: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub discards: usize,
    pub pass: bool,
}

/// Fraction of discarded trials above which a run fails.
pub const MAX_DISCARD_RATE: f64 = 0.01;
/// Block identity tolerance relative to `||W||`.
pub const BLOCK_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance of the corner bound and relative tolerance of the witness.
pub const WITNESS_TOLERANCE: f64 = 1e-10;

/// `T` queries of the power method started uniformly on the sphere: each
/// query is the normalized previous response.
pub fn adaptive_power_queries<O: MatVecOracle + ?Sized>(
    oracle: &mut O,
    t: usize,
    rng: &mut TrialRng,
) -> Result<()> {
    let mut u = rng.unit_sphere(oracle.dim());
    for _ in 0..t {
        let mut w = oracle.query(&u)?;
        if dense::normalize(&mut w) == 0.0 {
            return Err(Error::DegenerateSpan { step: 0 });
        }
        u = w;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorTrial {
    pub trial: usize,
    /// `(d-T)^2 lambda_min(d/(d-T) W~)`.
    pub scaled_corner_edge: f64,
    /// `d^2 lambda_min(W)`.
    pub scaled_edge: f64,
    pub block_residual: f64,
    /// `lambda_min(W) - lambda_min(W~)`; nonpositive up to rounding.
    pub corner_excess: f64,
    /// `|z^T M z - lambda_min(W~)| / ||W||`, zero when `T = 0`.
    pub witness_error: f64,
}

/// Why a trial was dropped (measure-zero degeneracies only).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discard {
    pub trial: usize,
    pub reason: String,
}

fn is_discardable(e: &Error) -> bool {
    matches!(
        e,
        Error::DependentVector { .. } | Error::DegenerateSpan { .. } | Error::SingularBlock { .. }
    )
}

/// One trial of the conditional-corner experiment: sample `X`, let the power
/// method query `W = X X^T` `T` times, rotate, and measure the corner.
pub fn posterior_trial(d: usize, t: usize, seed: u64, trial: usize) -> Result<PosteriorTrial> {
    if t >= d {
        return Err(Error::DomainError(format!(
            "need T < d, got T = {t}, d = {d}"
        )));
    }
    let mut rng = TrialRng::for_trial(seed, "posterior", trial as u64);
    let x = sample_factor(d, &mut rng);
    let w = SymmetricMatrix::new(x.gram_rows())?;
    let budget = if t == 0 { None } else { Some(t) };
    let mut oracle = QueryOracle::new(w, budget, true)?;
    adaptive_power_queries(&mut oracle, t, &mut rng)?;
    let queries = gram_schmidt(&oracle.ledger().queries())?;
    let rp = build_rotations(&queries, &x)?;
    let ce = extract_corner(&rp, &x)?;
    let w = oracle.white_box();
    let w_spec = eig_sym(w)?;
    let w_norm = w_spec.norm().max(f64::MIN_POSITIVE);
    let block_residual = block_identity_residual(&rp, &ce, w)?;
    let corner_spec = eig_sym(&ce.w_tilde)?;
    let n = (d - t) as f64;
    let scaled_corner_edge = n * n * (d as f64 / n) * corner_spec.lambda_min();
    let witness_error = if t == 0 {
        0.0
    } else {
        let wit = corner_witness(&ce.y1, &ce.y2, &ce.w_tilde)?;
        (wit.quadratic - wit.lambda_min_w).abs() / w_norm
    };
    Ok(PosteriorTrial {
        trial,
        scaled_corner_edge,
        scaled_edge: (d * d) as f64 * w_spec.lambda_min(),
        block_residual,
        corner_excess: w_spec.lambda_min() - corner_spec.lambda_min(),
        witness_error,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PosteriorRun {
    pub report: VerificationReport,
    pub trials: Vec<PosteriorTrial>,
    pub fresh: Vec<f64>,
    pub discarded: Vec<Discard>,
    pub max_block_residual: f64,
    pub corner_bound_violations: usize,
    pub max_witness_error: f64,
}

/// Two-sample test of `(d-T)^2 lambda_min(d/(d-T) W~)` over `n` adaptive
/// trials against `n` fresh `Wishart(d-T)` draws.
pub fn run_posterior(
    d: usize,
    t: usize,
    n: usize,
    threshold: f64,
    seed: u64,
) -> Result<PosteriorRun> {
    if n == 0 {
        return Err(Error::config("trials", "must be positive"));
    }
    let outcomes: Vec<Result<PosteriorTrial>> = (0..n)
        .into_par_iter()
        .map(|i| posterior_trial(d, t, seed, i))
        .collect();
    let mut trials = Vec::with_capacity(n);
    let mut discarded = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(tr) => trials.push(tr),
            Err(e) if is_discardable(&e) => discarded.push(Discard {
                trial: i,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let dt = d - t;
    let fresh: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = TrialRng::for_trial(seed, "posterior-fresh", i as u64);
            sample_wishart(dt, &mut rng).map(|s| s.scaled_edge())
        })
        .collect::<Result<_>>()?;
    let stats: Vec<f64> = trials.iter().map(|t| t.scaled_corner_edge).collect();
    let statistic = if stats.is_empty() {
        1.0
    } else {
        ks_two_sample(&stats, &fresh)
    };
    let max_block_residual = trials.iter().fold(0.0f64, |m, t| m.max(t.block_residual));
    let corner_bound_violations = trials
        .iter()
        .filter(|t| t.corner_excess > WITNESS_TOLERANCE)
        .count();
    let max_witness_error = trials.iter().fold(0.0f64, |m, t| m.max(t.witness_error));
    let pass = statistic <= threshold
        && (discarded.len() as f64) <= MAX_DISCARD_RATE * n as f64
        && max_block_residual <= BLOCK_TOLERANCE
        && corner_bound_violations == 0;
    Ok(PosteriorRun {
        report: VerificationReport {
            lemma: "conditional-wishart".into(),
            d,
            t,
            n,
            statistic,
            threshold,
            discards: discarded.len(),
            pass,
        },
        trials,
        fresh,
        discarded,
        max_block_residual,
        corner_bound_violations,
        max_witness_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerTrial {
    pub trial: usize,
    pub lambda_min_m: f64,
    pub lambda_min_w: f64,
    pub quadratic: f64,
    pub quadratic_factored: f64,
    pub value: f64,
    pub norm_m: f64,
    pub cond_a: f64,
}

impl CornerTrial {
    /// `lambda_min(M) <= lambda_min(W)`, `z^T M z = lambda_min(W)` and the
    /// normalized value not above `lambda_min(W)`, all within tolerance.
    pub fn holds(&self) -> bool {
        self.lambda_min_m <= self.lambda_min_w + WITNESS_TOLERANCE
            && (self.quadratic - self.lambda_min_w).abs() <= WITNESS_TOLERANCE * self.norm_m
            && self.value <= self.lambda_min_w + WITNESS_TOLERANCE
    }
}

/// One random block trial: `A` is `T x T` and `B` is `(d-T) x T` with
/// `N(0, 1/d)` entries; `W ~ Wishart(d-T)`.
pub fn corner_trial(d: usize, t: usize, seed: u64, trial: usize) -> Result<CornerTrial> {
    if t == 0 || t >= d {
        return Err(Error::DomainError(format!(
            "need 0 < T < d, got T = {t}, d = {d}"
        )));
    }
    let mut rng = TrialRng::for_trial(seed, "corner", trial as u64);
    let s = 1.0 / (d as f64).sqrt();
    let mut gauss = |r: usize, c: usize| {
        let data: Vec<f64> = (0..r * c).map(|_| s * rng.gaussian()).collect();
        Matrix::from_row_major(r, c, data)
    };
    let a = gauss(t, t)?;
    let b = gauss(d - t, t)?;
    let w = sample_wishart(d - t, &mut rng)?.w;
    let wit = corner_witness(&a, &b, &w)?;
    let m = SymmetricMatrix::new(assemble_blocks(&a, &b, w.as_matrix()))?;
    let m_spec = eig_sym(&m)?;
    Ok(CornerTrial {
        trial,
        lambda_min_m: m_spec.lambda_min(),
        lambda_min_w: wit.lambda_min_w,
        quadratic: wit.quadratic,
        quadratic_factored: wit.quadratic_factored,
        value: wit.value,
        norm_m: m_spec.norm(),
        cond_a: wit.cond_a,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CornerRun {
    pub report: VerificationReport,
    pub trials: Vec<CornerTrial>,
    pub discarded: Vec<Discard>,
    pub violations: usize,
}

/// Repeats [`corner_trial`]; the statistic is the largest witness error
/// `|z^T M z - lambda_min(W)| / ||M||`.
pub fn run_corner_lemma(d: usize, t: usize, n: usize, seed: u64) -> Result<CornerRun> {
    let outcomes: Vec<Result<CornerTrial>> = (0..n)
        .into_par_iter()
        .map(|i| corner_trial(d, t, seed, i))
        .collect();
    let mut trials = Vec::with_capacity(n);
    let mut discarded = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(tr) => trials.push(tr),
            Err(e) if is_discardable(&e) => discarded.push(Discard {
                trial: i,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let violations = trials.iter().filter(|t| !t.holds()).count();
    let statistic = trials.iter().fold(0.0f64, |m, t| {
        m.max((t.quadratic - t.lambda_min_w).abs() / t.norm_m)
    });
    let pass = violations == 0 && (discarded.len() as f64) <= MAX_DISCARD_RATE * n as f64;
    Ok(CornerRun {
        report: VerificationReport {
            lemma: "corner-witness".into(),
            d,
            t,
            n,
            statistic,
            threshold: WITNESS_TOLERANCE,
            discards: discarded.len(),
            pass,
        },
        trials,
        discarded,
        violations,
    })
}
