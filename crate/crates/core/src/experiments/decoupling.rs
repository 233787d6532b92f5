//! Estimator outcome against the unqueried corner at the thresholds
//! `t = 1/(2d^2)`, `eps = 1/(4d^2)`.

use rayon::prelude::*;

use super::{estimate_lambda_min, Cell, ExperimentConfig, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::oracle::gram_schmidt;
use crate::rng::TrialRng;
use crate::spectral::eig_sym;
use crate::verify::{build_rotations, extract_corner, Discard, MAX_DISCARD_RATE};
use crate::wishart::sample_wishart;

pub(crate) const TAG: &str = "decoupling";

struct Trial {
    trial: usize,
    lambda_hat_min: f64,
    lambda_min: f64,
    lambda_min_corner: f64,
    queries_used: usize,
}

fn run_trial(cfg: &ExperimentConfig, t: usize, trial: usize) -> Result<Trial> {
    let mut rng = TrialRng::for_trial(cfg.seed, TAG, trial as u64);
    let w = sample_wishart(cfg.d, &mut rng)?;
    let est = estimate_lambda_min(cfg.solver, &w.w, t, &mut rng)?;
    let lambda_min_corner = if est.queries.is_empty() {
        w.lambda_min()
    } else {
        let basis = gram_schmidt(&est.queries)?;
        let rp = build_rotations(&basis, &w.x)?;
        let ce = extract_corner(&rp, &w.x)?;
        eig_sym(&ce.w_tilde)?.lambda_min()
    };
    Ok(Trial {
        trial,
        lambda_hat_min: est.lambda_hat_min,
        lambda_min: w.lambda_min(),
        lambda_min_corner,
        queries_used: est.queries_used,
    })
}

/// Runs with `T = grid[0]`, defaulting to `floor((1 - beta) d)`.
pub(crate) fn run_decoupling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    let t = cfg
        .grid
        .first()
        .copied()
        .unwrap_or(((1.0 - cfg.beta) * d as f64).floor() as usize);
    if t >= d {
        return Err(Error::config(
            "grid",
            format!("need T < d, got T = {t}, d = {d}"),
        ));
    }
    let d2 = (d * d) as f64;
    let thr = 1.0 / (2.0 * d2);
    let eps = 1.0 / (4.0 * d2);

    let outcomes: Vec<Result<Trial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, t, i))
        .collect();
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut discarded = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(tr) => trials.push(tr),
            Err(e @ (Error::DependentVector { .. } | Error::DegenerateSpan { .. })) => discarded
                .push(Discard {
                    trial: i,
                    reason: e.to_string(),
                }),
            Err(e) => return Err(e),
        }
    }
    if trials.is_empty() {
        return Err(Error::NumericalBreakdown(
            "every decoupling trial was discarded".into(),
        ));
    }

    let mut table = Table::new(&[
        "d",
        "T",
        "solver",
        "lambda_hat_min",
        "lambda_min",
        "lambda_min_corner",
        "estimate_above_t",
        "corner_below",
        "true_below",
        "true_above",
        "error_event",
        "queries_used",
    ]);
    let (mut est_above, mut corner_below, mut true_above, mut err) = (0, 0, 0, 0);
    let (mut joint, mut joint_corner, mut edge_quarter) = (0, 0, 0);
    for tr in &trials {
        let a = tr.lambda_hat_min >= thr;
        let cb = tr.lambda_min_corner <= thr - eps;
        let tb = tr.lambda_min <= thr - eps;
        let ta = tr.lambda_min >= thr + eps;
        let e = (tr.lambda_hat_min - tr.lambda_min).abs() >= eps;
        est_above += a as usize;
        corner_below += cb as usize;
        true_above += ta as usize;
        err += e as usize;
        joint += (a && tb) as usize;
        joint_corner += (a && cb) as usize;
        edge_quarter += (d2 * tr.lambda_min <= 0.25) as usize;
        table.push(
            cfg.seed,
            Some(tr.trial),
            vec![
                d.into(),
                t.into(),
                cfg.solver.as_str().into(),
                tr.lambda_hat_min.into(),
                tr.lambda_min.into(),
                tr.lambda_min_corner.into(),
                a.into(),
                cb.into(),
                tb.into(),
                ta.into(),
                e.into(),
                tr.queries_used.into(),
            ],
        );
    }
    let n = trials.len() as f64;
    let p = |k: usize| k as f64 / n;
    let p_est = p(est_above);
    let p_corner = p(corner_below);
    let p_true_above = p(true_above);
    let product = p_est * p_corner;
    let p_joint = p(joint);
    // Lower bounds on the error probability implied by decoupling and by
    // `Pr[lambda_hat >= t] >= Pr[lambda_min >= t + eps] - p_err`.
    let p_err_bound = p_corner * p_true_above / (1.0 + p_corner);
    let p_err_from_tail = (p_true_above - p_est).max(0.0);
    let pass = p_joint >= product * (1.0 - cfg.slack)
        && (discarded.len() as f64) <= MAX_DISCARD_RATE * cfg.trials as f64;
    let summary = vec![
        ("T".to_string(), Cell::from(t)),
        ("t".into(), thr.into()),
        ("eps".into(), eps.into()),
        ("discards".into(), discarded.len().into()),
        ("p_estimate_above_t".into(), p_est.into()),
        ("p_corner_below".into(), p_corner.into()),
        ("p_joint".into(), p_joint.into()),
        ("p_joint_corner".into(), p(joint_corner).into()),
        ("product".into(), product.into()),
        ("p_true_above".into(), p_true_above.into()),
        ("p_err".into(), p(err).into()),
        ("p_err_bound".into(), p_err_bound.into()),
        ("p_err_from_tail".into(), p_err_from_tail.into()),
        ("p_scaled_edge_le_quarter".into(), p(edge_quarter).into()),
        ("slack".into(), cfg.slack.into()),
    ];
    Ok(ExperimentReport {
        config: cfg.clone(),
        calibration: None,
        summary,
        table,
        pass,
    })
}
