//! Failure frequency of `lambda_min(W)` estimation against the query budget.

use rayon::prelude::*;

use super::{estimate_lambda_min, Cell, ExperimentConfig, ExperimentReport, Table};
use crate::error::Result;
use crate::rng::TrialRng;
use crate::wishart::sample_wishart;

pub(crate) const TAG: &str = "tradeoff";

struct Row {
    t: usize,
    trial: usize,
    lambda_hat_min: f64,
    lambda_min: f64,
    queries_used: usize,
}

/// Trial `i` draws the same `W` and solver start for every `T`, so columns
/// of the grid are paired.
pub(crate) fn run_tradeoff(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    let grid = cfg.resolved_grid();
    let tol = 1.0 / (4.0 * (d * d) as f64);
    let jobs: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&t| (0..cfg.trials).map(move |i| (t, i)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(t, trial)| {
            let mut rng = TrialRng::for_trial(cfg.seed, TAG, trial as u64);
            let w = sample_wishart(d, &mut rng)?;
            let est = estimate_lambda_min(cfg.solver, &w.w, t, &mut rng)?;
            Ok(Row {
                t,
                trial,
                lambda_hat_min: est.lambda_hat_min,
                lambda_min: w.lambda_min(),
                queries_used: est.queries_used,
            })
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "d",
        "T",
        "solver",
        "lambda_hat_min",
        "lambda_min",
        "abs_error",
        "tolerance",
        "failure",
        "queries_used",
    ]);
    let mut summary = vec![("tolerance".to_string(), Cell::Real(tol))];
    let mut pass = true;
    for &t in &grid {
        let mut failures = 0;
        for r in rows.iter().filter(|r| r.t == t) {
            let err = (r.lambda_hat_min - r.lambda_min).abs();
            let fail = !(err < tol);
            failures += fail as usize;
            table.push(
                cfg.seed,
                Some(r.trial),
                vec![
                    d.into(),
                    t.into(),
                    cfg.solver.as_str().into(),
                    r.lambda_hat_min.into(),
                    r.lambda_min.into(),
                    err.into(),
                    tol.into(),
                    fail.into(),
                    r.queries_used.into(),
                ],
            );
        }
        let freq = failures as f64 / cfg.trials as f64;
        summary.push((format!("failure_frequency_T{t}"), Cell::Real(freq)));
        // A full Krylov space pins lambda_min down exactly.
        if t == d && cfg.solver == super::SolverKind::Lanczos && failures > 0 {
            pass = false;
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        calibration: None,
        summary,
        table,
        pass,
    })
}
