//! Empirical hard-edge statistic against the limiting law.

use rayon::prelude::*;

use super::{Cell, ExperimentConfig, ExperimentReport, Table};
use crate::error::Result;
use crate::rng::TrialRng;
use crate::verify::ks_one_sample;
use crate::wishart::{edge_cdf, edge_cdf_by_quadrature, edge_pdf, sample_wishart};

pub(crate) const TAG: &str = "density";

/// Quadrature agreement required on the grid.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Grid rows (`row_kind = grid`, no trial) followed by one row per sample.
pub(crate) fn run_density(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    let samples: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = TrialRng::for_trial(cfg.seed, TAG, i as u64);
            let w = sample_wishart(d, &mut rng)?;
            Ok((w.scaled_edge(), w.spectrum.norm()))
        })
        .collect::<Result<_>>()?;
    let mut edges: Vec<f64> = samples.iter().map(|s| s.0).collect();
    edges.sort_by(f64::total_cmp);
    let n = edges.len() as f64;
    let ecdf = |x: f64| edges.partition_point(|&e| e <= x) as f64 / n;

    let mut table = Table::new(&[
        "row_kind",
        "d",
        "x",
        "pdf",
        "cdf",
        "cdf_quadrature",
        "empirical_cdf",
        "scaled_edge",
        "norm",
    ]);
    let mut max_quad_err: f64 = 0.0;
    for k in 0..=100 {
        let x = k as f64 * 0.1;
        let (cdf, quad) = (edge_cdf(x), edge_cdf_by_quadrature(x));
        max_quad_err = max_quad_err.max((cdf - quad).abs());
        table.push(
            cfg.seed,
            None,
            vec![
                "grid".into(),
                d.into(),
                x.into(),
                edge_pdf(x).into(),
                cdf.into(),
                quad.into(),
                ecdf(x).into(),
                Cell::Empty,
                Cell::Empty,
            ],
        );
    }
    for (i, &(e, norm)) in samples.iter().enumerate() {
        table.push(
            cfg.seed,
            Some(i),
            vec![
                "sample".into(),
                d.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                e.into(),
                norm.into(),
            ],
        );
    }

    let ks = ks_one_sample(&edges, edge_cdf);
    let p_ge_1 = 1.0 - edges.partition_point(|&e| e < 1.0) as f64 / n;
    let alpha: f64 = 0.25;
    let p_small = ecdf(alpha * alpha);
    let norm_fraction = samples.iter().filter(|s| s.1 < 5.0).count() as f64 / n;
    let pass = ks <= cfg.threshold
        && (0.12..=0.35).contains(&p_ge_1)
        && p_small >= 0.5 * alpha
        && norm_fraction >= 0.99
        && max_quad_err <= QUADRATURE_TOLERANCE;
    let summary = vec![
        ("ks_statistic".to_string(), Cell::Real(ks)),
        ("threshold".into(), cfg.threshold.into()),
        ("p_scaled_edge_ge_1".into(), p_ge_1.into()),
        ("p_scaled_edge_le_alpha_sq".into(), p_small.into()),
        ("alpha".into(), alpha.into()),
        ("norm_below_5_fraction".into(), norm_fraction.into()),
        ("max_quadrature_error".into(), max_quad_err.into()),
    ];
    Ok(ExperimentReport {
        config: cfg.clone(),
        calibration: None,
        summary,
        table,
        pass,
    })
}
