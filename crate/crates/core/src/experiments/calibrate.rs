//! Good-event constants and a fresh check of how often all three events hold.

use rayon::prelude::*;

use super::{Cell, ExperimentConfig, ExperimentReport, Table};
use crate::error::Result;
use crate::rng::{TrialRng, CALIBRATION_SEED};
use crate::wishart::{calibrate, check_good_event, sample_wishart};

pub(crate) const TAG: &str = "calibrate-check";

/// Minimum frequency of the full good event on fresh samples.
pub const MIN_EVENT_FREQUENCY: f64 = 0.6;

/// The pilot always uses the fixed calibration seed; `cfg.seed` drives only
/// the fresh check samples.
pub(crate) fn run_calibrate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    let cal = calibrate(d, cfg.delta, cfg.pilot_n, CALIBRATION_SEED)?;
    let params = cal.params();
    let flags: Vec<_> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = TrialRng::for_trial(cfg.seed, TAG, i as u64);
            let w = sample_wishart(d, &mut rng)?;
            Ok((
                w.scaled_edge(),
                w.scaled_edge_gap(),
                w.spectrum.norm(),
                check_good_event(&w, &params),
            ))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "d",
        "scaled_edge",
        "scaled_gap",
        "norm",
        "edge_small",
        "gap_large",
        "norm_ok",
        "all",
    ]);
    for (i, (e, g, n, f)) in flags.iter().enumerate() {
        table.push(
            cfg.seed,
            Some(i),
            vec![
                d.into(),
                (*e).into(),
                (*g).into(),
                (*n).into(),
                f.edge_small.into(),
                f.gap_large.into(),
                f.norm_ok.into(),
                f.all().into(),
            ],
        );
    }
    let n = flags.len() as f64;
    let freq = |pick: fn(&crate::wishart::GoodEventFlags) -> bool| {
        flags.iter().filter(|x| pick(&x.3)).count() as f64 / n
    };
    let all = freq(|f| f.all());
    let summary = vec![
        ("C1".to_string(), Cell::Real(cal.c1)),
        ("C2".into(), cal.c2.into()),
        ("pilot_event_rate".into(), cal.event_rate.into()),
        ("edge_small_frequency".into(), freq(|f| f.edge_small).into()),
        ("gap_large_frequency".into(), freq(|f| f.gap_large).into()),
        ("norm_ok_frequency".into(), freq(|f| f.norm_ok).into()),
        ("all_events_frequency".into(), all.into()),
    ];
    Ok(ExperimentReport {
        config: cfg.clone(),
        calibration: Some(cal),
        summary,
        table,
        pass: all >= MIN_EVENT_FREQUENCY,
    })
}
