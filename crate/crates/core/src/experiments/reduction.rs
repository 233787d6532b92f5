//! Eigenvector search on conditioned hard instances through shift-and-invert
//! over a bootstrapped linear-system solver.

use rayon::prelude::*;

use super::{Cell, ExperimentConfig, ExperimentReport, SolverKind, Table};
use crate::error::{Error, Result};
use crate::oracle::QueryOracle;
use crate::rng::{TrialRng, CALIBRATION_SEED};
use crate::solvers::{
    boost_restarts, contract_iterations, BootstrapSchedule, Bootstrapped, EigVecAlg, LinSysAlg,
    ShiftInvert, ShiftParams, TruncatedCg,
};
use crate::spectral::gap_of;
use crate::wishart::{calibrate, class_membership_of, sample_conditioned, Calibration};

pub(crate) const TAG: &str = "reduction";

/// Parameters of one reduction run, fixed by the calibration and `d`.
#[derive(Clone, Debug)]
pub struct ReductionPlan {
    pub params: ShiftParams,
    /// Target accuracy of the top eigenvector, `min(sqrt(gap), 1/sqrt(d))`.
    pub eps: f64,
    pub rounds: usize,
    pub schedule: BootstrapSchedule,
    /// Products per call of the truncated CG base.
    pub base_queries: usize,
    pub restarts: usize,
    /// `L (R k T_base + 2)` for the deterministic base.
    pub query_bound: usize,
    /// `K L T_base (ln(1/gap_alpha)/gap_alpha) ln(x)^2 ln ln x` with
    /// `x = d / min(c gap, 1)`.
    pub budget_curve: f64,
}

impl ReductionPlan {
    pub fn new(cfg: &ExperimentConfig, cal: &Calibration) -> Result<Self> {
        let s = cfg.s as f64;
        let gap_param = cal.c2 / (5.0 * s * s);
        let params = ShiftParams::new(gap_param, cal.c1 / cal.c2)?;
        let eps = gap_param.sqrt().min(1.0 / (cfg.d as f64).sqrt());
        let rounds = params.default_rounds(eps, cfg.round_constant);
        let inner_eps = params.inner_tolerance(eps).powi(2);
        let fail = 1.0 / (2.0 * std::f64::consts::E * rounds as f64);
        let schedule = BootstrapSchedule::new(inner_eps, fail)?;
        // The warm-started residual costs one extra product; a full Krylov
        // space of dimension d already solves the system exactly.
        let base_queries = contract_iterations(params.cond_alpha()).min(cfg.d) + 1;
        let restarts = cfg.restarts;
        let query_bound = restarts * (rounds * schedule.query_bound(base_queries, true) + 2);
        let ga = params.gap_alpha();
        let x = cfg.d as f64 / (cfg.c * gap_param).min(1.0);
        let lx = x.ln();
        let budget_curve = cfg.budget_constant
            * restarts as f64
            * base_queries as f64
            * ((1.0 / ga).ln() / ga)
            * lx
            * lx
            * lx.ln();
        Ok(Self {
            params,
            eps,
            rounds,
            schedule,
            base_queries,
            restarts,
            query_bound,
            budget_curve,
        })
    }
}

struct Trial {
    trial: usize,
    attempts: usize,
    class_member: bool,
    lambda1: f64,
    gap: f64,
    rayleigh: f64,
    success: bool,
    queries_used: usize,
}

fn run_trial(
    cfg: &ExperimentConfig,
    cal: &Calibration,
    plan: &ReductionPlan,
    trial: usize,
) -> Result<Trial> {
    let mut rng = TrialRng::for_trial(cfg.seed, TAG, trial as u64);
    let (hi, attempts) = sample_conditioned(cfg.s, cfg.d, cal, &mut rng)?;
    let subspace = hi.block_subspace();
    let class_member = class_membership_of(
        &hi.truth,
        plan.params.gap_param,
        plan.params.alpha,
        Some(&subspace),
    );
    let mut oracle = QueryOracle::new(hi.m.clone(), Some(plan.query_bound), false)?;
    let out = match cfg.solver {
        SolverKind::ShiftInvert => {
            let inner = Bootstrapped {
                base: TruncatedCg {
                    max_queries: plan.base_queries,
                },
                schedule: plan.schedule,
            };
            run_with(plan, inner, subspace, &mut oracle, &mut rng)?
        }
        SolverKind::Cg => {
            let inner = plan.params.certified_inner(plan.eps, cfg.d);
            run_with(plan, inner, subspace, &mut oracle, &mut rng)?
        }
        other => {
            return Err(Error::config(
                "solver",
                format!("reduction runs shift_invert or cg, not '{other}'"),
            ))
        }
    };
    let lambda1 = hi.lambda_max();
    let gap = gap_of(&hi.truth)?;
    let rayleigh = out.lambda_hat.unwrap_or(f64::NAN);
    Ok(Trial {
        trial,
        attempts,
        class_member,
        lambda1,
        gap,
        rayleigh,
        success: rayleigh >= (1.0 - cfg.c * gap) * lambda1,
        queries_used: out.queries_used,
    })
}

fn run_with<L: LinSysAlg>(
    plan: &ReductionPlan,
    inner: L,
    subspace: Vec<Vec<f64>>,
    oracle: &mut QueryOracle,
    rng: &mut TrialRng,
) -> Result<crate::solvers::SolverOutcome> {
    let alg = ShiftInvert {
        params: plan.params,
        rounds: plan.rounds,
        inner,
        subspace: Some(subspace),
    };
    boost_restarts(&alg as &dyn EigVecAlg, oracle, plan.restarts, rng)
}

pub(crate) fn run_reduction(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let cal = calibrate(cfg.s, cfg.delta, cfg.pilot_n, CALIBRATION_SEED)?;
    let plan = ReductionPlan::new(cfg, &cal)?;
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, &cal, &plan, i))
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "d",
        "s",
        "attempts",
        "class_member",
        "lambda1",
        "gap",
        "rayleigh",
        "success",
        "queries_used",
        "query_bound",
        "budget_curve",
    ]);
    for t in &trials {
        table.push(
            cfg.seed,
            Some(t.trial),
            vec![
                cfg.d.into(),
                cfg.s.into(),
                t.attempts.into(),
                t.class_member.into(),
                t.lambda1.into(),
                t.gap.into(),
                t.rayleigh.into(),
                t.success.into(),
                t.queries_used.into(),
                plan.query_bound.into(),
                plan.budget_curve.into(),
            ],
        );
    }
    let n = trials.len() as f64;
    let successes = trials.iter().filter(|t| t.success).count();
    let members = trials.iter().filter(|t| t.class_member).count();
    let max_queries = trials.iter().map(|t| t.queries_used).max().unwrap_or(0);
    let mean_queries = trials.iter().map(|t| t.queries_used as f64).sum::<f64>() / n;
    let success_frequency = successes as f64 / n;
    let curve_ratio = max_queries as f64 / plan.budget_curve;
    let summary = vec![
        ("gap_param".to_string(), Cell::Real(plan.params.gap_param)),
        ("alpha".into(), plan.params.alpha.into()),
        ("gap_alpha".into(), plan.params.gap_alpha().into()),
        ("cond_alpha".into(), plan.params.cond_alpha().into()),
        ("eps".into(), plan.eps.into()),
        ("rounds".into(), plan.rounds.into()),
        ("bootstrap_restarts".into(), plan.schedule.restarts.into()),
        ("bootstrap_copies".into(), plan.schedule.copies.into()),
        ("base_queries".into(), plan.base_queries.into()),
        ("boost_restarts".into(), plan.restarts.into()),
        ("class_member_frequency".into(), (members as f64 / n).into()),
        ("success_frequency".into(), success_frequency.into()),
        ("mean_queries".into(), mean_queries.into()),
        ("max_queries".into(), max_queries.into()),
        ("query_bound".into(), plan.query_bound.into()),
        ("budget_curve".into(), plan.budget_curve.into()),
        ("max_queries_over_curve".into(), curve_ratio.into()),
    ];
    Ok(ExperimentReport {
        config: cfg.clone(),
        calibration: Some(cal),
        summary,
        table,
        pass: success_frequency >= 0.9 && curve_ratio <= 1.0 && max_queries <= plan.query_bound,
    })
}
