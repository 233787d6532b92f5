//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::io::Write;
use std::time::Instant;

use querylab::experiments::{self, Cell, ExperimentConfig, ExperimentKind, Format, SolverKind};
use querylab::solvers::{
    boost_restarts, bootstrap_solve, lanczos, BootstrapSchedule, PowerMethod, TruncatedCg,
};
use querylab::spectral::{gap_of, random_spd};
use querylab::verify::{run_corner_lemma, run_posterior, BLOCK_TOLERANCE, MAX_DISCARD_RATE};
use querylab::wishart::{
    calibrate, edge_cdf, edge_cdf_by_quadrature, sample_conditioned, sample_wishart,
};
use querylab::{dense, rng::CALIBRATION_SEED, QueryOracle, SymmetricMatrix, TrialRng};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> querylab::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Density of the limiting law, written out independently of the library.
fn density(x: f64) -> f64 {
    0.5 * (1.0 / x.sqrt() + 1.0) * (-(x / 2.0 + x.sqrt())).exp()
}

/// Composite Simpson on `u in [0, sqrt(x)]` after `x = u^2`.
fn simpson_cdf(x: f64, n: usize) -> f64 {
    let b = x.sqrt();
    let h = b / n as f64;
    let g = |u: f64| {
        if u == 0.0 {
            1.0
        } else {
            2.0 * u * density(u * u)
        }
    };
    let mut s = g(0.0) + g(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    s * h / 3.0
}

fn criterion_1() -> querylab::Result<Outcome> {
    let mut worst: f64 = 0.0;
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let closed = edge_cdf(x);
        worst = worst
            .max((closed - edge_cdf_by_quadrature(x)).abs())
            .max((closed - simpson_cdf(x, 20_000)).abs());
    }
    let total = edge_cdf_by_quadrature(60.0);
    let total_simpson = simpson_cdf(60.0, 200_000);
    let mass_err = (total - 1.0).abs().max((total_simpson - 1.0).abs());
    outcome(
        worst <= 1e-8 && mass_err <= 1e-6,
        format!("max |cdf - quadrature| = {worst:.3e}, |mass - 1| = {mass_err:.3e}"),
    )
}

fn scaled_edges(report: &experiments::ExperimentReport) -> Vec<(f64, f64)> {
    let t = &report.table;
    let (e, n) = (t.column("scaled_edge").unwrap(), t.column("norm").unwrap());
    t.rows
        .iter()
        .filter_map(|r| match (&r[e], &r[n]) {
            (Cell::Real(a), Cell::Real(b)) => Some((*a, *b)),
            _ => None,
        })
        .collect()
}

fn density_report(trials: usize) -> querylab::Result<experiments::ExperimentReport> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Density);
    cfg.d = 128;
    cfg.trials = trials;
    cfg.seed = SEED;
    experiments::run(&cfg)
}

fn criterion_2(r: &experiments::ExperimentReport) -> querylab::Result<Outcome> {
    let ks = r.summary_real("ks_statistic").unwrap();
    // independent recomputation of the one-sample statistic
    let mut xs: Vec<f64> = scaled_edges(r).iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut own: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = 1.0 - (-(x / 2.0 + x.sqrt())).exp();
        own = own
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    outcome(
        ks <= 0.06 && (ks - own).abs() < 1e-12 && xs.len() == 1000,
        format!("KS = {ks:.4} over {} samples (threshold 0.06)", xs.len()),
    )
}

fn criterion_3(r: &experiments::ExperimentReport) -> querylab::Result<Outcome> {
    let xs: Vec<f64> = scaled_edges(r).iter().map(|p| p.0).collect();
    let n = xs.len() as f64;
    let frac = |pred: &dyn Fn(f64) -> bool| xs.iter().filter(|&&x| pred(x)).count() as f64 / n;
    let p_ge_1 = frac(&|x| x >= 1.0);
    let mut pass = (0.12..=0.35).contains(&p_ge_1);
    let mut detail = format!("Pr[>= 1] = {p_ge_1:.3}");
    for alpha in [0.25f64, 0.5] {
        let p = frac(&|x| x <= alpha * alpha);
        pass &= p >= 0.5 * alpha;
        detail.push_str(&format!(
            ", Pr[<= {:.4}] = {p:.3} (need {:.3})",
            alpha * alpha,
            0.5 * alpha
        ));
    }
    outcome(pass, detail)
}

fn criterion_4(r: &experiments::ExperimentReport) -> querylab::Result<Outcome> {
    let first: Vec<f64> = scaled_edges(r).iter().take(500).map(|p| p.1).collect();
    let frac = first.iter().filter(|&&v| v < 5.0).count() as f64 / first.len() as f64;
    outcome(
        frac >= 0.99 && first.len() == 500,
        format!("fraction with ||W|| < 5 = {frac:.4} over {}", first.len()),
    )
}

fn criterion_5() -> querylab::Result<Outcome> {
    let run = run_corner_lemma(16, 4, 1000, SEED)?;
    let ok = run.trials.iter().filter(|t| {
        t.lambda_min_m <= t.lambda_min_w + 1e-10
            && (t.quadratic - t.lambda_min_w).abs() <= 1e-10 * t.norm_m
    });
    let held = ok.count();
    outcome(
        held == 1000,
        format!(
            "{held}/1000 trials hold, max witness error {:.3e}, discards {}",
            run.report.statistic, run.report.discards
        ),
    )
}

fn criterion_6() -> querylab::Result<Outcome> {
    let run = run_posterior(64, 16, 500, 0.10, SEED)?;
    let r = &run.report;
    let pass = r.statistic <= 0.10
        && run.max_block_residual <= BLOCK_TOLERANCE
        && (r.discards as f64) <= MAX_DISCARD_RATE * 500.0;
    outcome(
        pass,
        format!(
            "two-sample KS = {:.4}, max block residual = {:.3e}, discards = {}",
            r.statistic, run.max_block_residual, r.discards
        ),
    )
}

fn criterion_7() -> querylab::Result<Outcome> {
    let d = 64;
    let mut worst: f64 = 0.0;
    let mut held = 0;
    for i in 0..100u64 {
        let mut rng = TrialRng::for_trial(SEED, "full-budget", i);
        let w = sample_wishart(d, &mut rng)?;
        let mut o = QueryOracle::new(w.w.clone(), Some(d), false)?;
        let out = lanczos(&mut o, d, &mut rng)?;
        let err = (out.lambda_hat_min.unwrap() - w.lambda_min()).abs();
        worst = worst.max(err);
        held += (err <= 1e-8) as usize;
    }
    outcome(
        held == 100,
        format!("{held}/100 within 1e-8, max error {worst:.3e}"),
    )
}

fn criterion_8() -> querylab::Result<Outcome> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Tradeoff);
    cfg.d = 128;
    cfg.trials = 200;
    cfg.seed = SEED;
    cfg.solver = SolverKind::Lanczos;
    cfg.grid = vec![64];
    let r = experiments::run(&cfg)?;
    let f = r.summary_real("failure_frequency_T64").unwrap();
    outcome(
        f >= 0.25,
        format!("failure frequency at T = d/2: {f:.3} (need >= 0.25)"),
    )
}

fn criterion_9() -> querylab::Result<Outcome> {
    let s = 64;
    let cal = calibrate(s, 0.3, 2000, CALIBRATION_SEED)?;
    let s2 = (s * s) as f64;
    let mut held = 0;
    for i in 0..100u64 {
        let mut rng = TrialRng::for_trial(SEED, "conditioned", i);
        let (hi, _) = sample_conditioned(s, s, &cal, &mut rng)?;
        let spec = &hi.truth;
        let nnz =
            hi.m.as_matrix()
                .as_slice()
                .iter()
                .filter(|v| **v != 0.0)
                .count();
        let ok = spec.lambda_min() >= -1e-12
            && spec.lambda_max() <= 1.0 + 1e-12
            && (spec.lambda_max() - 1.0).abs() <= cal.c1 / (5.0 * s2)
            && gap_of(spec)? >= cal.c2 / (10.0 * s2)
            && nnz <= s * s;
        held += ok as usize;
    }
    outcome(
        held == 100,
        format!(
            "{held}/100 accepted instances in class (C1 = {:.4}, C2 = {:.4})",
            cal.c1, cal.c2
        ),
    )
}

fn criterion_10() -> querylab::Result<Outcome> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Reduction);
    cfg.d = 64;
    cfg.s = 64;
    cfg.trials = 100;
    cfg.seed = SEED;
    let r = experiments::run(&cfg)?;
    let freq = r.summary_real("success_frequency").unwrap();
    let max_q = r.summary_real("max_queries").unwrap();
    let curve = r.summary_real("budget_curve").unwrap();
    outcome(
        freq >= 0.9 && max_q <= curve,
        format!("success frequency {freq:.2}, max queries {max_q} vs budget curve {curve:.0}"),
    )
}

fn criterion_11() -> querylab::Result<Outcome> {
    let d = 64;
    let base = TruncatedCg::for_contract(100.0);
    let sched = BootstrapSchedule {
        restarts: 10,
        copies: 1,
    };
    let bound = (-10.0f64).exp();
    let mut held = 0;
    for i in 0..100u64 {
        let mut rng = TrialRng::for_trial(SEED, "bootstrap", i);
        let cond = 2.0 + 98.0 * rng.uniform();
        let a = random_spd(d, cond, &mut rng);
        let b = rng.gaussian_vec(d);
        let x0 = rng.gaussian_vec(d);
        let x_star = dense::solve(a.as_matrix(), &b)?;
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(&x_star).map(|(p, q)| p - q).collect();
            0.5 * dense::dot(&e, &a.mul_vec(&e))
        };
        let mut o = QueryOracle::unlimited(a.clone());
        let out = bootstrap_solve(&base, &mut o, &b, &x0, sched, &mut rng)?;
        held += (energy(out.x_hat.as_ref().unwrap()) <= bound * energy(&x0)) as usize;
    }

    // top gap 5%, power method too short to settle reliably
    let mut diag = vec![1.0, 0.95];
    diag.extend((0..d - 2).map(|k| 0.9 * k as f64 / (d - 3) as f64));
    let m = SymmetricMatrix::diag(&diag)?;
    let alg = PowerMethod { iterations: 6 };
    let mut freqs = Vec::new();
    for l in [1usize, 3, 5] {
        let mut fails = 0;
        for i in 0..200u64 {
            let mut rng = TrialRng::for_trial(SEED, "boost", i);
            let mut o = QueryOracle::unlimited(m.clone());
            let out = boost_restarts(&alg, &mut o, l, &mut rng)?;
            fails += (out.lambda_hat.unwrap() < 0.95) as usize;
        }
        freqs.push(fails as f64 / 200.0);
    }
    let monotone = freqs.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        held >= 95 && monotone,
        format!("{held}/100 contracted by e^-10; boost failure over L = 1, 3, 5: {freqs:?}"),
    )
}

fn criterion_12() -> querylab::Result<Outcome> {
    let dir = std::env::temp_dir().join(format!("querylab-repro-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let mut checked = 0;
    for &kind in ExperimentKind::ALL {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.d = 24;
        cfg.s = 24;
        cfg.seed = SEED;
        cfg.pilot_n = 300;
        cfg.trials = match kind {
            ExperimentKind::Reduction => 2,
            _ => 20,
        };
        for format in [Format::Csv, Format::Json] {
            cfg.format = format;
            let mut bytes = Vec::new();
            for run in 0..2 {
                let path = dir.join(format!("{kind}-{format}-{run}"));
                std::fs::write(
                    &path,
                    experiments::render(&experiments::run(&cfg)?, format)?,
                )?;
                bytes.push(std::fs::read(&path)?);
            }
            if bytes[0] != bytes[1] {
                std::fs::remove_dir_all(&dir)?;
                return outcome(false, format!("{kind} ({format}) differs between runs"));
            }
            checked += 1;
        }
    }
    std::fs::remove_dir_all(&dir)?;
    outcome(
        true,
        format!("{checked} experiment/format pairs byte-identical"),
    )
}

fn main() {
    let mut failed = Vec::new();
    let density = density_report(1000);
    let mut record = |id: usize, name: &str, start: Instant, result: querylab::Result<Outcome>| {
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed.push(id);
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        let line = format!(
            "[{verdict}] criterion {id:>2} {name}: {detail} ({:.1}s)\n",
            start.elapsed().as_secs_f64()
        );
        let _ = std::io::stdout().lock().write_all(line.as_bytes());
    };

    let t = Instant::now();
    record(1, "edge-law closed form", t, criterion_1());
    let t = Instant::now();
    let shared = |f: fn(&experiments::ExperimentReport) -> querylab::Result<Outcome>| match &density
    {
        Ok(r) => f(r),
        Err(e) => Err(querylab::Error::NumericalBreakdown(e.to_string())),
    };
    record(2, "edge-law convergence", t, shared(criterion_2));
    record(3, "tail facts", t, shared(criterion_3));
    record(4, "operator-norm event", t, shared(criterion_4));
    let t = Instant::now();
    record(5, "corner lemma", t, criterion_5());
    let t = Instant::now();
    record(6, "conditional corner posterior", t, criterion_6());
    let t = Instant::now();
    record(7, "full-budget recovery", t, criterion_7());
    let t = Instant::now();
    record(8, "half-budget failure regime", t, criterion_8());
    let t = Instant::now();
    record(9, "conditioned hard instances", t, criterion_9());
    let t = Instant::now();
    record(10, "shift-and-invert reduction", t, criterion_10());
    let t = Instant::now();
    record(11, "bootstrap contraction", t, criterion_11());
    let t = Instant::now();
    record(12, "reproducibility", t, criterion_12());

    if failed.is_empty() {
        println!("acceptance: 12/12 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
