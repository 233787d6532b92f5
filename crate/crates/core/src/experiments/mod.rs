//! Seeded experiment runners behind the `querylab` command line.
//!
//! Trial `i` of an experiment draws from `hash64(seed, tag, i)` where `tag`
//! is the experiment name, so any row can be regenerated on its own. Trials
//! run on the rayon pool and are collected in index order before anything is
//! written.

mod calibrate;
mod decoupling;
mod density;
mod output;
mod posterior;
mod reduction;
mod tradeoff;

pub use calibrate::MIN_EVENT_FREQUENCY;
pub use density::QUADRATURE_TOLERANCE;
pub use output::{render, render_csv, render_json};
pub use reduction::ReductionPlan;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{MatVecOracle, QueryOracle};
use crate::rng::TrialRng;
use crate::solvers::{lanczos, power_method};
use crate::spectral::SymmetricMatrix;
use crate::wishart::{lambda_min_estimator_from_eig, Calibration};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::config(
                        stringify!($name),
                        format!("unknown value '{other}'"),
                    )),
                }
            }
        }
    };
}

string_enum!(ExperimentKind {
    Tradeoff => "tradeoff",
    Posterior => "posterior",
    Reduction => "reduction",
    Decoupling => "decoupling",
    Density => "density",
    Calibrate => "calibrate",
});

string_enum!(SolverKind {
    Lanczos => "lanczos",
    Power => "power",
    ShiftInvert => "shift_invert",
    Cg => "cg",
});

string_enum!(Format {
    Csv => "csv",
    Json => "json",
});

/// Everything that determines an experiment's output. Echoed into every
/// output file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    /// Size of the Wishart block inside a hard instance.
    pub s: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverKind,
    /// Query budgets `T`. Empty means the experiment's default.
    pub grid: Vec<usize>,
    pub format: Format,
    /// Failure probability used for calibrating the good event.
    pub delta: f64,
    pub pilot_n: usize,
    /// Reduction success threshold `(1 - c gap(M)) lambda_1(M)`.
    pub c: f64,
    /// Boosting restarts `L` in the reduction.
    pub restarts: usize,
    /// `C` in `R = ceil(C ln(1/eps) / gap_alpha)`.
    pub round_constant: f64,
    /// Multiplier of the reduction's query budget curve.
    pub budget_constant: f64,
    /// Relative slack of the decoupling inequality.
    pub slack: f64,
    /// KS threshold (posterior, density).
    pub threshold: f64,
}

impl ExperimentConfig {
    /// Defaults for `experiment`: `d = 64`, `s = d`, `beta = 0.5`, 100 trials.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            d: 64,
            s: 64,
            beta: 0.5,
            trials: 100,
            seed: 0,
            solver: match experiment {
                ExperimentKind::Reduction => SolverKind::ShiftInvert,
                _ => SolverKind::Lanczos,
            },
            grid: Vec::new(),
            format: Format::Csv,
            delta: 0.3,
            pilot_n: 2000,
            c: 1.0,
            restarts: 1,
            round_constant: crate::solvers::DEFAULT_ROUND_CONSTANT,
            budget_constant: 1.0,
            slack: 0.25,
            threshold: match experiment {
                ExperimentKind::Density => 0.06,
                _ => 0.10,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("d", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.s == 0 || self.s > self.d {
            return Err(Error::config("s", "must satisfy 1 <= s <= d"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("beta", "must lie in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if self.pilot_n == 0 {
            return Err(Error::config("pilot_n", "must be positive"));
        }
        if !(self.c > 0.0) {
            return Err(Error::config("c", "must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts", "must be at least 1"));
        }
        if !(self.round_constant > 0.0) {
            return Err(Error::config("round_constant", "must be positive"));
        }
        if !(self.budget_constant > 0.0) {
            return Err(Error::config("budget_constant", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.slack) {
            return Err(Error::config("slack", "must lie in [0, 1)"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::config("threshold", "must lie in (0, 1]"));
        }
        if let Some(&t) = self.grid.iter().find(|&&t| t > self.d) {
            return Err(Error::config(
                "grid",
                format!("T = {t} exceeds d = {}", self.d),
            ));
        }
        Ok(())
    }

    /// `{d/8, d/4, d/2, 3d/4, (1-beta)d, d}` without repeats.
    pub fn default_grid(&self) -> Vec<usize> {
        let d = self.d;
        let raw = [
            d / 8,
            d / 4,
            d / 2,
            3 * d / 4,
            ((1.0 - self.beta) * d as f64).floor() as usize,
            d,
        ];
        let mut grid = Vec::new();
        for t in raw {
            if !grid.contains(&t) {
                grid.push(t);
            }
        }
        grid
    }

    /// The configured grid, or the default one when none was given.
    pub fn resolved_grid(&self) -> Vec<usize> {
        if self.grid.is_empty() {
            self.default_grid()
        } else {
            self.grid.clone()
        }
    }
}

/// One output value.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Real(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::UInt(v as u64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// A fixed-schema table. Every row starts with `schema_version`, `seed`
/// and `trial` (the latter empty for rows that are not trials).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        let mut all = vec!["schema_version", "seed", "trial"];
        all.extend_from_slice(columns);
        Self {
            columns: all,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, seed: u64, trial: Option<usize>, cells: Vec<Cell>) {
        let mut row = vec![
            Cell::from(SCHEMA_VERSION),
            Cell::from(seed),
            Cell::from(trial),
        ];
        row.extend(cells);
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match schema"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Output of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub calibration: Option<Calibration>,
    /// Ordered key/value summary.
    pub summary: Vec<(String, Cell)>,
    pub table: Table,
    /// Whether the experiment's acceptance check held.
    pub pass: bool,
}

impl ExperimentReport {
    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn summary_real(&self, key: &str) -> Option<f64> {
        match self.summary_value(key)? {
            Cell::Real(v) => Some(*v),
            Cell::UInt(v) => Some(*v as f64),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// Validates `cfg` and runs the experiment it names.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Tradeoff => tradeoff::run_tradeoff(cfg),
        ExperimentKind::Posterior => posterior::run_posterior_experiment(cfg),
        ExperimentKind::Reduction => reduction::run_reduction(cfg),
        ExperimentKind::Decoupling => decoupling::run_decoupling(cfg),
        ExperimentKind::Density => density::run_density(cfg),
        ExperimentKind::Calibrate => calibrate::run_calibrate(cfg),
    }
}

/// Estimate of `lambda_min(W)` from `t` queries.
pub(crate) struct MinEstimate {
    pub lambda_hat_min: f64,
    pub queries_used: usize,
    /// Queries made, in order, as products with `W` would see them.
    pub queries: Vec<Vec<f64>>,
}

/// Runs `solver` with a budget of `t` products. Lanczos works on `W`
/// directly; the power method works on `I - W/5` and goes through the
/// induced estimator `5 (1 - lambda_hat)`. With `t = 0` the estimate is the
/// constant 0.
pub(crate) fn estimate_lambda_min(
    solver: SolverKind,
    w: &SymmetricMatrix,
    t: usize,
    rng: &mut TrialRng,
) -> Result<MinEstimate> {
    if t == 0 {
        return Ok(MinEstimate {
            lambda_hat_min: 0.0,
            queries_used: 0,
            queries: Vec::new(),
        });
    }
    match solver {
        SolverKind::Lanczos => {
            let mut o = QueryOracle::new(w.clone(), Some(t), true)?;
            let out = lanczos(&mut o, t, rng)?;
            Ok(MinEstimate {
                lambda_hat_min: out.lambda_hat_min.expect("Lanczos reports both ends"),
                queries_used: out.queries_used,
                queries: o.ledger().queries(),
            })
        }
        SolverKind::Power => {
            let m = w.scaled(0.2).shifted_negation(1.0);
            let mut o = QueryOracle::new(m, Some(t), true)?;
            let lambda_hat = if t == 1 {
                let u = rng.unit_sphere(o.dim());
                let mu = o.query(&u)?;
                crate::dense::dot(&u, &mu)
            } else {
                power_method(&mut o, t - 1, rng)?
                    .lambda_hat
                    .expect("power method reports lambda")
            };
            Ok(MinEstimate {
                lambda_hat_min: lambda_min_estimator_from_eig(lambda_hat),
                queries_used: o.query_count(),
                queries: o.ledger().queries(),
            })
        }
        SolverKind::ShiftInvert | SolverKind::Cg => Err(Error::config(
            "solver",
            format!(
                "'{solver}' cannot run under a fixed budget of T products for lambda_min; \
                 use lanczos or power (shift_invert is exercised by the reduction experiment)"
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enums_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), *k);
        }
        for s in SolverKind::ALL {
            assert_eq!(s.as_str().parse::<SolverKind>().unwrap(), *s);
        }
        assert!("nope".parse::<Format>().is_err());
    }

    #[test]
    fn default_grid_matches_formula() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Tradeoff);
        cfg.d = 64;
        cfg.beta = 0.1;
        assert_eq!(cfg.default_grid(), vec![8, 16, 32, 48, 57, 64]);
        cfg.beta = 0.5;
        assert_eq!(cfg.default_grid(), vec![8, 16, 32, 48, 64]);
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Tradeoff);
        cfg.trials = 0;
        match cfg.validate() {
            Err(Error::ConfigError { field, .. }) => assert_eq!(field, "trials"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ExperimentConfig::new(ExperimentKind::Tradeoff);
        cfg.s = cfg.d + 1;
        assert!(matches!(cfg.validate(), Err(Error::ConfigError { .. })));
    }

    #[test]
    fn power_estimator_uses_budget_exactly() {
        let mut rng = TrialRng::from_seed(1);
        let w = crate::wishart::sample_wishart(8, &mut rng).unwrap().w;
        for t in 1..=8 {
            let est = estimate_lambda_min(SolverKind::Power, &w, t, &mut rng.clone()).unwrap();
            assert_eq!(est.queries_used, t);
            assert_eq!(est.queries.len(), t);
        }
        assert!(estimate_lambda_min(SolverKind::Cg, &w, 3, &mut rng).is_err());
    }
}
