//! Seed-replicated experiments over a grid of horizons, rate fitting and
//! result files.
//!
//! Each `(T, seed index)` cell is an independent job with stream seed
//! `derive_seed(base_seed, [T, seed_index])`, so results do not depend on
//! scheduling or thread count.

mod config;
mod rates;

pub use config::{
    ClipConfig, ExperimentConfig, OracleConfig, OracleKindConfig, ProblemConfig, RatesConfig,
    ScheduleConfig, SeedsConfig,
};
pub use rates::{fit_rate, fit_rate_points, theoretical_exponent, RateEstimate, RatePoint, Regime};

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{derive_seed, StochasticOracle, Stream};
use crate::optim::{
    known_p_schedule, run_optimizer, unknown_p_schedule_full, KnownPInputs, Method, RunSpec,
    Schedule, ScheduleKind,
};
use crate::verify::descent_residual;

/// Schedule for horizon `T` under `cfg`.
pub fn schedule_for(
    cfg: &ExperimentConfig,
    oracle: &StochasticOracle,
    horizon: u64,
) -> Result<Schedule> {
    let problem = oracle.problem();
    let meta = &oracle.meta;
    match cfg.schedule.kind {
        ScheduleKind::KnownP => known_p_schedule(&KnownPInputs {
            delta1: cfg.delta1(oracle)?,
            l0: problem.l0,
            l1: problem.l1,
            sigma0: meta.sigma0,
            sigma1: meta.sigma1,
            grad_norm_x1: crate::linalg::norm(&problem.grad(&problem.x1)),
            p: meta.p,
            horizon,
        }),
        ScheduleKind::UnknownP => {
            unknown_p_schedule_full(horizon, problem.l1, meta.sigma1, Some(meta.p))
        }
        ScheduleKind::Manual => {
            let eta = cfg.schedule.eta.expect("validated")
                * (horizon as f64).powf(cfg.schedule.eta_exponent);
            Schedule::manual(
                cfg.schedule.beta.unwrap_or(0.0),
                eta,
                cfg.schedule.batch.unwrap_or(1),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    #[serde(rename = "T")]
    pub t: u64,
    pub schedule: Option<Schedule>,
    /// Mean over non-diverged seeds of `(1/T) sum_t |grad F(x_t)|`.
    pub mean_avg_grad_norm: f64,
    pub stderr: f64,
    pub n_seeds: usize,
    pub n_diverged: usize,
    /// Worst normalized descent-inequality excess over the seeds, when checked.
    pub max_descent_residual: Option<f64>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn n_used(&self) -> usize {
        self.n_seeds - self.n_diverged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
}

impl ExperimentResults {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        for c in &self.cells {
            if let Some(e) = &c.error {
                w.push(format!("T = {}: {e}", c.t));
            }
            if c.n_diverged > 0 {
                w.push(format!(
                    "T = {}: {} of {} runs diverged and were excluded",
                    c.t, c.n_diverged, c.n_seeds
                ));
            }
        }
        w
    }

    pub fn rate_points(&self) -> Vec<RatePoint> {
        self.cells
            .iter()
            .filter(|c| c.error.is_none())
            .map(|c| RatePoint {
                t: c.t as f64,
                metric: c.mean_avg_grad_norm,
                std_err: c.stderr,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["T", "mean_avg_grad_norm", "stderr", "n_seeds", "n_diverged"])
            .map_err(io)?;
        for c in &self.cells {
            w.write_record([
                c.t.to_string(),
                c.mean_avg_grad_norm.to_string(),
                c.stderr.to_string(),
                c.n_seeds.to_string(),
                c.n_diverged.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes `results.csv` and `results.json` into `dir` (created if needed).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.to_csv()?)?;
        std::fs::write(dir.join("results.json"), self.to_json()?)?;
        Ok(())
    }
}

struct RunOutcome {
    avg_grad_norm: Option<f64>,
    descent: Option<f64>,
}

fn run_cell(
    cfg: &ExperimentConfig,
    oracle: &StochasticOracle,
    schedule: Schedule,
    horizon: u64,
    seed_index: u64,
) -> Result<RunOutcome> {
    let check = cfg.check_descent && cfg.method == Method::Nsgdm;
    let spec = RunSpec {
        method: cfg.method,
        schedule,
        horizon: horizon as usize,
        clip_tau: cfg.clip.map(|c| c.tau),
        record_steps: check,
    };
    let mut stream = Stream::new(derive_seed(cfg.base_seed, &[horizon, seed_index]));
    let trace = run_optimizer(&spec, oracle, &mut stream)?;
    if trace.diverged() {
        return Ok(RunOutcome {
            avg_grad_norm: None,
            descent: None,
        });
    }
    let descent = if check {
        Some(descent_residual(&trace, oracle.problem())?)
    } else {
        None
    };
    Ok(RunOutcome {
        avg_grad_norm: Some(trace.avg_grad_norm()),
        descent,
    })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(T, seed)` cell of the grid on the current rayon pool.
/// Per-`T` failures (e.g. an infeasible schedule) are recorded in the cell.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let base_oracle = cfg.build_oracle()?;
    let seeds = cfg.seeds.indices();

    let schedules: Vec<Result<(Schedule, StochasticOracle)>> = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let s = schedule_for(cfg, &base_oracle, t)?;
            let oracle = base_oracle.clone().with_batch(s.batch)?;
            Ok((s, oracle))
        })
        .collect();

    let jobs: Vec<(usize, u64)> = (0..cfg.t_grid.len())
        .filter(|&i| schedules[i].is_ok())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let outcomes: Vec<Result<RunOutcome>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let (schedule, oracle) = schedules[i].as_ref().expect("filtered");
            run_cell(cfg, oracle, *schedule, cfg.t_grid[i], s)
        })
        .collect();

    let mut cells = Vec::with_capacity(cfg.t_grid.len());
    let mut it = outcomes.into_iter();
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        let schedule = match &schedules[i] {
            Ok((s, _)) => *s,
            Err(e) => {
                log::warn!("T = {t}: {e}");
                cells.push(CellResult {
                    t,
                    schedule: None,
                    mean_avg_grad_norm: f64::NAN,
                    stderr: f64::NAN,
                    n_seeds: seeds.len(),
                    n_diverged: 0,
                    max_descent_residual: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let mut values = Vec::with_capacity(seeds.len());
        let mut diverged = 0;
        let mut descent: Option<f64> = None;
        let mut error = None;
        for out in it.by_ref().take(seeds.len()) {
            match out {
                Ok(RunOutcome {
                    avg_grad_norm: Some(v),
                    descent: d,
                }) => {
                    values.push(v);
                    if let Some(d) = d {
                        descent = Some(descent.map_or(d, |x| x.max(d)));
                    }
                }
                Ok(_) => diverged += 1,
                Err(e) => {
                    error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        if diverged > 0 {
            log::warn!("T = {t}: {diverged} diverged runs excluded");
        }
        let (mean, se) = mean_and_stderr(&values);
        cells.push(CellResult {
            t,
            schedule: Some(schedule),
            mean_avg_grad_norm: mean,
            stderr: se,
            n_seeds: seeds.len(),
            n_diverged: diverged,
            max_descent_residual: descent,
            error,
        });
    }
    Ok(ExperimentResults {
        config: cfg.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateComparison {
    pub fit: RateEstimate,
    pub theoretical: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Theoretical exponent implied by the configuration, if any.
pub fn configured_exponent(cfg: &ExperimentConfig) -> Result<Option<f64>> {
    if let Some(e) = cfg.rates.and_then(|r| r.exponent) {
        return Ok(Some(e));
    }
    let p = cfg.tail_index();
    match cfg.schedule.kind {
        ScheduleKind::KnownP => theoretical_exponent(Regime::KnownP, p).map(Some),
        ScheduleKind::UnknownP => theoretical_exponent(Regime::UnknownP, p).map(Some),
        ScheduleKind::Manual => Ok(None),
    }
}

/// Fits the rate and compares it with `theoretical` (tolerance defaults to 0.1).
pub fn compare_rate(
    points: &[RatePoint],
    theoretical: f64,
    tolerance: f64,
) -> Result<RateComparison> {
    let fit = fit_rate_points(points)?;
    let abs_diff = (fit.slope - theoretical).abs();
    Ok(RateComparison {
        fit,
        theoretical,
        abs_diff,
        tolerance,
        within_tolerance: abs_diff <= tolerance,
    })
}

pub const DEFAULT_RATE_TOLERANCE: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
method = "nsgdm"
T_grid = [32, 64, 128]
seeds = 3
base_seed = 11
{extra}
[problem]
name = "quadratic"
dim = 4

[oracle]
kind = "symmetric-pareto"
shape = 1.7
p = 1.5

[schedule]
kind = "known_p"
"#
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = cfg("");
        let a = run_experiment(&c).unwrap().to_csv().unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_experiment(&c).unwrap().to_csv().unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("T,mean_avg_grad_norm,stderr,n_seeds,n_diverged\n"));
        assert_eq!(a.lines().count(), 4);
    }

    #[test]
    fn descent_checked_when_requested() {
        let r = run_experiment(&cfg("check_descent = true")).unwrap();
        for c in &r.cells {
            assert!(c.max_descent_residual.unwrap() <= 1e-9);
            assert_eq!(c.n_used() + c.n_diverged, c.n_seeds);
        }
    }

    #[test]
    fn noiseless_known_p_decreases() {
        let mut c = cfg("");
        c.oracle.scale = 0.0;
        c.t_grid = vec![16, 64, 256, 1024];
        let r = run_experiment(&c).unwrap();
        let m: Vec<f64> = r.cells.iter().map(|c| c.mean_avg_grad_norm).collect();
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
        assert!(r.cells.iter().all(|c| c.stderr == 0.0));
    }

    #[test]
    fn infeasible_instance_is_rejected() {
        let text = r#"
method = "nsgdm"
T_grid = [16, 32, 64]
seeds = 2
[problem]
name = "hard_instance"
p = 1.5
delta1 = 7.3
l0 = 1.0
sigma0 = 0.1
epsilon = 0.01
[oracle]
kind = "zero-chain"
[schedule]
kind = "unknown_p"
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn exponent_from_schedule_kind() {
        let c = cfg("");
        assert!((configured_exponent(&c).unwrap().unwrap() + 0.2).abs() < 1e-15);
        let cmp = compare_rate(
            &[32.0, 64.0, 128.0].map(|t: f64| RatePoint {
                t,
                metric: t.powf(-0.2),
                std_err: 0.0,
            }),
            -0.2,
            DEFAULT_RATE_TOLERANCE,
        )
        .unwrap();
        assert!(cmp.within_tolerance && cmp.abs_diff < 1e-12);
    }
}
