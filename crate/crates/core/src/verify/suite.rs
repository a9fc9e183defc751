use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{
    core_lemma_ratio, decomposition_residual, descent_residual, olo_causality_check, olo_check,
    CoreLemmaEstimate, MdsSampler,
};
use crate::error::Result;
use crate::linalg;
use crate::noise::{
    empirical_moment, make_additive_oracle, make_regression_oracle, make_zero_chain_oracle,
    zero_chain_estimate, NoiseKind, NoiseSpec, Stream,
};
use crate::optim::{
    known_p_schedule, run_optimizer, unknown_p_schedule, KnownPInputs, Method, RunSpec, Schedule,
};
use crate::problems::{
    chain_grad, chain_value, make_hard_instance, make_quadratic, prog_alpha, HardInstanceParams,
    Problem, CHAIN_GRAD_BOUND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Reduced sample sizes for smoke runs.
    pub quick: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            quick: false,
        }
    }
}

impl SuiteOptions {
    fn size(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed statistic (worst residual, ratio, ...).
    pub value: f64,
    /// Threshold the statistic is compared against.
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub quick: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:<6}  {:>12}  {:>12}  detail",
            "check", "status", "value", "threshold"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<width$}  {:<6}  {:>12.4e}  {:>12.4e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.value,
                c.threshold,
                c.detail
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "{} checks, {} failed", self.checks.len(), failed);
        s
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, f64, f64, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, value, threshold, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, f64::NAN, f64::NAN, format!("error: {e}")),
    };
    CheckResult {
        name: name.to_string(),
        passed,
        value,
        threshold,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Quadratic test bed: `dim` eigenvalues evenly spaced in `[0.1, 1]`,
/// minimizer at the origin, start at the all-ones vector.
pub fn reference_quadratic(dim: usize) -> Problem {
    let eig: Vec<f64> = if dim == 1 {
        vec![1.0]
    } else {
        (0..dim)
            .map(|i| 0.1 + 0.9 * i as f64 / (dim - 1) as f64)
            .collect()
    };
    make_quadratic(dim, &eig, &vec![0.0; dim])
        .and_then(|p| p.with_x1(vec![1.0; dim]))
        .expect("valid quadratic")
}

/// Hard instance with `d = 10`, `q ~= 0.1` at `p = 1.5`.
pub fn reference_hard_instance() -> HardInstanceParams {
    HardInstanceParams::new(1.5, 7.3, 1.0, 2.0, 0.01).expect("valid parameters")
}

fn random_sequence(stream: &mut Stream, len: usize, dim: usize, heavy: bool) -> Vec<Vec<f64>> {
    let pareto = NoiseSpec::new(NoiseKind::SymmetricPareto, 1.6, 1.0).expect("valid");
    let gauss = NoiseSpec::new(NoiseKind::Gaussian, 0.0, 1.0).expect("valid");
    let lead = stream.random_range(0..4usize);
    (0..len)
        .map(|t| {
            if t < lead {
                vec![0.0; dim]
            } else if heavy {
                pareto.sample(dim, stream)
            } else {
                gauss.sample(dim, stream)
            }
        })
        .collect()
}

fn check_olo(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let mut stream = Stream::derived(opts.seed, &[1]);
    let n = opts.size(1000, 60);
    let mut worst = f64::NEG_INFINITY;
    let mut bad_weights = 0;
    for i in 0..n {
        let dim = [1, 3, 16][i % 3];
        let v = random_sequence(&mut stream, 256, dim, i % 2 == 0);
        let tr = olo_check(&v)?;
        worst = worst.max(tr.max_violation());
        let norms_ok = tr.weights.iter().all(|w| linalg::norm(w) <= 1.0 + 1e-12);
        let gammas_ok = tr.stepsizes.windows(2).all(|g| g[1] <= g[0]);
        if !(norms_ok && gammas_ok) {
            bad_weights += 1;
        }
    }
    let tol = 1e-9;
    Ok((
        worst <= tol && bad_weights == 0,
        worst,
        tol,
        format!("{n} sequences, T = 256; {bad_weights} with |w| > 1 or increasing gamma"),
    ))
}

fn check_causality(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let mut stream = Stream::derived(opts.seed, &[2]);
    let n = opts.size(50, 10);
    let mut failures = 0;
    for i in 0..n {
        let v = random_sequence(&mut stream, 64, 1 + i % 4, i % 2 == 1);
        for t in [1, 2, 17, 64] {
            if !olo_causality_check(&v, t)? {
                failures += 1;
            }
        }
    }
    Ok((
        failures == 0,
        failures as f64,
        0.0,
        format!("{n} sequences, w_t unchanged under tail replacement"),
    ))
}

/// NSGDM runs on the reference quadratic with recorded steps.
fn recorded_runs(opts: &SuiteOptions) -> Result<Vec<(crate::OptimizerTrace, Problem)>> {
    let horizon = 100;
    let problem = reference_quadratic(10);
    let noise = NoiseSpec::new(NoiseKind::SymmetricPareto, 1.7, 1.0)?;
    let oracle = make_additive_oracle(problem.clone(), noise, 1.5, 1)?;
    let betas = [0.0, 0.5, 0.9, 1.0 - 1.0 / (horizon as f64).sqrt()];
    let n = opts.size(50, 8);
    (0..n)
        .map(|i| {
            let spec = RunSpec {
                method: Method::Nsgdm,
                schedule: Schedule::manual(betas[i % betas.len()], 0.05, 1)?,
                horizon,
                clip_tau: None,
                record_steps: true,
            };
            let mut stream = Stream::derived(opts.seed, &[3, i as u64]);
            Ok((run_optimizer(&spec, &oracle, &mut stream)?, problem.clone()))
        })
        .collect()
}

fn check_decomposition(
    runs: &[(crate::OptimizerTrace, Problem)],
) -> Result<(bool, f64, f64, String)> {
    let mut worst = 0.0f64;
    for (tr, p) in runs {
        worst = worst.max(decomposition_residual(tr, p)?);
    }
    let tol = 1e-8;
    Ok((
        worst <= tol,
        worst,
        tol,
        format!(
            "{} runs, T = 100, beta in {{0, 0.5, 0.9, 1 - T^(-1/2)}}",
            runs.len()
        ),
    ))
}

fn check_descent(
    runs: &[(crate::OptimizerTrace, Problem)],
    opts: &SuiteOptions,
) -> Result<(bool, f64, f64, String)> {
    let mut worst = 0.0f64;
    for (tr, p) in runs {
        worst = worst.max(descent_residual(tr, p)?);
    }
    // also on the hard instance with its zero-chain oracle
    let hp = reference_hard_instance();
    let oracle = make_zero_chain_oracle(&hp)?;
    let problem = make_hard_instance(&hp)?;
    let n = opts.size(10, 2);
    for i in 0..n {
        let spec = RunSpec {
            method: Method::Nsgdm,
            schedule: Schedule::manual(0.9, 0.02, 1)?,
            horizon: 500,
            clip_tau: None,
            record_steps: true,
        };
        let tr = run_optimizer(
            &spec,
            &oracle,
            &mut Stream::derived(opts.seed, &[4, i as u64]),
        )?;
        worst = worst.max(descent_residual(&tr, &problem)?);
    }
    let tol = 1e-9;
    Ok((
        worst <= tol,
        worst,
        tol,
        format!("{} quadratic runs + {n} hard-instance runs", runs.len()),
    ))
}

fn check_martingale(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let trials = opts.size(10_000, 1_000);
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut k = 0u64;
    for p in [1.2, 1.5, 2.0] {
        let samplers = [
            MdsSampler::Iid {
                noise: NoiseSpec::new(NoiseKind::SymmetricPareto, 1.6, 1.0)?,
                dim: 3,
            },
            MdsSampler::Iid {
                noise: NoiseSpec::new(NoiseKind::Gaussian, 0.0, 1.0)?,
                dim: 3,
            },
            MdsSampler::StateScaled {
                noise: NoiseSpec::new(NoiseKind::SymmetricPareto, 1.6, 1.0)?,
                dim: 3,
                low: 0.1,
                high: 4.0,
            },
        ];
        for s in &samplers {
            k += 1;
            let e = core_lemma_ratio(s, 64, trials, p, &mut Stream::derived(opts.seed, &[5, k]))?;
            worst_ratio = worst_ratio.max(e.ratio);
            worst_margin = worst_margin.max(e.ratio - 3.0 * e.std_err);
        }
    }
    Ok((
        worst_margin <= CoreLemmaEstimate::BOUND,
        worst_ratio,
        CoreLemmaEstimate::BOUND,
        format!("p in {{1.2, 1.5, 2}}, T = 64, {trials} trials, iid + state-scaled"),
    ))
}

fn check_schedules() -> Result<(bool, f64, f64, String)> {
    let s = known_p_schedule(&KnownPInputs {
        delta1: 1.0,
        l0: 1.0,
        l1: 0.0,
        sigma0: 1.0,
        sigma1: 0.0,
        grad_norm_x1: 0.0,
        p: 2.0,
        horizon: 100,
    })?;
    let err_known = (s.beta - 0.9)
        .abs()
        .max((s.eta - 0.1f64 / 10f64.sqrt()).abs());
    let u = unknown_p_schedule(16, 0.0)?;
    let exact_unknown = u.beta == 0.75 && u.eta == 0.125 && u.batch == 1;
    let b = crate::optim::batch_for_sigma1(1.0, 2.0);
    let ok = err_known <= 1e-12 && s.batch == 1 && exact_unknown && b == 512;
    Ok((
        ok,
        err_known,
        1e-12,
        format!(
            "known-p beta = {}, eta = {}; unknown-p exact = {exact_unknown}; B(sigma1 = 1) = {b}",
            s.beta, s.eta
        ),
    ))
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Gaussian point in `R^d` whose coordinates past a random index are zero.
fn chain_point(stream: &mut Stream, d: usize) -> Vec<f64> {
    let keep = stream.random_range(0..=d);
    let scale = [0.3, 1.0, 2.0][stream.random_range(0..3usize)];
    (0..d)
        .map(|i| {
            if i < keep {
                scale * stream.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect()
}

fn check_chain(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let d = 10;
    let n = opts.size(10_000, 500);
    let mut stream = Stream::derived(opts.seed, &[6]);
    let (mut max_inf, mut fd_err) = (0.0f64, 0.0f64);
    let (mut prog_viol, mut small_grad) = (0, 0);
    for _ in 0..n {
        let x = chain_point(&mut stream, d);
        let g = chain_grad(&x, d)?;
        max_inf = max_inf.max(linalg::norm_inf(&g));
        if prog_alpha(&g, 0.0) > prog_alpha(&x, 0.5) + 1 {
            prog_viol += 1;
        }
        if prog_alpha(&x, 1.0) < d && linalg::norm(&g) <= 1.0 {
            small_grad += 1;
        }
        let fd = central_difference(|y| chain_value(y, d).expect("dim"), &x, 1e-6);
        fd_err = fd_err.max(linalg::dist(&fd, &g) / linalg::norm(&g).max(1.0));
    }
    let ok = max_inf <= CHAIN_GRAD_BOUND && prog_viol == 0 && small_grad == 0 && fd_err <= 1e-5;
    Ok((
        ok,
        fd_err,
        1e-5,
        format!(
            "{n} points, d = {d}: max |grad|_inf = {max_inf:.3}, prog violations = {prog_viol}, small gradients = {small_grad}"
        ),
    ))
}

fn check_zero_chain(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let hp = reference_hard_instance();
    let problem = make_hard_instance(&hp)?;
    let mut stream = Stream::derived(opts.seed, &[7]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = chain_point(&mut stream, hp.d)
            .into_iter()
            .map(|v| v * hp.lambda)
            .collect();
        let on = zero_chain_estimate(&hp, &x, true);
        let off = zero_chain_estimate(&hp, &x, false);
        let mean: Vec<f64> = on
            .iter()
            .zip(&off)
            .map(|(a, b)| hp.q * a + (1.0 - hp.q) * b)
            .collect();
        let g = problem.grad(&x);
        worst = worst.max(linalg::dist(&mean, &g) / linalg::norm(&g).max(1e-300));
    }
    let tol = 1e-12;
    Ok((
        worst <= tol,
        worst,
        tol,
        format!("100 points, q = {:.4}", hp.q),
    ))
}

fn check_moments(opts: &SuiteOptions) -> Result<(bool, f64, f64, String)> {
    let draws = opts.size(100_000, 10_000);
    let quad = reference_quadratic(10);
    let additive = make_additive_oracle(
        quad.clone(),
        NoiseSpec::new(NoiseKind::SymmetricPareto, 1.7, 1.0)?,
        1.5,
        1,
    )?;
    let hp = reference_hard_instance();
    let chain = make_zero_chain_oracle(&hp)?;
    let regression = make_regression_oracle(0.5, 1.0, 1.0, 2.0, NoiseKind::Gaussian, 0.0)?;
    let cases: Vec<(&str, &crate::StochasticOracle, Vec<f64>)> = vec![
        ("additive", &additive, quad.x1.clone()),
        ("zero-chain", &chain, vec![0.0; hp.d]),
        ("zero-chain", &chain, {
            let mut x = vec![0.0; hp.d];
            x[..4].iter_mut().for_each(|v| *v = hp.lambda);
            x
        }),
        ("regression", &regression, vec![0.0]),
        ("regression", &regression, vec![3.0]),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, (name, oracle, x)) in cases.iter().enumerate() {
        let m = &oracle.meta;
        let est = empirical_moment(
            oracle,
            x,
            m.p,
            draws,
            &mut Stream::derived(opts.seed, &[8, i as u64]),
        )?;
        let bound = m.moment_bound(linalg::norm(&oracle.true_grad(x)));
        worst = worst.max(est.mean / bound);
        parts.push(format!("{name} {:.3}/{:.3}", est.mean, bound));
    }
    Ok((worst <= 1.05, worst, 1.05, parts.join(", ")))
}

/// Runs every lemma check and collects the results.
pub fn run_suite(opts: &SuiteOptions) -> VerifyReport {
    let mut checks = vec![
        timed("olo_inequality", || check_olo(opts)),
        timed("olo_causality", || check_causality(opts)),
    ];
    match recorded_runs(opts) {
        Ok(runs) => {
            checks.push(timed("decomposition_identity", || {
                check_decomposition(&runs)
            }));
            checks.push(timed("descent_inequality", || check_descent(&runs, opts)));
        }
        Err(e) => {
            for name in ["decomposition_identity", "descent_inequality"] {
                let e = e.clone();
                checks.push(timed(name, move || Err(e)));
            }
        }
    }
    checks.push(timed("martingale_bound", || check_martingale(opts)));
    checks.push(timed("schedule_values", check_schedules));
    checks.push(timed("chain_properties", || check_chain(opts)));
    checks.push(timed("zero_chain_unbiased", || check_zero_chain(opts)));
    checks.push(timed("moment_contracts", || check_moments(opts)));
    VerifyReport {
        seed: opts.seed,
        quick: opts.quick,
        checks,
    }
}
