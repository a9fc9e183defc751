use serde::Serialize;

use super::{Method, OptimizerState, Schedule};
use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::{StochasticOracle, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub method: Method,
    pub schedule: Schedule,
    pub horizon: usize,
    /// Clipping magnitude for `clipped-sgd`; ignored otherwise.
    pub clip_tau: Option<f64>,
    /// Keep `x_t`, `g_t`, `m_t` for every step (needed by the lemma checks).
    pub record_steps: bool,
}

/// Full per-iteration record `(x_t, g_t, m_t, beta_t, eta_t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub m: Vec<f64>,
    pub beta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerTrace {
    pub method: Method,
    pub horizon: usize,
    /// `|grad F(x_t)|` for `t = 1..=T` (shorter if the run diverged).
    pub grad_norms: Vec<f64>,
    /// Iteration at which a non-finite iterate or gradient appeared.
    pub diverged_at: Option<usize>,
    /// `x_{T+1}`.
    pub final_x: Vec<f64>,
    pub steps: Option<Vec<StepRecord>>,
}

impl OptimizerTrace {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// `(1/T) sum_t |grad F(x_t)|`.
    pub fn avg_grad_norm(&self) -> f64 {
        if self.grad_norms.is_empty() {
            return f64::NAN;
        }
        self.grad_norms.iter().sum::<f64>() / self.grad_norms.len() as f64
    }

    /// `x_1, ..., x_{T+1}` when steps were recorded.
    pub fn iterates(&self) -> Option<Vec<&[f64]>> {
        let steps = self.steps.as_ref()?;
        let mut xs: Vec<&[f64]> = steps.iter().map(|s| s.x.as_slice()).collect();
        xs.push(&self.final_x);
        Some(xs)
    }
}

/// Runs `spec.horizon` iterations from the problem's `x1`, drawing
/// `schedule.batch` estimates per iteration.
pub fn run_optimizer(
    spec: &RunSpec,
    oracle: &StochasticOracle,
    stream: &mut Stream,
) -> Result<OptimizerTrace> {
    let problem = oracle.problem();
    spec.schedule.validate(0.0)?;
    if spec.horizon == 0 {
        return Err(Error::param("T", "must be >= 1"));
    }
    if oracle.meta.batch < spec.schedule.batch {
        return Err(Error::param(
            "batch",
            format!(
                "oracle batch {} is smaller than the schedule batch {}",
                oracle.meta.batch, spec.schedule.batch
            ),
        ));
    }
    let tau = match spec.method {
        Method::ClippedSgd => {
            let tau = spec
                .clip_tau
                .ok_or_else(|| Error::param("clip.tau", "required for clipped-sgd"))?;
            if !(tau > 0.0) {
                return Err(Error::param("clip.tau", "must be positive"));
            }
            tau
        }
        _ => f64::INFINITY,
    };
    let Schedule {
        beta, eta, batch, ..
    } = spec.schedule;
    let eta_coords = vec![eta; problem.dim()];

    let mut state = OptimizerState::new(problem.x1.clone());
    let mut grad_norms = Vec::with_capacity(spec.horizon);
    let mut steps = spec.record_steps.then(|| Vec::with_capacity(spec.horizon));
    let mut diverged_at = None;
    let mut draws = Vec::with_capacity(batch);

    for t in 1..=spec.horizon {
        let grad = problem.grad(&state.x);
        let gn = linalg::norm(&grad);
        if !gn.is_finite() || !linalg::is_finite(&state.x) {
            diverged_at = Some(t);
            break;
        }
        grad_norms.push(gn);
        draws.clear();
        draws.extend((0..batch).map(|_| oracle.sample(&state.x, stream)));
        let x_t = steps.as_ref().map(|_| state.x.clone());
        let out = match spec.method {
            Method::Nsgdm => state.nsgdm_step(&draws, beta, eta)?,
            Method::Ssgdm => state.ssgdm_step(&draws, beta, &eta_coords)?,
            Method::ClippedSgd | Method::Sgd => state.clipped_sgd_step(&draws, eta, tau)?,
        };
        if let (Some(steps), Some(x)) = (steps.as_mut(), x_t) {
            steps.push(StepRecord {
                x,
                g: out.g,
                m: out.direction,
                beta,
                eta,
            });
        }
    }
    if diverged_at.is_none() && !linalg::is_finite(&state.x) {
        diverged_at = Some(spec.horizon + 1);
    }
    if let Some(t) = diverged_at {
        log::debug!("{:?} run diverged at iteration {t}", spec.method);
    }
    Ok(OptimizerTrace {
        method: spec.method,
        horizon: spec.horizon,
        grad_norms,
        diverged_at,
        final_x: state.x,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{make_additive_oracle, NoiseKind, NoiseSpec};
    use crate::problems::make_quadratic;

    fn oracle(scale: f64) -> StochasticOracle {
        let p = make_quadratic(2, &[1.0, 0.5], &[1.0, 1.0]).unwrap();
        let n = NoiseSpec::new(NoiseKind::SymmetricPareto, 1.7, scale).unwrap();
        make_additive_oracle(p, n, 1.5, 1).unwrap()
    }

    fn spec(method: Method, beta: f64, eta: f64, horizon: usize) -> RunSpec {
        RunSpec {
            method,
            schedule: Schedule::manual(beta, eta, 1).unwrap(),
            horizon,
            clip_tau: Some(1.0),
            record_steps: true,
        }
    }

    #[test]
    fn noiseless_nsgdm_settles_near_minimizer() {
        let o = oracle(0.0);
        let tr = run_optimizer(
            &spec(Method::Nsgdm, 0.0, 0.01, 400),
            &o,
            &mut Stream::new(0),
        )
        .unwrap();
        let tail = &tr.grad_norms[300..];
        assert!(tail.iter().all(|g| *g <= 0.02), "{tail:?}");
    }

    #[test]
    fn step_lengths_are_exactly_eta() {
        let o = oracle(1.0);
        let tr = run_optimizer(
            &spec(Method::Nsgdm, 0.9, 0.05, 200),
            &o,
            &mut Stream::new(1),
        )
        .unwrap();
        let xs = tr.iterates().unwrap();
        for w in xs.windows(2) {
            let len = linalg::dist(w[0], w[1]);
            assert!((len - 0.05).abs() <= 1e-12 * 0.05 || len == 0.0, "{len}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let o = oracle(1.0);
        let s = spec(Method::Nsgdm, 0.5, 0.05, 50);
        let a = run_optimizer(&s, &o, &mut Stream::new(9)).unwrap();
        let b = run_optimizer(&s, &o, &mut Stream::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clipped_needs_tau_and_batch_is_checked() {
        let o = oracle(1.0);
        let mut s = spec(Method::ClippedSgd, 0.0, 0.05, 5);
        s.clip_tau = None;
        assert!(run_optimizer(&s, &o, &mut Stream::new(0)).is_err());
        let mut s = spec(Method::Nsgdm, 0.0, 0.05, 5);
        s.schedule.batch = 3;
        assert!(run_optimizer(&s, &o, &mut Stream::new(0)).is_err());
        let o3 = o.with_batch(3).unwrap();
        assert!(run_optimizer(&s, &o3, &mut Stream::new(0)).is_ok());
    }

    #[test]
    fn sgd_overflow_is_recorded() {
        let p = make_quadratic(1, &[1.0], &[0.0]).unwrap();
        let n = NoiseSpec::new(NoiseKind::Gaussian, 0.0, 1.0).unwrap();
        let o = make_additive_oracle(p, n, 2.0, 1).unwrap();
        // eta * L0 = 3 makes the iteration expand by a factor 2 per step
        let tr =
            run_optimizer(&spec(Method::Sgd, 0.0, 3.0, 5000), &o, &mut Stream::new(2)).unwrap();
        assert!(tr.diverged());
        assert!(tr.grad_norms.len() < 5000);
    }
}
