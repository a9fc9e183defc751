//! Optimizer steppers and the trajectory runner.
//!
//! Batched NSGDM keeps a momentum `m_t = beta m_{t-1} + (1 - beta) g_t`, with
//! `m_0 = g_1`, and moves a fixed distance `eta` along `-m_t / |m_t|`
//! (no move when `m_t = 0`). The sign variant normalizes per coordinate.
//! Clipped SGD and plain SGD are the clipping baselines.

mod runner;
mod schedule;

pub use runner::{run_optimizer, OptimizerTrace, RunSpec, StepRecord};
pub use schedule::{
    batch_for_sigma1, known_p_schedule, sigma1_threshold, unknown_p_schedule,
    unknown_p_schedule_full, KnownPInputs, Schedule, ScheduleKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Nsgdm,
    Ssgdm,
    #[serde(alias = "clipped_sgd")]
    ClippedSgd,
    Sgd,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nsgdm" => Ok(Self::Nsgdm),
            "ssgdm" => Ok(Self::Ssgdm),
            "clipped-sgd" | "clipped_sgd" => Ok(Self::ClippedSgd),
            "sgd" => Ok(Self::Sgd),
            other => Err(Error::param("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Iterate, momentum and iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Number of completed steps; the next step is iteration `t + 1`.
    pub t: usize,
    pub x: Vec<f64>,
    /// `m_t` after the last step; `None` before the first one.
    pub m: Option<Vec<f64>>,
}

/// What a single step saw and did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Batch mean `g_t`.
    pub g: Vec<f64>,
    /// Direction actually used (`m_t` for momentum methods, the clipped
    /// gradient for SGD variants).
    pub direction: Vec<f64>,
}

impl OptimizerState {
    pub fn new(x1: Vec<f64>) -> Self {
        Self {
            t: 0,
            x: x1,
            m: None,
        }
    }

    fn batch_mean(&self, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
        let g = linalg::mean_of(batch)?;
        linalg::check_dim(self.x.len(), &g)?;
        Ok(g)
    }

    fn momentum(&mut self, g: &[f64], beta: f64) -> Vec<f64> {
        let prev = self.m.take().unwrap_or_else(|| g.to_vec());
        prev.iter()
            .zip(g)
            .map(|(mp, gi)| beta * mp + (1.0 - beta) * gi)
            .collect()
    }

    /// One Batched NSGDM step.
    pub fn nsgdm_step(&mut self, batch: &[Vec<f64>], beta: f64, eta: f64) -> Result<StepOutcome> {
        let g = self.batch_mean(batch)?;
        let m = self.momentum(&g, beta);
        let n = linalg::norm(&m);
        if n > 0.0 {
            linalg::axpy(-eta / n, &m, &mut self.x);
        }
        self.m = Some(m.clone());
        self.t += 1;
        Ok(StepOutcome { g, direction: m })
    }

    /// One Batched SSGDM step with per-coordinate stepsizes.
    pub fn ssgdm_step(
        &mut self,
        batch: &[Vec<f64>],
        beta: f64,
        eta: &[f64],
    ) -> Result<StepOutcome> {
        linalg::check_dim(self.x.len(), eta)?;
        if eta.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::param(
                "eta",
                "per-coordinate stepsizes must be positive",
            ));
        }
        let g = self.batch_mean(batch)?;
        let m = self.momentum(&g, beta);
        for ((xi, mi), ei) in self.x.iter_mut().zip(&m).zip(eta) {
            if *mi != 0.0 {
                *xi -= ei * mi.signum();
            }
        }
        self.m = Some(m.clone());
        self.t += 1;
        Ok(StepOutcome { g, direction: m })
    }

    /// `x <- x - eta * clip(g, tau)`; `tau = inf` is plain SGD.
    pub fn clipped_sgd_step(
        &mut self,
        batch: &[Vec<f64>],
        eta: f64,
        tau: f64,
    ) -> Result<StepOutcome> {
        let g = self.batch_mean(batch)?;
        let c = clip_gradient(&g, tau)?;
        linalg::axpy(-eta, &c, &mut self.x);
        self.m = Some(c.clone());
        self.t += 1;
        Ok(StepOutcome { g, direction: c })
    }
}

/// `min{1, tau / |g|} g`.
pub fn clip_gradient(g: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let n = linalg::norm(g);
    if tau.is_infinite() || n <= tau {
        return Ok(g.to_vec());
    }
    Ok(linalg::scale(g, tau / n))
}
