//! Constant `(beta, eta, B)` schedules for a fixed horizon `T`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    KnownP,
    UnknownP,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub beta: f64,
    pub eta: f64,
    pub batch: usize,
    pub provenance: ScheduleKind,
}

impl Schedule {
    pub fn manual(beta: f64, eta: f64, batch: usize) -> Result<Self> {
        let s = Self {
            beta,
            eta,
            batch,
            provenance: ScheduleKind::Manual,
        };
        s.validate(0.0)?;
        Ok(s)
    }

    /// Checks `beta in [0,1]`, `eta > 0`, `B >= 1`, and for derived schedules
    /// `eta <= (1 - beta) / (8 L1)`.
    pub fn validate(&self, l1: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param(
                "beta",
                format!("must lie in [0, 1], got {}", self.beta),
            ));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::param(
                "eta",
                format!("must be positive, got {}", self.eta),
            ));
        }
        if self.batch == 0 {
            return Err(Error::param("B", "must be >= 1"));
        }
        if l1 > 0.0 && self.provenance != ScheduleKind::Manual {
            let cap = (1.0 - self.beta) / (8.0 * l1);
            // `1 - beta` loses up to one ulp of 1.0 when beta is near 1.
            if self.eta > (1.0 - self.beta + f64::EPSILON) / (8.0 * l1) * (1.0 + 1e-12) {
                return Err(Error::param(
                    "eta",
                    format!("{} exceeds (1 - beta) / (8 L1) = {cap}", self.eta),
                ));
            }
        }
        Ok(())
    }
}

/// Inputs of the known-tail-index schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownPInputs {
    pub delta1: f64,
    pub l0: f64,
    pub l1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub grad_norm_x1: f64,
    pub p: f64,
    pub horizon: u64,
}

/// `B = max{ceil((16 sqrt(2) sigma1)^{p/(p-1)}), 1}`.
pub fn batch_for_sigma1(sigma1: f64, p: f64) -> usize {
    if sigma1 <= 0.0 {
        return 1;
    }
    let raw = (16.0 * SQRT_2 * sigma1).powf(p / (p - 1.0));
    // 16 sqrt(2) is inexact; snap values within rounding of an integer
    // before taking the ceiling, e.g. (16 sqrt 2)^2 = 512
    let nearest = raw.round();
    let b = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    (b as usize).max(1)
}

/// Schedule for a known tail index:
///
/// - `1 - beta = min{1, max{U, V}}` with
///   `U = ((Delta1 L1 B^{(p-1)/p} + sigma0 + sigma1 |grad F(x1)|) / (sigma0 T))^{p/(2p-1)}` and
///   `V = (Delta1 L0 B^{2(p-1)/p} / (sigma0^2 T))^{p/(3p-2)}`;
/// - `eta = min{sqrt((1 - beta) Delta1 / (L0 T)), (1 - beta) / (8 L1)}`;
/// - `B` from [`batch_for_sigma1`].
///
/// With `sigma0 = 0` the noiseless limit is used: `beta = 0`,
/// `eta = min{sqrt(Delta1 / (L0 T)), 1 / (8 L1)}`. `L1 = 0` drops the second
/// term of the `eta` minimum.
pub fn known_p_schedule(inp: &KnownPInputs) -> Result<Schedule> {
    let KnownPInputs {
        delta1,
        l0,
        l1,
        sigma0,
        sigma1,
        grad_norm_x1,
        p,
        horizon,
    } = *inp;
    if horizon == 0 {
        return Err(Error::param("T", "must be >= 1"));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
    }
    if !(delta1 > 0.0) || !(l0 > 0.0) {
        return Err(Error::param("delta1/l0", "must be positive"));
    }
    if !(l1 >= 0.0) || !(sigma0 >= 0.0) || !(sigma1 >= 0.0) || !(grad_norm_x1 >= 0.0) {
        return Err(Error::param("l1/sigma", "must be nonnegative"));
    }
    let t = horizon as f64;
    let batch = batch_for_sigma1(sigma1, p);
    let b = batch as f64;

    let one_minus_beta = if sigma0 == 0.0 {
        1.0
    } else {
        let u = ((delta1 * l1 * b.powf((p - 1.0) / p) + sigma0 + sigma1 * grad_norm_x1)
            / (sigma0 * t))
            .powf(p / (2.0 * p - 1.0));
        let v = (delta1 * l0 * b.powf(2.0 * (p - 1.0) / p) / (sigma0 * sigma0 * t))
            .powf(p / (3.0 * p - 2.0));
        u.max(v).min(1.0)
    };
    let mut eta = (one_minus_beta * delta1 / (l0 * t)).sqrt();
    if l1 > 0.0 {
        eta = eta.min(one_minus_beta / (8.0 * l1));
    }
    Ok(Schedule {
        beta: 1.0 - one_minus_beta,
        eta,
        batch,
        provenance: ScheduleKind::KnownP,
    })
}

/// `beta = 1 - T^{-1/2}`, `eta = min{T^{-3/4}, 1 / (8 L1 T^{1/2})}`, `B = 1`.
pub fn unknown_p_schedule(horizon: u64, l1: f64) -> Result<Schedule> {
    if horizon == 0 {
        return Err(Error::param("T", "must be >= 1"));
    }
    if !(l1 >= 0.0) {
        return Err(Error::param("L1", "must be nonnegative"));
    }
    let t = horizon as f64;
    let sqrt_t = t.sqrt();
    let quarter = sqrt_t.sqrt();
    let mut eta = 1.0 / (quarter * quarter * quarter);
    if l1 > 0.0 {
        eta = eta.min(1.0 / (8.0 * l1 * sqrt_t));
    }
    Ok(Schedule {
        beta: 1.0 - 1.0 / sqrt_t,
        eta,
        batch: 1,
        provenance: ScheduleKind::UnknownP,
    })
}

/// Threshold below which the unknown-p schedule keeps `B = 1`.
pub fn sigma1_threshold() -> f64 {
    1.0 / (16.0 * SQRT_2)
}

/// Unknown-p schedule under relative noise `sigma1`. The tail index is only
/// needed when `sigma1 > 1/(16 sqrt 2)`, to size the batch.
pub fn unknown_p_schedule_full(
    horizon: u64,
    l1: f64,
    sigma1: f64,
    p_if_large_sigma1: Option<f64>,
) -> Result<Schedule> {
    let mut s = unknown_p_schedule(horizon, l1)?;
    if sigma1 > sigma1_threshold() {
        let p = p_if_large_sigma1.ok_or(Error::TailIndexRequired { sigma1 })?;
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
        }
        s.batch = batch_for_sigma1(sigma1, p);
    }
    Ok(s)
}
