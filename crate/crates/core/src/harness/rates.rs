use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    KnownP,
    UnknownP,
}

/// `(1-p)/(3p-2)` when `p` is known to the schedule, `(1-p)/(2p)` otherwise.
pub fn theoretical_exponent(regime: Regime, p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
    }
    Ok(match regime {
        Regime::KnownP => (1.0 - p) / (3.0 * p - 2.0),
        Regime::UnknownP => (1.0 - p) / (2.0 * p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub t: f64,
    pub metric: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points that entered the fit.
    pub points: Vec<RatePoint>,
}

/// Least squares of `log metric` on `log T`. Points with a nonpositive or
/// non-finite metric are dropped with a warning.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateEstimate> {
    let pts: Vec<RatePoint> = points
        .iter()
        .map(|&(t, metric)| RatePoint {
            t,
            metric,
            std_err: f64::NAN,
        })
        .collect();
    fit_rate_points(&pts)
}

pub fn fit_rate_points(points: &[RatePoint]) -> Result<RateEstimate> {
    let used: Vec<RatePoint> = points
        .iter()
        .copied()
        .filter(|pt| {
            let ok = pt.metric > 0.0 && pt.metric.is_finite() && pt.t > 0.0;
            if !ok {
                log::warn!(
                    "excluding T = {} with metric {} from the fit",
                    pt.t,
                    pt.metric
                );
            }
            ok
        })
        .collect();
    if used.len() < 3 {
        return Err(Error::TooFewPoints(used.len()));
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.metric.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param(
            "T",
            "fit needs at least two distinct horizons",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateEstimate {
        slope,
        intercept,
        r_squared,
        points: used,
    })
}
