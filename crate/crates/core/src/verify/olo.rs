//! Online-learning construction behind the martingale bound.
//!
//! Projected online gradient descent on the unit ball with AdaGrad-style
//! stepsizes `gamma_t = sqrt(2 / sum_{s<=t} |v_s|^2)` produces weights `w_t`
//! (each a function of `v_1..v_{t-1}` only) such that for every prefix
//!
//! `|sum v_s| <= 2 sqrt(2 sum |v_s|^2) - sum <v_s, w_s>`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OloTrace {
    /// `w_1, ..., w_T`.
    pub weights: Vec<Vec<f64>>,
    /// `gamma_1, ..., gamma_T`; infinite while every `v_s` seen so far is zero.
    pub stepsizes: Vec<f64>,
    /// `|sum_{s<=t} v_s|` per prefix.
    pub lhs: Vec<f64>,
    /// `2 sqrt(2 sum_{s<=t} |v_s|^2) - sum_{s<=t} <v_s, w_s>` per prefix.
    pub rhs: Vec<f64>,
}

impl OloTrace {
    /// Largest `lhs - rhs` relative to `1 + |rhs|` across prefixes.
    pub fn max_violation(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| (l - r) / (1.0 + r.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs.is_empty() || self.max_violation() <= rel_slack
    }
}

fn project_unit_ball(w: &mut [f64]) {
    let n = linalg::norm(w);
    if n > 1.0 {
        w.iter_mut().for_each(|x| *x /= n);
    }
}

fn common_dim(v: &[Vec<f64>]) -> Result<usize> {
    let d = v.first().map_or(0, |x| x.len());
    for x in v {
        linalg::check_dim(d, x)?;
        if !linalg::is_finite(x) {
            return Err(Error::Domain("sequence contains non-finite entries".into()));
        }
    }
    Ok(d)
}

/// Weights `w_1..w_T` and stepsizes `gamma_1..gamma_T`.
fn weights(v: &[Vec<f64>], d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut w = vec![0.0; d];
    let mut sum_sq = 0.0;
    let mut ws = Vec::with_capacity(v.len());
    let mut gammas = Vec::with_capacity(v.len());
    for vt in v {
        ws.push(w.clone());
        sum_sq += linalg::norm_sq(vt);
        if sum_sq > 0.0 {
            let gamma = (2.0 / sum_sq).sqrt();
            linalg::axpy(-gamma, vt, &mut w);
            project_unit_ball(&mut w);
            gammas.push(gamma);
        } else {
            // leading zeros: w stays at the origin
            gammas.push(f64::INFINITY);
        }
    }
    (ws, gammas)
}

pub fn olo_check(v: &[Vec<f64>]) -> Result<OloTrace> {
    let d = common_dim(v)?;
    let (ws, gammas) = weights(v, d);
    let mut sum = vec![0.0; d];
    let mut sum_sq = 0.0;
    let mut inner = 0.0;
    let mut lhs = Vec::with_capacity(v.len());
    let mut rhs = Vec::with_capacity(v.len());
    for (vt, wt) in v.iter().zip(&ws) {
        linalg::axpy(1.0, vt, &mut sum);
        sum_sq += linalg::norm_sq(vt);
        inner += linalg::dot(vt, wt);
        lhs.push(linalg::norm(&sum));
        rhs.push(2.0 * (2.0 * sum_sq).sqrt() - inner);
    }
    Ok(OloTrace {
        weights: ws,
        stepsizes: gammas,
        lhs,
        rhs,
    })
}

/// Recomputes `w_t` (1-based) with the tail `v_t, v_{t+1}, ...` replaced by
/// several unrelated sequences and reports whether `w_t` is bit-identical in
/// every case.
pub fn olo_causality_check(v: &[Vec<f64>], t: usize) -> Result<bool> {
    let d = common_dim(v)?;
    if t == 0 || t > v.len() {
        return Err(Error::param(
            "t",
            format!("must lie in [1, {}], got {t}", v.len()),
        ));
    }
    let (reference, _) = weights(v, d);
    let target = &reference[t - 1];
    let prefix = &v[..t - 1];
    let tail_len = v.len() - (t - 1);
    let tails: [Box<dyn Fn(usize) -> Vec<f64>>; 3] = [
        Box::new(|_| vec![0.0; d]),
        Box::new(|i| v[v.len() - 1 - i].iter().map(|x| -3.0 * x).collect()),
        Box::new(|i| (0..d).map(|k| 1e6 * ((i + k) as f64).sin()).collect()),
    ];
    for tail in tails.iter() {
        let mut alt: Vec<Vec<f64>> = prefix.to_vec();
        alt.extend((0..tail_len).map(tail));
        let (ws, _) = weights(&alt, d);
        let same = ws[t - 1]
            .iter()
            .zip(target)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Ok(false);
        }
    }
    Ok(true)
}
