//! Zero-chain construction used for the iteration lower bound.
//!
//! `f_d(x) = -Psi(1) Phi(x_1) + sum_{i=2}^d [Psi(-x_{i-1}) Phi(-x_i) - Psi(x_{i-1}) Phi(x_i)]`
//! with the bump `Psi` and the scaled Gaussian integral `Phi`. Its gradient
//! only ever reveals one coordinate beyond the current progress, which is
//! what the hard instance exploits.

use std::f64::consts::{E, PI, SQRT_2};

use serde::Serialize;
use statrs::function::erf::erfc;

use super::{Objective, Problem};
use crate::error::{Error, Result};
use crate::linalg;

/// Value-gap constant: `f_d(0) - inf f_d <= 12 d`. Documented, not asserted.
pub const CHAIN_VALUE_GAP: f64 = 12.0;
/// Smoothness constant of `f_d`.
pub const CHAIN_SMOOTHNESS: f64 = 152.0;
/// Bound on `|grad f_d|_inf`.
pub const CHAIN_GRAD_BOUND: f64 = 23.0;
/// Largest hard-instance dimension we are willing to build.
pub const MAX_HARD_INSTANCE_DIM: usize = 10_000;

pub fn psi(t: f64) -> f64 {
    if t <= 0.5 {
        0.0
    } else {
        let u = 2.0 * t - 1.0;
        (1.0 - 1.0 / (u * u)).exp()
    }
}

/// `Psi'(t) = 4 (2t-1)^{-3} exp(1 - (2t-1)^{-2})` for `t > 1/2`.
pub fn psi_prime(t: f64) -> f64 {
    if t <= 0.5 {
        0.0
    } else {
        let u = 2.0 * t - 1.0;
        // log-space so that u^{-3} * exp(-u^{-2}) does not turn into inf * 0
        (1.0 - 1.0 / (u * u) + 4f64.ln() - 3.0 * u.ln()).exp()
    }
}

/// `Phi(t) = sqrt(e) * int_{-inf}^t exp(-tau^2 / 2) dtau`.
pub fn phi(t: f64) -> f64 {
    E.sqrt() * (2.0 * PI).sqrt() * 0.5 * erfc(-t / SQRT_2)
}

pub fn phi_prime(t: f64) -> f64 {
    E.sqrt() * (-0.5 * t * t).exp()
}

/// Highest 1-based index `i` with `|x_i| > alpha`, or 0 when there is none.
pub fn prog_alpha(x: &[f64], alpha: f64) -> usize {
    x.iter().rposition(|v| v.abs() > alpha).map_or(0, |i| i + 1)
}

pub fn chain_value(x: &[f64], d: usize) -> Result<f64> {
    linalg::check_dim(d, x)?;
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    Ok(chain_value_unchecked(x))
}

pub fn chain_grad(x: &[f64], d: usize) -> Result<Vec<f64>> {
    linalg::check_dim(d, x)?;
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    Ok(chain_grad_unchecked(x))
}

pub(crate) fn chain_value_unchecked(x: &[f64]) -> f64 {
    let mut v = -psi(1.0) * phi(x[0]);
    for w in x.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        v += psi(-prev) * phi(-cur) - psi(prev) * phi(cur);
    }
    v
}

pub(crate) fn chain_grad_unchecked(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut g = vec![0.0; d];
    g[0] = -psi(1.0) * phi_prime(x[0]);
    for j in 1..d {
        // term i = j depends on x_j through Phi(+-x_j)
        g[j] = -psi(-x[j - 1]) * phi_prime(-x[j]) - psi(x[j - 1]) * phi_prime(x[j]);
    }
    for j in 0..d.saturating_sub(1) {
        // term i = j + 1 depends on x_j through Psi(+-x_j)
        let next = x[j + 1];
        g[j] += -psi_prime(-x[j]) * phi(-next) - psi_prime(x[j]) * phi(next);
    }
    g
}

/// Unscaled chain function as a problem (`L0 = 152`, `F*` unknown, `x1 = 0`).
pub fn make_chain(d: usize) -> Result<Problem> {
    if d == 0 || d > MAX_HARD_INSTANCE_DIM {
        return Err(Error::param(
            "d",
            format!("must lie in [1, {MAX_HARD_INSTANCE_DIM}], got {d}"),
        ));
    }
    Ok(Problem {
        name: "chain".into(),
        objective: Objective::Chain { d },
        l0: CHAIN_SMOOTHNESS,
        l1: 0.0,
        f_star: None,
        x1: vec![0.0; d],
    })
}

/// Parameters of the scaled hard instance. Derived quantities follow
///
/// - `d = floor(Delta1 L0 / (4 delta ell eps^2))`
/// - `lambda = 2 ell eps / L0`
/// - `q = (4 gamma eps / sigma0)^{p/(p-1)}`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardInstanceParams {
    pub p: f64,
    pub delta1: f64,
    pub l0: f64,
    pub sigma0: f64,
    pub epsilon: f64,
    pub d: usize,
    pub lambda: f64,
    pub q: f64,
    pub delta_c: f64,
    pub ell_c: f64,
    pub gamma_c: f64,
}

impl HardInstanceParams {
    /// Computes the derived fields. Feasibility is checked by [`Self::validate`].
    pub fn new(p: f64, delta1: f64, l0: f64, sigma0: f64, epsilon: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
        }
        for (name, v) in [
            ("delta1", delta1),
            ("l0", l0),
            ("sigma0", sigma0),
            ("epsilon", epsilon),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        let (delta_c, ell_c, gamma_c) = (CHAIN_VALUE_GAP, CHAIN_SMOOTHNESS, CHAIN_GRAD_BOUND);
        let d_real = (delta1 * l0 / (4.0 * delta_c * ell_c * epsilon * epsilon)).floor();
        let d = if d_real >= usize::MAX as f64 {
            usize::MAX
        } else {
            d_real as usize
        };
        Ok(Self {
            p,
            delta1,
            l0,
            sigma0,
            epsilon,
            d,
            lambda: 2.0 * ell_c * epsilon / l0,
            q: (4.0 * gamma_c * epsilon / sigma0).powf(p / (p - 1.0)),
            delta_c,
            ell_c,
            gamma_c,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.q > 1.0 {
            return Err(Error::Infeasible(format!(
                "q = {} > 1 (epsilon too large relative to sigma0)",
                self.q
            )));
        }
        if self.d < 1 {
            return Err(Error::Infeasible(
                "d = floor(Delta1 L0 / (4 delta ell eps^2)) < 1".into(),
            ));
        }
        if self.d > MAX_HARD_INSTANCE_DIM {
            return Err(Error::Infeasible(format!(
                "d = {} exceeds the cap of {MAX_HARD_INSTANCE_DIM}",
                self.d
            )));
        }
        Ok(())
    }

    /// `L0 lambda / ell`, the factor between `grad F_d` and `grad f_d`.
    pub fn grad_scale(&self) -> f64 {
        self.l0 * self.lambda / self.ell_c
    }

    /// Iterations during which a zero-respecting method stays short of
    /// `d` with probability at least 1/2: `(d - 1) / (2q)`.
    pub fn iteration_floor(&self) -> f64 {
        (self.d as f64 - 1.0) / (2.0 * self.q)
    }

    /// `Delta1 L0 sigma0^{p/(p-1)} eps^{-(3p-2)/(p-1)}`, the order of the floor
    /// without constants.
    pub fn complexity_order(&self) -> f64 {
        let p = self.p;
        self.delta1
            * self.l0
            * self.sigma0.powf(p / (p - 1.0))
            * self.epsilon.powf(-(3.0 * p - 2.0) / (p - 1.0))
    }
}

/// Scaled hard instance `F_d(x) = (L0 lambda^2 / ell) f_d(x / lambda)`.
pub fn make_hard_instance(params: &HardInstanceParams) -> Result<Problem> {
    params.validate()?;
    Ok(Problem {
        name: "hard_instance".into(),
        objective: Objective::HardInstance {
            d: params.d,
            lambda: params.lambda,
            value_scale: params.l0 * params.lambda * params.lambda / params.ell_c,
            grad_scale: params.grad_scale(),
        },
        l0: params.l0,
        l1: 0.0,
        f_star: None,
        x1: vec![0.0; params.d],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(-3.0), 0.0);
        assert!((psi(1.0) - 1.0).abs() < 1e-15);
        assert!((psi(0.75) - (-3.0f64).exp()).abs() < 1e-15);
        assert!((psi(0.75) - 0.049787).abs() < 1e-6);
        assert!(psi(1e6) < E);
    }

    #[test]
    fn psi_prime_is_finite_near_the_kink() {
        for t in [0.5 + 1e-300, 0.5 + 1e-12, 0.5 + 1e-4, 0.51] {
            let v = psi_prime(t);
            assert!(v.is_finite() && v >= 0.0, "psi'({t}) = {v}");
        }
    }

    #[test]
    fn phi_limits() {
        assert!(phi(-40.0).abs() < 1e-300);
        assert!((phi(0.0) - 2.06637).abs() < 1e-5);
        assert!((phi(40.0) - (2.0 * PI * E).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn prog_examples() {
        assert_eq!(prog_alpha(&[0.0; 4], 0.0), 0);
        assert_eq!(prog_alpha(&[0.6, 0.4, 0.7], 0.5), 3);
        assert_eq!(prog_alpha(&[0.6, 0.4, 0.7], 0.65), 3);
        assert_eq!(prog_alpha(&[0.6, 0.4, 0.3], 0.5), 1);
        assert_eq!(prog_alpha(&[], 0.5), 0);
    }

    #[test]
    fn gradient_at_origin() {
        let g = chain_grad(&[0.0; 5], 5).unwrap();
        assert!((g[0] + E.sqrt()).abs() < 1e-15);
        assert!(g[1..].iter().all(|v| *v == 0.0));
        let v = chain_value(&[0.0; 5], 5).unwrap();
        assert!((v + phi(0.0)).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_chain_is_negative_phi() {
        for t in [-2.0, 0.0, 0.3, 4.0] {
            assert_eq!(chain_value(&[t], 1).unwrap(), -psi(1.0) * phi(t));
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(chain_value(&[0.0; 3], 4).is_err());
        assert!(chain_grad(&[0.0; 3], 2).is_err());
    }

    #[test]
    fn hard_instance_derived_fields() {
        let hp = HardInstanceParams::new(2.0, 1.0, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(hp.d, 1);
        assert!((hp.lambda - 3.04).abs() < 1e-12);
        assert!((hp.q - 0.8464).abs() < 1e-12);
        let prob = make_hard_instance(&hp).unwrap();
        let g = prob.grad(&[0.0]);
        assert!((g[0] - hp.grad_scale() * -E.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn infeasible_parameters() {
        // q > 1
        let hp = HardInstanceParams::new(2.0, 1.0, 1.0, 0.1, 0.01).unwrap();
        assert!(matches!(make_hard_instance(&hp), Err(Error::Infeasible(m)) if m.contains("q")));
        // d < 1
        let hp = HardInstanceParams::new(2.0, 1.0, 1.0, 10.0, 0.02).unwrap();
        assert!(matches!(make_hard_instance(&hp), Err(Error::Infeasible(m)) if m.contains("< 1")));
        // d beyond cap
        let hp = HardInstanceParams::new(2.0, 1.0, 1.0, 100.0, 1e-5).unwrap();
        assert!(matches!(make_hard_instance(&hp), Err(Error::Infeasible(m)) if m.contains("cap")));
        assert!(HardInstanceParams::new(2.5, 1.0, 1.0, 1.0, 0.01).is_err());
    }
}
