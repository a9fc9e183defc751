//! Deterministic objectives with analytic gradients.
//!
//! A [`Problem`] bundles an objective with the constants the schedules need:
//! the generalized-smoothness pair `(L0, L1)`, a lower bound `F*` when one is
//! known, and the initial point `x1`.

mod chain;
mod quadratic;
mod regression;

pub use chain::{
    chain_grad, chain_value, make_chain, make_hard_instance, phi, phi_prime, prog_alpha, psi,
    psi_prime, HardInstanceParams, CHAIN_GRAD_BOUND, CHAIN_SMOOTHNESS, CHAIN_VALUE_GAP,
    MAX_HARD_INSTANCE_DIM,
};
pub use quadratic::make_quadratic;
pub use regression::{make_regression, regression_noise_levels};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Objective {
    /// `1/2 sum_i lambda_i (x_i - x*_i)^2`
    Quadratic {
        eigenvalues: Vec<f64>,
        x_star: Vec<f64>,
    },
    /// Unscaled chain function `f_d`.
    Chain { d: usize },
    /// `F_d(x) = (L0 lambda^2 / ell) f_d(x / lambda)`
    HardInstance {
        d: usize,
        lambda: f64,
        value_scale: f64,
        grad_scale: f64,
    },
    /// One-dimensional `q/2 (x - x*)^2` (constant offset dropped).
    Regression { q: f64, x_star: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub name: String,
    pub objective: Objective,
    pub l0: f64,
    pub l1: f64,
    /// `None` when the infimum is not numerically accessible.
    pub f_star: Option<f64>,
    pub x1: Vec<f64>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.x1.len()
    }

    pub fn with_x1(mut self, x1: Vec<f64>) -> Result<Self> {
        linalg::check_dim(self.dim(), &x1)?;
        self.x1 = x1;
        Ok(self)
    }

    /// Objective value. Panics on a dimension mismatch; use
    /// [`Problem::try_value`] for untrusted input.
    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        match &self.objective {
            Objective::Quadratic {
                eigenvalues,
                x_star,
            } => {
                0.5 * eigenvalues
                    .iter()
                    .zip(x.iter().zip(x_star))
                    .map(|(l, (xi, si))| l * (xi - si) * (xi - si))
                    .sum::<f64>()
            }
            Objective::Chain { .. } => chain::chain_value_unchecked(x),
            Objective::HardInstance {
                lambda,
                value_scale,
                ..
            } => {
                let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                value_scale * chain::chain_value_unchecked(&y)
            }
            Objective::Regression { q, x_star } => 0.5 * q * (x[0] - x_star) * (x[0] - x_star),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        match &self.objective {
            Objective::Quadratic {
                eigenvalues,
                x_star,
            } => eigenvalues
                .iter()
                .zip(x.iter().zip(x_star))
                .map(|(l, (xi, si))| l * (xi - si))
                .collect(),
            Objective::Chain { .. } => chain::chain_grad_unchecked(x),
            Objective::HardInstance {
                lambda, grad_scale, ..
            } => {
                let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                let mut g = chain::chain_grad_unchecked(&y);
                g.iter_mut().for_each(|v| *v *= grad_scale);
                g
            }
            Objective::Regression { q, x_star } => vec![q * (x[0] - x_star)],
        }
    }

    pub fn try_value(&self, x: &[f64]) -> Result<f64> {
        linalg::check_dim(self.dim(), x)?;
        Ok(self.value(x))
    }

    pub fn try_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        linalg::check_dim(self.dim(), x)?;
        Ok(self.grad(x))
    }

    /// `F(x1) - F*`, when `F*` is declared.
    pub fn initial_gap(&self) -> Option<f64> {
        self.f_star.map(|fs| self.value(&self.x1) - fs)
    }
}

/// Residual of the generalized-smoothness upper bound
///
/// `F(y) - F(x) - <grad F(x), y - x> - (L0 + L1 |grad F(x)|)/2 |x - y|^2`,
///
/// which is nonpositive for conforming problems. Requires `|x - y| <= 1/L1`.
pub fn smoothness_residual(problem: &Problem, x: &[f64], y: &[f64]) -> Result<f64> {
    linalg::check_dim(problem.dim(), x)?;
    linalg::check_dim(problem.dim(), y)?;
    let gap = linalg::dist(x, y);
    if problem.l1 > 0.0 && gap > 1.0 / problem.l1 {
        return Err(Error::Domain(format!(
            "|x - y| = {gap} exceeds 1/L1 = {}",
            1.0 / problem.l1
        )));
    }
    let g = problem.grad(x);
    let diff = linalg::sub(y, x);
    let curvature = 0.5 * (problem.l0 + problem.l1 * linalg::norm(&g)) * gap * gap;
    Ok(problem.value(y) - problem.value(x) - linalg::dot(&g, &diff) - curvature)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_vanishes_at_equal_points() {
        let p = make_quadratic(2, &[1.0, 3.0], &[0.5, -1.0]).unwrap();
        let x = [0.3, 0.7];
        assert_eq!(smoothness_residual(&p, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn residual_rejects_far_pairs_under_l1() {
        let mut p = make_quadratic(1, &[1.0], &[0.0]).unwrap();
        p.l1 = 2.0;
        assert!(matches!(
            smoothness_residual(&p, &[0.0], &[1.0]),
            Err(Error::Domain(_))
        ));
        assert!(smoothness_residual(&p, &[0.0], &[0.4]).is_ok());
    }

    #[test]
    fn dimension_checks() {
        let p = make_quadratic(2, &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(p.try_value(&[1.0]).is_err());
        assert!(p.try_grad(&[1.0, 2.0, 3.0]).is_err());
        assert!(p.clone().with_x1(vec![1.0]).is_err());
        assert_eq!(p.with_x1(vec![1.0, 1.0]).unwrap().initial_gap(), Some(1.0));
    }
}
