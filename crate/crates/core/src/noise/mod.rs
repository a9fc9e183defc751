//! Stochastic gradient oracles.
//!
//! Every oracle is unbiased and carries a declared contract
//! `E|g - grad F(x)|^p <= sigma0^p + sigma1^p |grad F(x)|^p` in its
//! [`OracleMeta`]. Three families are provided:
//!
//! - additive: `grad F(x) + xi` with independent heavy-tailed coordinates;
//! - zero-chain: the Bernoulli-masked gradient of the hard instance;
//! - regression: `a^2 (x - x*) - a omega` with `a ~ Bernoulli(q)`.
//!
//! Randomness comes from an explicit [`Stream`], so an oracle is a pure
//! function of `(x, stream state)`.

mod sampler;
mod stream;

pub use sampler::{heavy_tail_sample, running_abs_moment, unit_abs_moment, NoiseKind, NoiseSpec};
pub use stream::{derive_seed, Stream};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{
    make_hard_instance, make_regression, prog_alpha, regression_noise_levels, HardInstanceParams,
    Problem,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleMeta {
    /// Tail index the contract is stated for.
    pub p: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub batch: usize,
}

impl OracleMeta {
    pub fn new(p: f64, sigma0: f64, sigma1: f64, batch: usize) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
        }
        if !(sigma0 >= 0.0) || !(sigma1 >= 0.0) {
            return Err(Error::param("sigma", "noise levels must be >= 0"));
        }
        if batch == 0 {
            return Err(Error::param("batch", "must be >= 1"));
        }
        Ok(Self {
            p,
            sigma0,
            sigma1,
            batch,
        })
    }

    /// Right-hand side of the moment contract at a point with gradient norm `grad_norm`.
    pub fn moment_bound(&self, grad_norm: f64) -> f64 {
        self.sigma0.powf(self.p) + self.sigma1.powf(self.p) * grad_norm.powf(self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OracleKind {
    Additive {
        problem: Problem,
        noise: NoiseSpec,
    },
    ZeroChain {
        params: HardInstanceParams,
        problem: Problem,
    },
    Regression {
        problem: Problem,
        q: f64,
        x_star: f64,
        omega: NoiseSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticOracle {
    pub meta: OracleMeta,
    pub kind: OracleKind,
}

impl StochasticOracle {
    pub fn problem(&self) -> &Problem {
        match &self.kind {
            OracleKind::Additive { problem, .. }
            | OracleKind::ZeroChain { problem, .. }
            | OracleKind::Regression { problem, .. } => problem,
        }
    }

    pub fn dim(&self) -> usize {
        self.problem().dim()
    }

    pub fn true_grad(&self, x: &[f64]) -> Vec<f64> {
        self.problem().grad(x)
    }

    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::param("batch", "must be >= 1"));
        }
        self.meta.batch = batch;
        Ok(self)
    }

    /// One gradient estimate at `x`.
    pub fn sample(&self, x: &[f64], stream: &mut Stream) -> Vec<f64> {
        match &self.kind {
            OracleKind::Additive { problem, noise } => {
                let mut g = problem.grad(x);
                if noise.scale != 0.0 {
                    for gi in g.iter_mut() {
                        *gi += noise.sample_scalar(stream);
                    }
                }
                g
            }
            OracleKind::ZeroChain { params, .. } => {
                let z = stream.random_bool(params.q);
                zero_chain_estimate(params, x, z)
            }
            OracleKind::Regression {
                q, x_star, omega, ..
            } => {
                let a = stream.random_bool(*q);
                let w = omega.sample_scalar(stream);
                if a {
                    vec![x[0] - x_star - w]
                } else {
                    vec![0.0]
                }
            }
        }
    }

    /// `meta.batch` mutually independent estimates at `x`.
    pub fn sample_batch(&self, x: &[f64], stream: &mut Stream) -> Vec<Vec<f64>> {
        (0..self.meta.batch)
            .map(|_| self.sample(x, stream))
            .collect()
    }
}

/// Additive-noise oracle `g = grad F(x) + xi`. The declared `sigma0` is the
/// certified bound `E|xi|^p <= dim * E|xi_1|^p`, valid for any `p <= 2` by
/// subadditivity of `t -> t^{p/2}`.
pub fn make_additive_oracle(
    problem: Problem,
    noise: NoiseSpec,
    p: f64,
    batch: usize,
) -> Result<StochasticOracle> {
    noise.validate()?;
    let coord = noise.abs_moment(p).ok_or_else(|| {
        Error::param(
            "p",
            format!(
                "{:?} noise with shape {} has no finite {p}-th moment",
                noise.kind, noise.shape
            ),
        )
    })?;
    let sigma0 = (problem.dim() as f64 * coord).powf(1.0 / p);
    let meta = OracleMeta::new(p, sigma0, 0.0, batch)?;
    Ok(StochasticOracle {
        meta,
        kind: OracleKind::Additive { problem, noise },
    })
}

/// Bernoulli zero-chain oracle on the scaled hard instance.
pub fn make_zero_chain_oracle(params: &HardInstanceParams) -> Result<StochasticOracle> {
    let problem = make_hard_instance(params)?;
    let meta = OracleMeta::new(params.p, params.sigma0, 0.0, 1)?;
    Ok(StochasticOracle {
        meta,
        kind: OracleKind::ZeroChain {
            params: params.clone(),
            problem,
        },
    })
}

/// `g_d(x, z)`: coordinates up to `prog_{1/4}(x / lambda)` are exact, the rest
/// are multiplied by `z / q`.
pub fn zero_chain_estimate(params: &HardInstanceParams, x: &[f64], z: bool) -> Vec<f64> {
    let y: Vec<f64> = x.iter().map(|v| v / params.lambda).collect();
    let mut h = crate::problems::chain_grad(&y, y.len()).expect("dimension of the instance");
    let revealed = prog_alpha(&y, 0.25);
    let mask = if z { 1.0 / params.q } else { 0.0 };
    for hi in h.iter_mut().skip(revealed) {
        *hi *= mask;
    }
    let s = params.grad_scale();
    h.iter_mut().for_each(|v| *v *= s);
    h
}

/// Oracle for the one-dimensional regression example. `omega` is rescaled so
/// that `E|omega|^p = sigma^p` exactly.
pub fn make_regression_oracle(
    q: f64,
    x_star: f64,
    sigma: f64,
    p: f64,
    omega_kind: NoiseKind,
    omega_shape: f64,
) -> Result<StochasticOracle> {
    let problem = make_regression(q, x_star, sigma, p)?;
    let unit = NoiseSpec::new(omega_kind, omega_shape, 1.0)?;
    let m = unit.abs_moment(p).ok_or_else(|| {
        Error::param(
            "omega_shape",
            format!("omega has no finite {p}-th moment with shape {omega_shape}"),
        )
    })?;
    let omega = NoiseSpec::new(omega_kind, omega_shape, sigma / m.powf(1.0 / p))?;
    let (sigma0, sigma1) = regression_noise_levels(q, sigma, p)?;
    Ok(StochasticOracle {
        meta: OracleMeta::new(p, sigma0, sigma1, 1)?,
        kind: OracleKind::Regression {
            problem,
            q,
            x_star,
            omega,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of `E|g - grad F(x)|^p` over `trials` independent draws.
pub fn empirical_moment(
    oracle: &StochasticOracle,
    x: &[f64],
    p: f64,
    trials: usize,
    stream: &mut Stream,
) -> Result<MomentEstimate> {
    linalg::check_dim(oracle.dim(), x)?;
    if trials == 0 {
        return Err(Error::param("trials", "must be >= 1"));
    }
    let grad = oracle.true_grad(x);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let g = oracle.sample(x, stream);
        let v = linalg::dist(&g, &grad).powf(p);
        sum += v;
        sum_sq += v * v;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MomentEstimate {
        mean,
        std_err: (var / n).sqrt(),
        trials,
    })
}
