use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::{NoiseSpec, Stream};

/// Martingale difference sequences used to probe the `p`-th moment bound
/// `E|sum v_t| <= 2 sqrt(2) E[(sum |v_t|^p)^(1/p)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MdsSampler {
    /// Independent symmetric vectors with i.i.d. coordinates.
    Iid { noise: NoiseSpec, dim: usize },
    /// Symmetric coordinates whose scale is `high` when the first coordinate
    /// of the running sum is positive and `low` otherwise.
    StateScaled {
        noise: NoiseSpec,
        dim: usize,
        low: f64,
        high: f64,
    },
}

impl MdsSampler {
    fn dim(&self) -> usize {
        match self {
            Self::Iid { dim, .. } | Self::StateScaled { dim, .. } => *dim,
        }
    }

    fn noise(&self) -> &NoiseSpec {
        match self {
            Self::Iid { noise, .. } | Self::StateScaled { noise, .. } => noise,
        }
    }

    fn draw(&self, running: &[f64], stream: &mut Stream) -> Vec<f64> {
        let noise = self.noise();
        let mut v = noise.sample(self.dim(), stream);
        if let Self::StateScaled { low, high, .. } = self {
            let s = if running[0] > 0.0 { *high } else { *low };
            v.iter_mut().for_each(|x| *x *= s);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoreLemmaEstimate {
    /// `E|sum v| / E[(sum |v|^p)^(1/p)]`.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub std_err: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub trials: usize,
    /// `trials >= 1000`.
    pub stable: bool,
}

impl CoreLemmaEstimate {
    pub const BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
}

pub fn core_lemma_ratio(
    sampler: &MdsSampler,
    horizon: usize,
    trials: usize,
    p: f64,
    stream: &mut Stream,
) -> Result<CoreLemmaEstimate> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
    }
    if horizon == 0 || trials < 2 {
        return Err(Error::param("trials", "need T >= 1 and at least 2 trials"));
    }
    if sampler.dim() == 0 {
        return Err(Error::param("dim", "must be >= 1"));
    }
    if let MdsSampler::StateScaled { low, high, .. } = sampler {
        if !(*low >= 0.0 && *high >= 0.0) {
            return Err(Error::param("scale", "state scales must be >= 0"));
        }
    }
    sampler.noise().validate()?;

    let mut num = Vec::with_capacity(trials);
    let mut den = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut sum = vec![0.0; sampler.dim()];
        let mut pow_sum = 0.0;
        for _ in 0..horizon {
            let v = sampler.draw(&sum, stream);
            pow_sum += linalg::norm(&v).powf(p);
            linalg::axpy(1.0, &v, &mut sum);
        }
        num.push(linalg::norm(&sum));
        den.push(pow_sum.powf(1.0 / p));
    }
    let n = trials as f64;
    let a = num.iter().sum::<f64>() / n;
    let b = den.iter().sum::<f64>() / n;
    if !(b > 0.0) {
        return Err(Error::Domain("denominator is zero".into()));
    }
    let ratio = a / b;
    let resid_var = num
        .iter()
        .zip(&den)
        .map(|(x, y)| (x - ratio * y).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok(CoreLemmaEstimate {
        ratio,
        std_err: (resid_var / n).sqrt() / b,
        numerator: a,
        denominator: b,
        trials,
        stable: trials >= 1000,
    })
}
