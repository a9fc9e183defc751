//! Heavy-tailed scalar noise with closed-form absolute moments.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::Stream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `|X|` Pareto with unit minimum and tail exponent `shape`, random sign.
    SymmetricPareto,
    /// Student-t with `shape` degrees of freedom.
    StudentT,
    /// Standard normal; `shape` is ignored.
    Gaussian,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric-pareto" | "pareto" => Ok(Self::SymmetricPareto),
            "student-t" => Ok(Self::StudentT),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::param(
                "kind",
                format!("unknown noise kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub shape: f64,
    pub scale: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, shape: f64, scale: f64) -> Result<Self> {
        let spec = Self { kind, shape, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::param(
                "scale",
                format!("must be finite and >= 0, got {}", self.scale),
            ));
        }
        match self.kind {
            NoiseKind::SymmetricPareto | NoiseKind::StudentT if !(self.shape > 1.0) => {
                Err(Error::param(
                    "shape",
                    format!("must exceed 1 so the mean exists, got {}", self.shape),
                ))
            }
            _ => Ok(()),
        }
    }

    /// One zero-mean scalar draw.
    pub fn sample_scalar(&self, stream: &mut Stream) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let x = match self.kind {
            NoiseKind::SymmetricPareto => {
                let mag: f64 = Pareto::new(1.0, self.shape)
                    .expect("validated shape")
                    .sample(stream);
                if stream.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
            NoiseKind::StudentT => StudentT::new(self.shape)
                .expect("validated shape")
                .sample(stream),
            NoiseKind::Gaussian => StandardNormal.sample(stream),
        };
        self.scale * x
    }

    pub fn sample(&self, dim: usize, stream: &mut Stream) -> Vec<f64> {
        (0..dim).map(|_| self.sample_scalar(stream)).collect()
    }

    /// `E|X|^p` for a single coordinate, or `None` when it is infinite.
    pub fn abs_moment(&self, p: f64) -> Option<f64> {
        unit_abs_moment(self.kind, self.shape, p).map(|m| m * self.scale.powf(p))
    }

    /// Largest moment order that is finite (exclusive for Pareto / Student-t).
    pub fn tail_index(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => f64::INFINITY,
            _ => self.shape,
        }
    }
}

/// `E|X|^p` of the unit-scale distribution.
pub fn unit_abs_moment(kind: NoiseKind, shape: f64, p: f64) -> Option<f64> {
    if !(p >= 0.0) {
        return None;
    }
    match kind {
        NoiseKind::SymmetricPareto => (p < shape).then(|| shape / (shape - p)),
        NoiseKind::StudentT => (p < shape).then(|| {
            let nu = shape;
            let ln = 0.5 * p * nu.ln() + ln_gamma(0.5 * (p + 1.0)) + ln_gamma(0.5 * (nu - p))
                - 0.5 * PI.ln()
                - ln_gamma(0.5 * nu);
            ln.exp()
        }),
        NoiseKind::Gaussian => {
            Some((0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln()).exp())
        }
    }
}

/// Draws a `dim`-vector of independent zero-mean heavy-tailed noise.
pub fn heavy_tail_sample(
    kind: NoiseKind,
    shape: f64,
    scale: f64,
    dim: usize,
    stream: &mut Stream,
) -> Result<Vec<f64>> {
    Ok(NoiseSpec::new(kind, shape, scale)?.sample(dim, stream))
}

/// Running estimate of `E|X|^p` recorded at each checkpoint (sample counts,
/// increasing). When `p` reaches the tail index the sequence keeps drifting
/// upward instead of settling.
pub fn running_abs_moment(
    spec: &NoiseSpec,
    p: f64,
    checkpoints: &[usize],
    stream: &mut Stream,
) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut n = 0usize;
    for &cp in checkpoints {
        while n < cp {
            acc += spec.sample_scalar(stream).abs().powf(p);
            n += 1;
        }
        out.push((n, acc / n.max(1) as f64));
    }
    out
}
