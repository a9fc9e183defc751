use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{
    make_additive_oracle, make_regression_oracle, make_zero_chain_oracle, NoiseKind, NoiseSpec,
    StochasticOracle,
};
use crate::optim::{Method, ScheduleKind};
use crate::problems::{make_chain, make_quadratic, HardInstanceParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quadratic {
        dim: usize,
        /// Defaults to `dim` values evenly spaced in `[0.1, 1]`.
        eigenvalues: Option<Vec<f64>>,
        /// Defaults to the origin.
        x_star: Option<Vec<f64>>,
        /// Defaults to the all-ones vector.
        x1: Option<Vec<f64>>,
    },
    Chain {
        d: usize,
        x1: Option<Vec<f64>>,
    },
    HardInstance {
        p: f64,
        delta1: f64,
        l0: f64,
        sigma0: f64,
        epsilon: f64,
    },
    Regression {
        q: f64,
        x_star: f64,
        sigma: f64,
        #[serde(default)]
        x1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKindConfig {
    #[serde(alias = "pareto")]
    SymmetricPareto,
    StudentT,
    Gaussian,
    ZeroChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Additive noise family, `zero-chain` for the hard instance, or the
    /// distribution of `omega` for the regression problem.
    pub kind: OracleKindConfig,
    #[serde(default)]
    pub shape: f64,
    #[serde(default = "one")]
    pub scale: f64,
    /// Tail index of the moment contract; the hard instance supplies its own.
    pub p: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    /// Manual momentum parameter (ignored by the derived schedules).
    pub beta: Option<f64>,
    /// Manual stepsize prefactor: `eta_T = eta * T^eta_exponent`.
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta_exponent: f64,
    /// Manual batch size.
    #[serde(alias = "B")]
    pub batch: Option<usize>,
    /// Overrides `F(x1) - F*` for problems whose minimum value is unknown.
    pub delta1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipConfig {
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// Accepted `|fitted - theoretical|`.
    pub tolerance: f64,
    /// Overrides the exponent implied by the schedule.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedsConfig {
    Count(u64),
    List(Vec<u64>),
}

impl SeedsConfig {
    pub fn indices(&self) -> Vec<u64> {
        match self {
            Self::Count(n) => (0..*n).collect(),
            Self::List(v) => v.clone(),
        }
    }
}

impl Default for SeedsConfig {
    fn default() -> Self {
        Self::Count(100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub oracle: OracleConfig,
    pub method: Method,
    pub schedule: ScheduleConfig,
    pub clip: Option<ClipConfig>,
    #[serde(rename = "T_grid", alias = "t_grid")]
    pub t_grid: Vec<u64>,
    #[serde(default)]
    pub seeds: SeedsConfig,
    #[serde(default)]
    pub base_seed: u64,
    /// Directory for `results.csv` / `results.json`.
    pub output: Option<PathBuf>,
    /// Record every step and evaluate the descent inequality per run.
    #[serde(default)]
    pub check_descent: bool,
    pub rates: Option<RatesConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.t_grid.len() < 3 {
            return bad(format!(
                "T_grid needs at least 3 entries, got {}",
                self.t_grid.len()
            ));
        }
        if self.t_grid[0] == 0 || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("T_grid must be strictly increasing positive integers".into());
        }
        if self.seeds.indices().is_empty() {
            return bad("seeds must be a positive count or a non-empty list".into());
        }
        if let SeedsConfig::List(v) = &self.seeds {
            let mut s = v.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return bad("seeds list contains duplicates".into());
            }
        }
        if self.schedule.kind == ScheduleKind::Manual {
            if self.schedule.beta.is_none() && matches!(self.method, Method::Nsgdm | Method::Ssgdm)
            {
                return bad("schedule.beta is required for a manual momentum schedule".into());
            }
            if self.schedule.eta.is_none() {
                return bad("schedule.eta is required for a manual schedule".into());
            }
        }
        if self.method == Method::ClippedSgd && self.clip.is_none() {
            return bad("clip.tau is required for clipped-sgd".into());
        }
        let zero_chain = self.oracle.kind == OracleKindConfig::ZeroChain;
        let hard = matches!(self.problem, ProblemConfig::HardInstance { .. });
        if zero_chain != hard {
            return bad(
                "the zero-chain oracle goes with (and only with) the hard_instance problem".into(),
            );
        }
        if !hard && self.oracle.p.is_none() {
            return bad("oracle.p is required".into());
        }
        if let ProblemConfig::HardInstance { p, .. } = self.problem {
            if self.oracle.p.is_some_and(|q| q != p) {
                return bad("oracle.p disagrees with problem.p".into());
            }
        }
        Ok(())
    }

    /// Tail index of the contract the schedules are computed for.
    pub fn tail_index(&self) -> f64 {
        match self.problem {
            ProblemConfig::HardInstance { p, .. } => p,
            _ => self.oracle.p.expect("validated"),
        }
    }

    /// Oracle with batch 1; the runner widens it to the schedule batch.
    pub fn build_oracle(&self) -> Result<StochasticOracle> {
        let p = self.tail_index();
        let noise_kind = |k: OracleKindConfig| match k {
            OracleKindConfig::SymmetricPareto => Ok(NoiseKind::SymmetricPareto),
            OracleKindConfig::StudentT => Ok(NoiseKind::StudentT),
            OracleKindConfig::Gaussian => Ok(NoiseKind::Gaussian),
            OracleKindConfig::ZeroChain => {
                Err(Error::Config("zero-chain is not a noise law".into()))
            }
        };
        match &self.problem {
            ProblemConfig::Quadratic {
                dim,
                eigenvalues,
                x_star,
                x1,
            } => {
                let eig = eigenvalues
                    .clone()
                    .unwrap_or_else(|| linspace(0.1, 1.0, *dim));
                let xs = x_star.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let problem = make_quadratic(*dim, &eig, &xs)?
                    .with_x1(x1.clone().unwrap_or_else(|| vec![1.0; *dim]))?;
                let noise = NoiseSpec::new(
                    noise_kind(self.oracle.kind)?,
                    self.oracle.shape,
                    self.oracle.scale,
                )?;
                make_additive_oracle(problem, noise, p, 1)
            }
            ProblemConfig::Chain { d, x1 } => {
                let mut problem = make_chain(*d)?;
                if let Some(x1) = x1 {
                    problem = problem.with_x1(x1.clone())?;
                }
                let noise = NoiseSpec::new(
                    noise_kind(self.oracle.kind)?,
                    self.oracle.shape,
                    self.oracle.scale,
                )?;
                make_additive_oracle(problem, noise, p, 1)
            }
            ProblemConfig::HardInstance {
                p,
                delta1,
                l0,
                sigma0,
                epsilon,
            } => {
                let params = HardInstanceParams::new(*p, *delta1, *l0, *sigma0, *epsilon)?;
                make_zero_chain_oracle(&params)
            }
            ProblemConfig::Regression {
                q,
                x_star,
                sigma,
                x1,
            } => {
                let mut o = make_regression_oracle(
                    *q,
                    *x_star,
                    *sigma,
                    p,
                    noise_kind(self.oracle.kind)?,
                    self.oracle.shape,
                )?;
                if let crate::noise::OracleKind::Regression { problem, .. } = &mut o.kind {
                    *problem = problem.clone().with_x1(vec![*x1])?;
                }
                Ok(o)
            }
        }
    }

    /// `F(x1) - F*` used by the known-p schedule.
    pub fn delta1(&self, oracle: &StochasticOracle) -> Result<f64> {
        if let Some(d) = self.schedule.delta1 {
            return Ok(d);
        }
        if let ProblemConfig::HardInstance { delta1, .. } = self.problem {
            return Ok(delta1);
        }
        oracle.problem().initial_gap().ok_or_else(|| {
            Error::Config("F* is unknown for this problem; set schedule.delta1".into())
        })
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![hi],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
