use super::decomposition::recorded_steps;
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{Method, OptimizerTrace};
use crate::problems::Problem;

/// Per-step descent inequality of the normalized update:
///
/// `F(x_{t+1}) <= F(x_t) - eta |grad F(x_t)| + 2 eta |eps_t| + (L0 + L1 |grad F(x_t)|) eta^2 / 2`
///
/// with `eps_t = m_t - grad F(x_t)`. Returns the largest positive excess,
/// normalized by `1 + |F(x_t)|` (0 when the inequality holds everywhere).
pub fn descent_residual(trace: &OptimizerTrace, problem: &Problem) -> Result<f64> {
    if trace.method != Method::Nsgdm {
        return Err(Error::param(
            "method",
            "descent inequality is stated for nsgdm",
        ));
    }
    let steps = recorded_steps(trace)?;
    let xs = trace.iterates().expect("steps recorded");
    let mut worst = 0.0f64;
    for (t, s) in steps.iter().enumerate() {
        if problem.l1 > 0.0 && s.eta > 1.0 / problem.l1 {
            return Err(Error::Domain(format!(
                "eta = {} exceeds 1/L1 = {}",
                s.eta,
                1.0 / problem.l1
            )));
        }
        let f_t = problem.value(xs[t]);
        let f_next = problem.value(xs[t + 1]);
        let g = problem.grad(xs[t]);
        let gn = linalg::norm(&g);
        let eps = linalg::dist(&s.m, &g);
        let bound = f_t - s.eta * gn
            + 2.0 * s.eta * eps
            + 0.5 * (problem.l0 + problem.l1 * gn) * s.eta * s.eta;
        worst = worst.max((f_next - bound) / (1.0 + f_t.abs()));
    }
    Ok(worst.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{make_additive_oracle, NoiseKind, NoiseSpec, Stream};
    use crate::optim::{run_optimizer, RunSpec, Schedule};
    use crate::problems::make_quadratic;

    fn run(scale: f64, x1: Vec<f64>, beta: f64, eta: f64) -> (OptimizerTrace, Problem) {
        let p = make_quadratic(2, &[0.5, 1.0], &[0.0, 0.0])
            .unwrap()
            .with_x1(x1)
            .unwrap();
        let n = NoiseSpec::new(NoiseKind::SymmetricPareto, 1.5, scale).unwrap();
        let o = make_additive_oracle(p.clone(), n, 1.2, 1).unwrap();
        let spec = RunSpec {
            method: Method::Nsgdm,
            schedule: Schedule::manual(beta, eta, 1).unwrap(),
            horizon: 200,
            clip_tau: None,
            record_steps: true,
        };
        (run_optimizer(&spec, &o, &mut Stream::new(8)).unwrap(), p)
    }

    #[test]
    fn stationary_noiseless_start() {
        let (tr, p) = run(0.0, vec![0.0, 0.0], 0.0, 0.1);
        assert_eq!(descent_residual(&tr, &p).unwrap(), 0.0);
        assert!(tr.grad_norms.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn noiseless_normalized_gd_has_margin() {
        let (tr, p) = run(0.0, vec![3.0, -4.0], 0.0, 0.05);
        let xs = tr.iterates().unwrap();
        // with eps_t = 0 the slack is eta |grad| - (actual decrease) >= eta |grad| - eta^2 L0 / 2
        let g = p.grad(xs[0]);
        let gn = linalg::norm(&g);
        assert!(gn > 0.05 * p.l0 / 2.0);
        let decrease = p.value(xs[0]) - p.value(xs[1]);
        assert!(decrease >= 0.05 * gn - 0.05 * 0.05 * p.l0 / 2.0 - 1e-15);
        assert_eq!(descent_residual(&tr, &p).unwrap(), 0.0);
    }

    #[test]
    fn noisy_run() {
        let (tr, p) = run(2.0, vec![3.0, -4.0], 0.9, 0.05);
        assert!(descent_residual(&tr, &p).unwrap() <= 1e-9);
    }

    #[test]
    fn understated_smoothness_is_caught() {
        let (tr, mut p) = run(0.0, vec![3.0, -4.0], 0.0, 0.5);
        assert_eq!(descent_residual(&tr, &p).unwrap(), 0.0);
        p.l0 = -50.0;
        assert!(descent_residual(&tr, &p).unwrap() > 0.0);
    }

    #[test]
    fn stepsize_above_inverse_l1_rejected() {
        let (tr, mut p) = run(0.0, vec![3.0, -4.0], 0.0, 0.5);
        p.l1 = 4.0;
        assert!(matches!(descent_residual(&tr, &p), Err(Error::Domain(_))));
    }
}
