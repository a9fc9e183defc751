use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{Method, OptimizerTrace, StepRecord};
use crate::problems::Problem;

pub(crate) fn recorded_steps(trace: &OptimizerTrace) -> Result<&[StepRecord]> {
    let steps = trace
        .steps
        .as_deref()
        .ok_or_else(|| Error::IncompleteTrace("steps were not recorded".into()))?;
    if steps.is_empty() {
        return Err(Error::IncompleteTrace("no steps".into()));
    }
    if trace.diverged() {
        return Err(Error::IncompleteTrace("run diverged".into()));
    }
    Ok(steps)
}

/// Largest deviation, relative to `1 + |m_t|`, between the momentum error
/// `eps_t = m_t - grad F(x_t)` and its unrolled form
///
/// `beta_{1:t} eps_0 + sum_s beta_{s:t} D_s + sum_s (1 - beta_s) beta_{s+1:t} xi_s`
///
/// with `eps_0 = g_1 - grad F(x_1)`, `D_1 = 0`,
/// `D_s = grad F(x_{s-1}) - grad F(x_s)` and `xi_s = g_s - grad F(x_s)`.
/// The sums are evaluated term by term (not through the recursion).
pub fn decomposition_residual(trace: &OptimizerTrace, problem: &Problem) -> Result<f64> {
    if !matches!(trace.method, Method::Nsgdm | Method::Ssgdm) {
        return Err(Error::param(
            "method",
            "decomposition needs a momentum method",
        ));
    }
    let steps = recorded_steps(trace)?;
    let grads: Vec<Vec<f64>> = steps.iter().map(|s| problem.grad(&s.x)).collect();
    let d = grads[0].len();
    let eps0 = linalg::sub(&steps[0].g, &grads[0]);
    let noise: Vec<Vec<f64>> = steps
        .iter()
        .zip(&grads)
        .map(|(s, g)| linalg::sub(&s.g, g))
        .collect();
    let drift: Vec<Vec<f64>> = (0..steps.len())
        .map(|s| {
            if s == 0 {
                vec![0.0; d]
            } else {
                linalg::sub(&grads[s - 1], &grads[s])
            }
        })
        .collect();

    let mut worst = 0.0f64;
    for t in 0..steps.len() {
        let mut rhs = vec![0.0; d];
        // suffix = beta_{s+1:t}
        let mut suffix = 1.0;
        for s in (0..=t).rev() {
            let beta_s = steps[s].beta;
            linalg::axpy((1.0 - beta_s) * suffix, &noise[s], &mut rhs);
            linalg::axpy(beta_s * suffix, &drift[s], &mut rhs);
            suffix *= beta_s;
        }
        linalg::axpy(suffix, &eps0, &mut rhs);
        let eps_t = linalg::sub(&steps[t].m, &grads[t]);
        let r = linalg::dist(&eps_t, &rhs) / (1.0 + linalg::norm(&steps[t].m));
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{make_additive_oracle, NoiseKind, NoiseSpec, Stream};
    use crate::optim::{run_optimizer, RunSpec, Schedule};
    use crate::problems::make_quadratic;

    fn trace(beta: f64, horizon: usize) -> (OptimizerTrace, Problem) {
        let p = make_quadratic(3, &[0.2, 0.6, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let n = NoiseSpec::new(NoiseKind::SymmetricPareto, 1.6, 1.0).unwrap();
        let o = make_additive_oracle(p.clone(), n, 1.5, 1).unwrap();
        let spec = RunSpec {
            method: Method::Nsgdm,
            schedule: Schedule::manual(beta, 0.05, 1).unwrap(),
            horizon,
            clip_tau: None,
            record_steps: true,
        };
        (run_optimizer(&spec, &o, &mut Stream::new(4)).unwrap(), p)
    }

    #[test]
    fn base_case() {
        let (tr, p) = trace(0.7, 1);
        assert!(decomposition_residual(&tr, &p).unwrap() <= 1e-12);
    }

    #[test]
    fn zero_beta_error_is_the_noise() {
        let (tr, p) = trace(0.0, 30);
        let steps = tr.steps.as_ref().unwrap();
        for s in steps {
            let g = p.grad(&s.x);
            assert_eq!(linalg::sub(&s.m, &g), linalg::sub(&s.g, &g));
        }
        assert!(decomposition_residual(&tr, &p).unwrap() <= 1e-12);
    }

    #[test]
    fn identity_holds_over_a_run() {
        for beta in [0.5, 0.9, 0.99] {
            let (tr, p) = trace(beta, 100);
            let r = decomposition_residual(&tr, &p).unwrap();
            assert!(r <= 1e-8, "beta {beta}: {r}");
        }
    }

    #[test]
    fn per_step_betas() {
        let (mut tr, p) = trace(0.5, 40);
        // recompute momentum with varying betas and splice them into the trace
        let steps = tr.steps.as_mut().unwrap();
        let mut m_prev = steps[0].g.clone();
        for (i, s) in steps.iter_mut().enumerate() {
            s.beta = 0.3 + 0.6 * ((i as f64) * 0.7).sin().abs();
            s.m = m_prev
                .iter()
                .zip(&s.g)
                .map(|(a, b)| s.beta * a + (1.0 - s.beta) * b)
                .collect();
            m_prev = s.m.clone();
        }
        assert!(decomposition_residual(&tr, &p).unwrap() <= 1e-8);
        // a corrupted momentum is detected
        tr.steps.as_mut().unwrap()[10].m[0] += 1.0;
        assert!(decomposition_residual(&tr, &p).unwrap() > 1e-3);
    }

    #[test]
    fn requires_recorded_steps() {
        let (mut tr, p) = trace(0.5, 5);
        tr.steps = None;
        assert!(matches!(
            decomposition_residual(&tr, &p),
            Err(Error::IncompleteTrace(_))
        ));
    }
}
