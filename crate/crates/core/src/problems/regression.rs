use super::{Objective, Problem};
use crate::error::{Error, Result};

/// One-dimensional least squares `F(x) = 1/2 E[(a x - b)^2]` with
/// `a ~ Bernoulli(q)` and `b = a x* + omega`. Up to an additive constant this
/// is `q/2 (x - x*)^2`; the constant is dropped so `F* = 0`.
///
/// `sigma` and `p` only matter for the paired oracle, see
/// [`regression_noise_levels`]. They are validated here so that an invalid
/// pairing fails early.
pub fn make_regression(q: f64, x_star: f64, sigma: f64, p: f64) -> Result<Problem> {
    validate(q, sigma, p)?;
    Ok(Problem {
        name: "regression".into(),
        objective: Objective::Regression { q, x_star },
        l0: q,
        l1: 0.0,
        f_star: Some(0.0),
        x1: vec![0.0],
    })
}

/// `(sigma0, sigma1)` with `sigma0^p = 2^{p-1} q sigma^p` and
/// `sigma1^p = 1 - q + 2^{p-1} q^{1-p} (1-q)^p`.
pub fn regression_noise_levels(q: f64, sigma: f64, p: f64) -> Result<(f64, f64)> {
    validate(q, sigma, p)?;
    let c = 2f64.powf(p - 1.0);
    let s0p = c * q * sigma.powf(p);
    let s1p = 1.0 - q + c * q.powf(1.0 - p) * (1.0 - q).powf(p);
    Ok((s0p.powf(1.0 / p), s1p.max(0.0).powf(1.0 / p)))
}

fn validate(q: f64, sigma: f64, p: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", format!("must lie in (0, 1), got {q}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", format!("must lie in (1, 2], got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_vanishes_at_x_star() {
        let pr = make_regression(0.3, 1.5, 1.0, 1.5).unwrap();
        assert_eq!(pr.grad(&[1.5]), vec![0.0]);
        assert!((pr.grad(&[2.5])[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn finite_variance_levels() {
        let (s0, s1) = regression_noise_levels(0.5, 1.0, 2.0).unwrap();
        assert!((s0 - 1.0).abs() < 1e-12);
        assert!((s1 - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma1_vanishes_as_q_tends_to_one() {
        let (_, s1) = regression_noise_levels(1.0 - 1e-9, 1.0, 1.5).unwrap();
        assert!(s1 < 1e-5, "sigma1 = {s1}");
    }

    #[test]
    fn rejects_q_outside_open_unit_interval() {
        assert!(make_regression(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(make_regression(1.0, 0.0, 1.0, 2.0).is_err());
        assert!(make_regression(0.5, 0.0, 1.0, 2.5).is_err());
    }
}
