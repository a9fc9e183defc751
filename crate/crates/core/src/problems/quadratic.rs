use super::{Objective, Problem};
use crate::error::{Error, Result};

/// Separable quadratic `1/2 sum_i lambda_i (x_i - x*_i)^2` with `L0 = max lambda_i`,
/// `L1 = 0`, `F* = 0` and `x1 = 0`.
pub fn make_quadratic(dim: usize, eigenvalues: &[f64], x_star: &[f64]) -> Result<Problem> {
    if dim == 0 {
        return Err(Error::param("dim", "must be positive"));
    }
    if eigenvalues.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: eigenvalues.len(),
        });
    }
    if x_star.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x_star.len(),
        });
    }
    if let Some(bad) = eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::param(
            "eigenvalues",
            format!("must be positive and finite, got {bad}"),
        ));
    }
    let l0 = eigenvalues.iter().cloned().fold(0.0, f64::max);
    Ok(Problem {
        name: "quadratic".into(),
        objective: Objective::Quadratic {
            eigenvalues: eigenvalues.to_vec(),
            x_star: x_star.to_vec(),
        },
        l0,
        l1: 0.0,
        f_star: Some(0.0),
        x1: vec![0.0; dim],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::smoothness_residual;

    #[test]
    fn scalar_values() {
        let p = make_quadratic(1, &[2.0], &[0.0]).unwrap();
        assert_eq!(p.value(&[3.0]), 9.0);
        assert_eq!(p.grad(&[3.0]), vec![6.0]);
    }

    #[test]
    fn stationary_at_minimizer() {
        let xs = [1.0, -2.0, 0.5];
        let p = make_quadratic(3, &[0.1, 0.5, 1.0], &xs).unwrap();
        assert_eq!(p.grad(&xs), vec![0.0; 3]);
        assert_eq!(p.value(&xs), 0.0);
        assert_eq!(p.l0, 1.0);
    }

    #[test]
    fn residual_nonpositive_with_max_eigenvalue() {
        let p = make_quadratic(3, &[0.1, 0.5, 1.0], &[0.0; 3]).unwrap();
        let r = smoothness_residual(&p, &[1.0, 2.0, 3.0], &[-1.0, 0.5, 7.0]).unwrap();
        assert!(r <= 0.0);
    }

    #[test]
    fn rejects_bad_eigenvalues() {
        assert!(make_quadratic(2, &[1.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(make_quadratic(2, &[1.0, -1.0], &[0.0, 0.0]).is_err());
        assert!(make_quadratic(2, &[1.0], &[0.0, 0.0]).is_err());
        assert!(make_quadratic(0, &[], &[]).is_err());
    }
}
