//! Dense vector helpers and spectral estimation by power iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Stopping rule for power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Absolute tolerance on successive Rayleigh quotients, scaled by `max(1, |rho|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator given only
/// through its action `apply`.
///
/// Starts from the normalized all-ones vector, so the estimate is deterministic.
/// Returns 0 when the operator annihilates the iterate.
pub fn power_iteration<F>(dim: usize, mut apply: F, opts: PowerIterationOptions) -> Result<f64>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    if dim == 0 {
        return Err(Error::contract(
            "power iteration on a zero-dimensional operator",
        ));
    }
    let mut v = Vector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut rho = f64::NAN;
    for _ in 0..opts.max_iterations {
        let w = apply(&v)?;
        let next_rho = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if (next_rho - rho).abs() <= opts.tolerance * next_rho.abs().max(1.0) {
            return Ok(next_rho);
        }
        rho = next_rho;
        v = w / norm;
    }
    Err(Error::Estimation {
        iterations: opts.max_iterations,
        last_rayleigh: rho,
    })
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration on a Cholesky factorization.
pub fn smallest_eigenvalue(m: &Matrix, opts: PowerIterationOptions) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::contract("smallest_eigenvalue needs a square matrix"));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::contract("matrix is not positive definite"))?;
    let inv_top = power_iteration(m.nrows(), |v| Ok(chol.solve(v)), opts)?;
    if inv_top <= 0.0 {
        return Err(Error::contract("matrix is not positive definite"));
    }
    Ok(1.0 / inv_top)
}

/// `∞`-norm of a vector.
pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn check_len(v: &Vector, d: usize, what: &str) -> Result<()> {
    if v.len() != d {
        return Err(Error::contract(format!(
            "{what}: expected a vector of length {d}, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::contract(format!(
            "{what}: vector has non-finite entries"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_top_eigenvalue() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 5.0, 2.0]));
        let top = power_iteration(3, |v| Ok(&m * v), Default::default()).unwrap();
        assert!((top - 5.0).abs() < 1e-8);
    }

    #[test]
    fn zero_operator() {
        let top = power_iteration(4, |v| Ok(v * 0.0), Default::default()).unwrap();
        assert_eq!(top, 0.0);
    }

    #[test]
    fn cap_reports_last_quotient() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.999_999]));
        let opts = PowerIterationOptions {
            tolerance: 1e-16,
            max_iterations: 3,
        };
        let err = power_iteration(2, |v| Ok(&m * v), opts).unwrap_err();
        match err {
            Error::Estimation {
                iterations,
                last_rayleigh,
            } => {
                assert_eq!(iterations, 3);
                assert!(last_rayleigh > 0.99 && last_rayleigh < 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_iteration_finds_smallest() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 0.5, 9.0]));
        let low = smallest_eigenvalue(&m, Default::default()).unwrap();
        assert!((low - 0.5).abs() < 1e-8);
    }
}
