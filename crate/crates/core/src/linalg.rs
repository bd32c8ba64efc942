//! Dense factorizations with a 1-norm condition estimate.
//!
//! Systems here are small (tens of unknowns), so the estimate uses the
//! explicit inverse: `cond₁(A) = ‖A‖₁ ‖A⁻¹‖₁`.

use nalgebra::{DMatrix, DVector};

/// Largest condition estimate accepted before a system is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Factorized system `A`, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct Factorized {
    inverse: DMatrix<f64>,
    pub condition: f64,
}

impl Factorized {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        &self.inverse * b
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }
}

fn finish(a: &DMatrix<f64>, inverse: Option<DMatrix<f64>>) -> Result<Factorized, f64> {
    match inverse {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => {
            let condition = norm1(a) * norm1(&inv);
            if condition.is_finite() && condition <= MAX_CONDITION {
                Ok(Factorized { inverse: inv, condition })
            } else {
                Err(condition)
            }
        }
        _ => Err(f64::INFINITY),
    }
}

/// LU with partial pivoting, for symmetric but possibly indefinite matrices
/// such as the force-density matrix with mixed-sign densities. `Err` carries
/// the condition estimate (infinite when the factorization broke down).
pub fn factor_general(a: &DMatrix<f64>) -> Result<Factorized, f64> {
    if a.nrows() == 0 {
        return Ok(Factorized {
            inverse: DMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    finish(a, a.clone().lu().try_inverse())
}

/// Cholesky; fails unless `a` is numerically positive definite.
pub fn factor_spd(a: &DMatrix<f64>) -> Result<Factorized, f64> {
    if a.nrows() == 0 {
        return Ok(Factorized {
            inverse: DMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    finish(a, a.clone().cholesky().map(|c| c.inverse()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_condition() {
        let f = factor_spd(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(f.condition, 1.0);
    }

    #[test]
    fn diagonal_condition() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-3]));
        let f = factor_general(&a).unwrap();
        assert!((f.condition - 1e3).abs() < 1e-9);
        let x = f.solve(&DVector::from_vec(vec![2.0, 1.0]));
        assert!((x[1] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn singular_and_ill_conditioned_rejected() {
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!(factor_general(&z).is_err());
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-13]));
        assert!(factor_general(&a).is_err());
        let indefinite = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(factor_spd(&indefinite).is_err());
        assert!(factor_general(&indefinite).is_ok());
    }
}
