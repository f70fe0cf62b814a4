//! Matrix exponential by scaling and squaring with a truncated Taylor series.

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Default relative tolerance of [`matrix_exp`].
pub const DEFAULT_EXP_TOL: f64 = 1e-12;

/// Scaled matrices satisfy `‖m / 2^s‖₁ <= SCALED_NORM`.
const SCALED_NORM: f64 = 0.5;

const MAX_TERMS: usize = 60;

/// `exp(m)` to relative Frobenius error `tol`.
pub fn matrix_exp(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let n = m.ensure_square("matrix_exp input")?;
    m.ensure_finite()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }

    let norm = m.norm_one();
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.scale_real(0.5f64.powi(squarings));

    // Each squaring at most doubles the relative error of the scaled factor.
    let term_tol = (tol * 0.5f64.powi(squarings)).max(1e-18);
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = term.matmul(&scaled).scale_real(1.0 / k as f64);
        sum += &term;
        if term.frobenius_norm() <= term_tol * sum.frobenius_norm() {
            break;
        }
    }

    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum.ensure_finite()
        .map_err(|_| Error::Numeric("matrix exponential overflowed".into()))?;
    Ok(sum)
}

/// `exp(t · m)`; exact identity at `t = 0`.
pub fn exp_scaled(m: &ComplexMatrix, t: f64, tol: f64) -> Result<ComplexMatrix> {
    if t == 0.0 {
        let n = m.ensure_square("matrix_exp input")?;
        return Ok(ComplexMatrix::identity(n));
    }
    matrix_exp(&m.scale_real(t), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::C64;

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp(&ComplexMatrix::zeros(3, 3), DEFAULT_EXP_TOL).unwrap();
        assert_eq!(e, ComplexMatrix::identity(3));
    }

    #[test]
    fn exp_of_nilpotent_truncates() {
        let n = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let e = matrix_exp(&n, DEFAULT_EXP_TOL).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(e.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        for &(a, b) in &[(0.3, -2.0), (5.0, -40.0), (12.5, 0.0)] {
            let e = matrix_exp(&ComplexMatrix::real_diag(&[a, b]), DEFAULT_EXP_TOL).unwrap();
            let expect = ComplexMatrix::real_diag(&[f64::exp(a), f64::exp(b)]);
            assert!(e.max_abs_diff(&expect) <= 1e-12 * f64::exp(a).max(1.0));
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        // exp([[0, -θ], [θ, 0]]) is a rotation by θ.
        let theta = 7.3;
        let g = ComplexMatrix::from_real_rows(&[&[0.0, -theta], &[theta, 0.0]]).unwrap();
        let e = matrix_exp(&g, DEFAULT_EXP_TOL).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[theta.cos(), -theta.sin()],
            &[theta.sin(), theta.cos()],
        ])
        .unwrap();
        assert!(e.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn exp_rejects_non_finite() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.as_mut_slice()[1] = C64::new(f64::INFINITY, 0.0);
        // from_vec would reject this, so build through the mutable slice.
        assert!(matches!(matrix_exp(&m, 1e-12), Err(Error::Numeric(_))));
    }
}
