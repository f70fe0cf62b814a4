//! Hermitian eigendecomposition and positivity diagnostics.

use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Hermiticity tolerance accepted by [`is_psd`].
pub const PSD_HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Eigendecomposition of `(m + m†) / 2`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = m.ensure_square("eigendecomposition input")?;
    m.ensure_finite()?;
    let h = m.hermitian_part();
    let dm = DMatrix::<C64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Outcome of a positivity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive semidefiniteness up to `tol` on the smallest eigenvalue.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<PsdReport> {
    m.ensure_square("is_psd input")?;
    let defect = m.hermiticity_defect();
    if defect > PSD_HERMITIAN_TOL {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let eig = hermitian_eigen(m)?;
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    Ok(PsdReport {
        psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    })
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigen(m)?.values.iter().map(|v| v.abs()).sum())
}
