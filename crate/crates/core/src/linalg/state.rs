use rand::Rng;

use super::eigen::hermitian_eigen;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const STATE_HERMITIAN_TOL: f64 = 1e-12;
pub const STATE_TRACE_TOL: f64 = 1e-12;
pub const STATE_MIN_EIGENVALUE: f64 = -1e-10;

/// Evolved states may drift further than freshly built ones.
pub const EVOLVED_MIN_EIGENVALUE: f64 = -1e-9;

/// Positive semidefinite operator of trace one, or at most one when built
/// with [`DensityMatrix::subnormalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let tr = validate_common(&mat, STATE_MIN_EIGENVALUE)?;
        if (tr - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::Validation(format!("state trace {tr} differs from 1")));
        }
        Ok(Self { mat })
    }

    /// Trace constrained to `[0, 1 + 1e-12]`.
    pub fn subnormalized(mat: ComplexMatrix) -> Result<Self> {
        Self::subnormalized_with(mat, STATE_MIN_EIGENVALUE)
    }

    pub(crate) fn subnormalized_with(mat: ComplexMatrix, min_eig: f64) -> Result<Self> {
        let tr = validate_common(&mat, min_eig)?;
        if !(-STATE_TRACE_TOL..=1.0 + STATE_TRACE_TOL).contains(&tr) {
            return Err(Error::Validation(format!("subnormalized trace {tr} outside [0, 1]")));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix already known to be a valid state.
    pub(crate) fn trusted(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("pure state needs a nonzero finite vector".into()));
        }
        let v: Vec<C64> = amplitudes.iter().map(|a| a / norm).collect();
        Self::new(ComplexMatrix::outer(&v, &v))
    }

    /// `|i><i|` in dimension `n`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Domain(format!("basis index {i} >= dimension {n}")));
        }
        Ok(Self {
            mat: ComplexMatrix::ket_bra(n, i, i),
        })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    /// Random full-rank state `G G† / tr(G G†)` from a complex Ginibre matrix.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = random_ginibre(n, rng);
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        Self {
            mat: m.scale_real(1.0 / tr).hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
}

fn validate_common(mat: &ComplexMatrix, min_eig: f64) -> Result<f64> {
    mat.ensure_square("density matrix")?;
    mat.ensure_finite()?;
    let defect = mat.hermiticity_defect();
    if defect > STATE_HERMITIAN_TOL {
        return Err(Error::Validation(format!("state is not Hermitian (defect {defect:e})")));
    }
    let eig = hermitian_eigen(mat)?;
    let lowest = eig.values.first().copied().unwrap_or(0.0);
    if lowest < min_eig {
        return Err(Error::Validation(format!("state has eigenvalue {lowest:e}")));
    }
    Ok(mat.trace().re)
}

/// Matrix with iid standard complex normal entries.
pub fn random_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(std_normal(rng), std_normal(rng)))
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    random_ginibre(n, rng).hermitian_part()
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; the second variate is discarded to keep draws stateless.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_wrong_trace_and_negativity() {
        assert!(DensityMatrix::new(ComplexMatrix::real_diag(&[0.5, 0.4])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::real_diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::subnormalized(ComplexMatrix::real_diag(&[0.5, 0.4])).is_ok());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..5 {
            let rho = DensityMatrix::random(n, &mut rng);
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn pure_state_normalizes() {
        let rho = DensityMatrix::pure(&[C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.matrix()[(0, 1)] - C64::new(0.0, -0.48)).norm() < 1e-15);
    }
}
