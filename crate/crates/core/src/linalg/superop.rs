use super::eigen::hermitian_eigen;
use super::expm::exp_scaled;
use super::matrix::{devectorize, kron_unchecked, max_dim, vectorize, ComplexMatrix, C64, I};
use crate::error::{Error, Result};

/// Hermiticity tolerance for Hamiltonians handed to [`Superoperator::lindblad`].
pub const HAMILTONIAN_HERMITIAN_TOL: f64 = 1e-12;

/// Linear map on `n x n` operators, stored as an `n² x n²` matrix acting on
/// column-stacked vectors: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    mat: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, mat: ComplexMatrix) -> Result<Self> {
        let n2 = dim * dim;
        if mat.rows() != n2 || mat.cols() != n2 {
            return Err(Error::Shape(format!(
                "superoperator on {dim}x{dim} operators needs a {n2}x{n2} matrix, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(Self { dim, mat })
    }

    fn check_size(dim: usize) -> Result<()> {
        let n2 = dim.checked_mul(dim).unwrap_or(usize::MAX);
        if n2 > max_dim() {
            return Err(Error::Size {
                rows: n2,
                cols: n2,
                max: max_dim(),
            });
        }
        Ok(())
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            mat: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: ComplexMatrix::identity(dim * dim),
        }
    }

    /// `X ↦ a X b`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        let n = a.ensure_square("left factor")?;
        if b.rows() != n || b.cols() != n {
            return Err(Error::Shape("sandwich factors differ in dimension".into()));
        }
        Self::check_size(n)?;
        Ok(Self {
            dim: n,
            mat: kron_unchecked(&b.transpose(), a),
        })
    }

    /// `X ↦ Σ_k K_k X K_k†`.
    pub fn kraus(dim: usize, ops: &[ComplexMatrix]) -> Result<Self> {
        Self::check_size(dim)?;
        let mut s = Self::zero(dim);
        for k in ops {
            check_operator(k, dim, "Kraus operator")?;
            s.mat += &kron_unchecked(&k.conj(), k);
        }
        Ok(s)
    }

    /// `X ↦ -i[h, X] + Σ_j (D_j X D_j† − ½{D_j†D_j, X})`.
    pub fn lindblad(h: &ComplexMatrix, dissipators: &[ComplexMatrix]) -> Result<Self> {
        let n = h.ensure_square("Hamiltonian")?;
        h.ensure_finite()?;
        let defect = h.hermiticity_defect();
        if defect > HAMILTONIAN_HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "Hamiltonian is not Hermitian (defect {defect:e})"
            )));
        }
        Self::check_size(n)?;
        let id = ComplexMatrix::identity(n);
        // -i (I ⊗ H − Hᵀ ⊗ I)
        let mut mat = &kron_unchecked(&id, h) - &kron_unchecked(&h.transpose(), &id);
        mat = mat.scale(-I);
        for d in dissipators {
            check_operator(d, n, "dissipator")?;
            let dd = &d.adjoint() * d;
            mat += &kron_unchecked(&d.conj(), d);
            mat -= &kron_unchecked(&id, &dd).scale_real(0.5);
            mat -= &kron_unchecked(&dd.transpose(), &id).scale_real(0.5);
        }
        Ok(Self { dim: n, mat })
    }

    /// `X ↦ -i (h_eff X − X h_eff†)` for a possibly non-Hermitian `h_eff`.
    pub fn effective_hamiltonian(h_eff: &ComplexMatrix) -> Result<Self> {
        let n = h_eff.ensure_square("effective Hamiltonian")?;
        Self::check_size(n)?;
        let id = ComplexMatrix::identity(n);
        let left = kron_unchecked(&id, h_eff);
        let right = kron_unchecked(&h_eff.adjoint().transpose(), &id);
        Ok(Self {
            dim: n,
            mat: (&left - &right).scale(-I),
        })
    }

    /// Builds the matrix of an arbitrary linear map by probing `|i><j|`.
    pub fn from_map(dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        Self::check_size(dim)?;
        let n2 = dim * dim;
        let mut mat = ComplexMatrix::zeros(n2, n2);
        for j in 0..dim {
            for i in 0..dim {
                let col = i + j * dim;
                let image = vectorize(&f(&ComplexMatrix::ket_bra(dim, i, j)));
                for (row, v) in image.into_iter().enumerate() {
                    mat[(row, col)] = v;
                }
            }
        }
        Ok(Self { dim, mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.dim, "operator dimension mismatch");
        devectorize(&self.mat.matvec(&vectorize(x)), self.dim)
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        self.mat.matvec(v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            mat: &self.mat * &other.mat,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.scale_real(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            mat: &self.mat - &other.mat,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// `exp(t · self)` as a superoperator.
    pub fn exp(&self, t: f64, tol: f64) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            mat: exp_scaled(&self.mat, t, tol)?,
        })
    }

    /// Largest entry of `vec(I)ᵀ · mat`; zero for trace-annihilating generators.
    pub fn trace_functional_defect(&self) -> f64 {
        let n = self.dim;
        let n2 = n * n;
        (0..n2)
            .map(|col| {
                (0..n)
                    .map(|i| self.mat[(i + i * n, col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Choi matrix `Σ_ij |i><j| ⊗ S(|i><j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut c = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let col = i + j * n;
                for a in 0..n {
                    for b in 0..n {
                        c[(i * n + a, j * n + b)] = self.mat[(a + b * n, col)];
                    }
                }
            }
        }
        c
    }

    /// Kraus operators from the eigendecomposition of the Choi matrix,
    /// keeping eigenvalues above `cutoff`, each scaled by √eigenvalue.
    pub fn canonical_kraus(&self, cutoff: f64) -> Result<Vec<ComplexMatrix>> {
        let n = self.dim;
        let eig = hermitian_eigen(&self.choi())?;
        let mut ops = Vec::new();
        for (k, &lambda) in eig.values.iter().enumerate().rev() {
            if lambda <= cutoff {
                continue;
            }
            let s = lambda.sqrt();
            let v = eig.vector(k);
            ops.push(ComplexMatrix::from_fn(n, n, |a, i| v[i * n + a] * s));
        }
        Ok(ops)
    }
}

fn check_operator(m: &ComplexMatrix, n: usize, what: &str) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::Shape(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_finite()
}

/// Choi matrix of a superoperator.
pub fn choi_matrix(s: &Superoperator) -> ComplexMatrix {
    s.choi()
}

/// Lindblad generator `−i[h,·] + Σ_j D_j·D_j† − ½{D_j†D_j,·}`.
pub fn lindblad_superop(h: &ComplexMatrix, dissipators: &[ComplexMatrix]) -> Result<Superoperator> {
    Superoperator::lindblad(h, dissipators)
}

/// Partial trace of a Choi matrix over its output factor; the identity for
/// trace-preserving maps.
pub fn choi_input_marginal(choi: &ComplexMatrix, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|a| choi[(i * n + a, j * n + a)]).sum())
}
