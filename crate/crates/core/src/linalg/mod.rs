//! Dense complex linear algebra: matrices, tensor structure, exponentials,
//! superoperators in column-stacking convention and positivity checks.

mod eigen;
mod expm;
mod matrix;
mod sparse;
mod state;
mod superop;

pub use eigen::{hermitian_eigen, is_psd, trace_norm_hermitian, HermitianEigen, PsdReport, PSD_HERMITIAN_TOL};
pub use expm::{exp_scaled, matrix_exp, DEFAULT_EXP_TOL};
pub use matrix::{
    devectorize, kron, kron_capped, max_dim, partial_trace, vectorize, ComplexMatrix, C64, DEFAULT_MAX_DIM, I,
    MAX_DIM_ENV, ONE, ZERO,
};
pub use state::{
    random_ginibre, random_hermitian, DensityMatrix, EVOLVED_MIN_EIGENVALUE, STATE_HERMITIAN_TOL, STATE_MIN_EIGENVALUE,
    STATE_TRACE_TOL,
};
pub(crate) use sparse::LinearOp;
pub use superop::{choi_input_marginal, choi_matrix, lindblad_superop, Superoperator, HAMILTONIAN_HERMITIAN_TOL};
