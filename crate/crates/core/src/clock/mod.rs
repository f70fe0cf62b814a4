//! Ticking-clock specifications, their generators and example clocks.

mod examples;
mod generators;
mod random;

pub use examples::{
    ladder_clock, quasi_ideal_clock, thermodynamic_clock, QuasiIdealParams, QuasiIdealVariant, ThermoParams,
};
pub use generators::{
    build_generators, build_register_shift, canonicalize_jumps, clockwork_generators, ClockworkGenerators,
    GeneratorBundle, JUMP_EIGENVALUE_CUTOFF,
};
pub(crate) use generators::full_generator;
pub use random::random_clock;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, STATE_HERMITIAN_TOL};

/// Register size used by the example-clock factories.
pub const DEFAULT_N_TICKS: usize = 4;

/// Whether a full register wraps around or stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegisterMode {
    Periodic,
    CutOff,
}

impl RegisterMode {
    /// Coefficient of the wrap-around term `|0><N_T|` in the register shift.
    pub fn wrap(self) -> f64 {
        match self {
            RegisterMode::Periodic => 1.0,
            RegisterMode::CutOff => 0.0,
        }
    }

    /// Whether tick operators act from register state `k`.
    pub fn ticks_from(self, k: usize, n_ticks: usize) -> bool {
        match self {
            RegisterMode::Periodic => true,
            RegisterMode::CutOff => k != n_ticks,
        }
    }

    /// Register state reached by one tick from `k`.
    pub fn next(self, k: usize, n_ticks: usize) -> usize {
        (k + 1) % (n_ticks + 1)
    }

    /// Layout distance between register states; metadata only.
    pub fn register_distance(self, l: usize, m: usize, n_ticks: usize) -> usize {
        let direct = l.abs_diff(m);
        match self {
            RegisterMode::CutOff => direct,
            RegisterMode::Periodic => direct.min(n_ticks + 1 - direct),
        }
    }
}

/// Raw ingredients of a clock, validated by [`ClockParts::validate`].
#[derive(Debug, Clone)]
pub struct ClockParts {
    pub n_ticks: usize,
    pub mode: RegisterMode,
    pub h: ComplexMatrix,
    pub l_ops: Vec<ComplexMatrix>,
    pub j_ops: Vec<ComplexMatrix>,
    pub rho_c0: DensityMatrix,
    pub k0: usize,
}

/// A validated ticking clock: Hamiltonian `H`, non-tick operators `L_j`,
/// tick operators `J_j`, register of `N_T + 1` states and initial state
/// `ρ_C0 ⊗ |k0><k0|`.
#[derive(Debug, Clone)]
pub struct ClockSpec {
    d: usize,
    n_ticks: usize,
    mode: RegisterMode,
    h: ComplexMatrix,
    l_ops: Vec<ComplexMatrix>,
    j_ops: Vec<ComplexMatrix>,
    rho_c0: DensityMatrix,
    k0: usize,
}

impl ClockParts {
    pub fn validate(self) -> Result<ClockSpec> {
        let spec = self.validate_allow_silent()?;
        if spec.j_ops.iter().all(ComplexMatrix::is_zero) {
            return Err(Error::NeverTicks);
        }
        Ok(spec)
    }

    /// Like [`validate`](Self::validate) but accepts clocks without a
    /// nonzero tick operator. Only useful for degenerate test fixtures.
    pub fn validate_allow_silent(self) -> Result<ClockSpec> {
        let d = self.h.ensure_square("Hamiltonian")?;
        self.h.ensure_finite()?;
        let defect = self.h.hermiticity_defect();
        if defect > STATE_HERMITIAN_TOL {
            return Err(Error::Validation(format!("H is not Hermitian (defect {defect:e})")));
        }
        if self.n_ticks == 0 {
            return Err(Error::Validation("register needs N_T >= 1".into()));
        }
        if self.l_ops.is_empty() && self.j_ops.is_empty() {
            return Err(Error::Validation("no Lindblad operators given".into()));
        }
        for (name, ops) in [("L", &self.l_ops), ("J", &self.j_ops)] {
            for (j, op) in ops.iter().enumerate() {
                if op.rows() != d || op.cols() != d {
                    return Err(Error::Shape(format!(
                        "{name}_{j} is {}x{}, expected {d}x{d}",
                        op.rows(),
                        op.cols()
                    )));
                }
                op.ensure_finite()?;
            }
        }
        if self.rho_c0.dim() != d {
            return Err(Error::Shape(format!(
                "initial state has dimension {}, expected {d}",
                self.rho_c0.dim()
            )));
        }
        if self.k0 > self.n_ticks {
            return Err(Error::Domain(format!(
                "initial register index {} exceeds N_T = {}",
                self.k0, self.n_ticks
            )));
        }
        Ok(ClockSpec {
            d,
            n_ticks: self.n_ticks,
            mode: self.mode,
            h: self.h,
            l_ops: self.l_ops,
            j_ops: self.j_ops,
            rho_c0: self.rho_c0,
            k0: self.k0,
        })
    }
}

impl ClockSpec {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_ticks(&self) -> usize {
        self.n_ticks
    }

    pub fn register_dim(&self) -> usize {
        self.n_ticks + 1
    }

    pub fn joint_dim(&self) -> usize {
        self.d * (self.n_ticks + 1)
    }

    pub fn mode(&self) -> RegisterMode {
        self.mode
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn l_ops(&self) -> &[ComplexMatrix] {
        &self.l_ops
    }

    pub fn j_ops(&self) -> &[ComplexMatrix] {
        &self.j_ops
    }

    pub fn rho_c0(&self) -> &DensityMatrix {
        &self.rho_c0
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn into_parts(self) -> ClockParts {
        ClockParts {
            n_ticks: self.n_ticks,
            mode: self.mode,
            h: self.h,
            l_ops: self.l_ops,
            j_ops: self.j_ops,
            rho_c0: self.rho_c0,
            k0: self.k0,
        }
    }

    pub fn to_parts(&self) -> ClockParts {
        self.clone().into_parts()
    }

    /// Same clock with a different register.
    pub fn with_register(self, n_ticks: usize, mode: RegisterMode) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.n_ticks = n_ticks;
        parts.mode = mode;
        parts.k0 = parts.k0.min(n_ticks);
        parts.validate_allow_silent()
    }

    pub fn with_k0(self, k0: usize) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.k0 = k0;
        parts.validate_allow_silent()
    }

    pub fn with_initial_state(self, rho_c0: DensityMatrix) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.rho_c0 = rho_c0;
        parts.validate_allow_silent()
    }

    /// `Σ_j J_j† J_j`, the instantaneous tick-rate observable.
    pub fn tick_rate_operator(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.d, self.d);
        for j in &self.j_ops {
            acc += &(&j.adjoint() * j);
        }
        acc
    }
}
