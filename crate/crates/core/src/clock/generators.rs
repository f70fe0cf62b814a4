use super::{ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, Superoperator, C64, I};

/// Choi eigenvalues at or below this are dropped by [`canonicalize_jumps`].
pub const JUMP_EIGENVALUE_CUTOFF: f64 = 1e-12;

/// `O_R = Σ_{n<N_T} |n+1><n| + l |0><N_T|` with `l = 1` for a periodic
/// register and `l = 0` for a cut-off one.
pub fn build_register_shift(n_ticks: usize, mode: RegisterMode) -> ComplexMatrix {
    let n = n_ticks + 1;
    let mut o = ComplexMatrix::zeros(n, n);
    for k in 0..n_ticks {
        o[(k + 1, k)] = C64::new(1.0, 0.0);
    }
    o[(0, n_ticks)] = C64::new(mode.wrap(), 0.0);
    o
}

/// Generators acting on the clockwork alone.
#[derive(Debug, Clone)]
pub struct ClockworkGenerators {
    /// `L_C = lindblad(H, L ∪ J)`.
    pub clockwork: Superoperator,
    /// No-tick part `-i(H_eff · − · H_eff†) + Σ L·L†`.
    pub no_tick: Superoperator,
    /// Tick part `Σ J·J†`.
    pub tick: Superoperator,
    /// `H − (i/2) Σ (L†L + J†J)`.
    pub h_eff: ComplexMatrix,
    /// Diagonal block of a full cut-off register: `lindblad(H, L)`.
    pub stalled: Superoperator,
}

/// All generators of a clock, including the joint clockwork-register one.
#[derive(Debug, Clone)]
pub struct GeneratorBundle {
    pub full: Superoperator,
    pub clockwork: Superoperator,
    pub no_tick: Superoperator,
    pub tick: Superoperator,
    pub h_eff: ComplexMatrix,
}

pub fn clockwork_generators(spec: &ClockSpec) -> Result<ClockworkGenerators> {
    let d = spec.d();
    let mut rates = ComplexMatrix::zeros(d, d);
    for op in spec.l_ops().iter().chain(spec.j_ops()) {
        rates += &(&op.adjoint() * op);
    }
    let h_eff = spec.h() - &rates.scale(I * 0.5);

    let l_part = Superoperator::kraus(d, spec.l_ops())?;
    let no_tick = Superoperator::effective_hamiltonian(&h_eff)?.add(&l_part);
    let tick = Superoperator::kraus(d, spec.j_ops())?;

    let all: Vec<ComplexMatrix> = spec.l_ops().iter().chain(spec.j_ops()).cloned().collect();
    let clockwork = Superoperator::lindblad(spec.h(), &all)?;
    let stalled = Superoperator::lindblad(spec.h(), spec.l_ops())?;
    Ok(ClockworkGenerators {
        clockwork,
        no_tick,
        tick,
        h_eff,
        stalled,
    })
}

/// Joint generator `lindblad(H⊗I, {L⊗I} ∪ {J⊗O_R})` together with the
/// clockwork-level generators.
pub fn build_generators(spec: &ClockSpec) -> Result<GeneratorBundle> {
    let full = full_generator(spec)?;
    let cw = clockwork_generators(spec)?;
    Ok(GeneratorBundle {
        full,
        clockwork: cw.clockwork,
        no_tick: cw.no_tick,
        tick: cw.tick,
        h_eff: cw.h_eff,
    })
}

pub(crate) fn full_generator(spec: &ClockSpec) -> Result<Superoperator> {
    let id_r = ComplexMatrix::identity(spec.register_dim());
    let shift = build_register_shift(spec.n_ticks(), spec.mode());
    let h = kron(spec.h(), &id_r)?;
    let mut ops = Vec::with_capacity(spec.l_ops().len() + spec.j_ops().len());
    for l in spec.l_ops() {
        ops.push(kron(l, &id_r)?);
    }
    for j in spec.j_ops() {
        ops.push(kron(j, &shift)?);
    }
    Superoperator::lindblad(&h, &ops)
}

/// Minimal set of operators reproducing `ρ ↦ Σ_j J_j ρ J_j†`, read off the
/// eigendecomposition of its Choi matrix. The result has at most `d²`
/// elements (the Choi rank).
pub fn canonicalize_jumps(j_ops: &[ComplexMatrix], d: usize) -> Result<Vec<ComplexMatrix>> {
    for op in j_ops {
        if op.rows() != d || op.cols() != d {
            return Err(Error::Shape(format!(
                "jump operator is {}x{}, expected {d}x{d}",
                op.rows(),
                op.cols()
            )));
        }
    }
    if j_ops.is_empty() {
        return Ok(Vec::new());
    }
    Superoperator::kraus(d, j_ops)?.canonical_kraus(JUMP_EIGENVALUE_CUTOFF)
}
