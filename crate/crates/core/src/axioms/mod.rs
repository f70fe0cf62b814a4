//! Numerical checks of the defining clock conditions on concrete
//! generators. Checks that quantify over states draw them from a seeded
//! ChaCha8 stream.

mod measured;
mod memory;
mod suite;

pub use measured::{check_measured_equivalence, measured_channel, MeasurementSequence, MEASUREMENT_BUDGET};
pub use memory::{check_finite_running_memory, finite_running_memory};
pub use suite::{run_check, run_suite, CheckName, SuiteOptions};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::{ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::evolve::{JointDynamics, TimeGrid};
use crate::linalg::{choi_input_marginal, is_psd, ComplexMatrix, DensityMatrix, Superoperator, DEFAULT_EXP_TOL};
use crate::report::{ReportBuilder, VerificationReport};

pub use crate::evolve::{check_condition3, check_condition4, self_timing_check, semigroup_check};

/// Default number of random states per check.
pub const DEFAULT_SAMPLES: usize = 20;

fn random_states(d: usize, samples: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| DensityMatrix::random(d, &mut rng)).collect()
}

/// Condition 1: the clockwork dynamics is invariant under register shifts.
/// For every random `ρ` and valid `(k, k', l)`, compares
/// `<k+l| M^{t,k}(ρ) |k+l>` with `<k'+l| M^{t,k'}(ρ) |k'+l>`. A cut-off
/// register only admits indices below `N_T`.
pub fn check_condition1(
    dynamics: &JointDynamics,
    t: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let n = dynamics.n_ticks();
    let m = n + 1;
    let channel = dynamics.channel(t)?;
    let mut report = ReportBuilder::new("condition1", tol);
    for (s, rho) in random_states(dynamics.d(), samples, seed).iter().enumerate() {
        let outputs = (0..m)
            .map(|k| dynamics.apply(&channel, rho.matrix(), k))
            .collect::<Result<Vec<_>>>()?;
        let target = |k: usize, l: usize| -> Option<usize> {
            match dynamics.mode() {
                RegisterMode::Periodic => Some((k + l) % m),
                RegisterMode::CutOff => (k < n && k + l < n).then_some(k + l),
            }
        };
        for l in 0..m {
            for k in 0..m {
                let Some(a) = target(k, l) else { continue };
                let block_k = dynamics.register_block(&outputs[k], a, a);
                for k2 in k + 1..m {
                    let Some(b) = target(k2, l) else { continue };
                    let block_k2 = dynamics.register_block(&outputs[k2], b, b);
                    report.record(block_k.max_abs_diff(&block_k2), || {
                        format!("sample {s}, k = {k}, k' = {k2}, l = {l}")
                    });
                }
            }
        }
    }
    Ok(report.finish())
}

/// Condition 5: a full cut-off register stays full.
pub fn check_condition5(
    dynamics: &JointDynamics,
    times: &[f64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if dynamics.mode() != RegisterMode::CutOff {
        return Err(Error::Mode("condition 5 applies to cut-off registers only".into()));
    }
    let n = dynamics.n_ticks();
    let full = ComplexMatrix::ket_bra(n + 1, n, n);
    let states = random_states(dynamics.d(), samples, seed);
    let mut report = ReportBuilder::new("condition5", tol);
    for &t in times {
        let channel = dynamics.channel(t)?;
        for (s, rho) in states.iter().enumerate() {
            let out = dynamics.apply(&channel, rho.matrix(), n)?;
            let dev = dynamics.register_marginal(&out).max_abs_diff(&full);
            report.record(dev, || format!("t = {t}, sample {s}"));
        }
    }
    Ok(report.finish())
}

/// Classical register: register-diagonal inputs never develop register
/// coherences.
pub fn check_classical_register(
    dynamics: &JointDynamics,
    t: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let m = dynamics.register_dim();
    let channel = dynamics.channel(t)?;
    let mut report = ReportBuilder::new("classical_register", tol);
    for (s, rho) in random_states(dynamics.d(), samples, seed).iter().enumerate() {
        for k in 0..m {
            let out = dynamics.apply(&channel, rho.matrix(), k)?;
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        let dev = dynamics.register_block(&out, a, b).max_abs();
                        report.record(dev, || format!("sample {s}, input k = {k}, block ({a},{b})"));
                    }
                }
            }
        }
    }
    Ok(report.finish())
}

/// Unitarity tolerance for bases handed to [`check_classical_clockwork`].
pub const BASIS_UNITARY_TOL: f64 = 1e-10;

/// Classical ticking clock: the clockwork marginal stays diagonal in the
/// columns of `basis` at every grid time.
pub fn check_classical_clockwork(
    spec: &ClockSpec,
    basis: &ComplexMatrix,
    grid: &TimeGrid,
    tol: f64,
) -> Result<VerificationReport> {
    let d = spec.d();
    if basis.rows() != d || basis.cols() != d {
        return Err(Error::Shape(format!("basis must be {d}x{d}")));
    }
    let defect = (&basis.adjoint() * basis).max_abs_diff(&ComplexMatrix::identity(d));
    if defect > BASIS_UNITARY_TOL {
        return Err(Error::Validation(format!("basis is not orthonormal (defect {defect:e})")));
    }
    let gens = crate::clock::clockwork_generators(spec)?;
    let step = gens.clockwork.exp(grid.dt(), DEFAULT_EXP_TOL)?;
    let mut rho = gens
        .clockwork
        .exp(grid.t0(), DEFAULT_EXP_TOL)?
        .apply(spec.rho_c0().matrix());
    let mut report = ReportBuilder::new("classical_clockwork", tol);
    for i in 0..grid.len() {
        if i > 0 {
            rho = step.apply(&rho);
        }
        let rotated = &(&basis.adjoint() * &rho) * basis;
        let mut off = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    off = off.max(rotated[(a, b)].norm());
                }
            }
        }
        report.record(off, || format!("t = {}", grid.time(i)));
    }
    Ok(report.finish())
}

/// Clockwork k-independence for periodic registers:
/// `tr_R M^{t,k}(ρ) = exp(t·L_C)(ρ)` for every `k`.
pub fn check_k_independence(
    dynamics: &JointDynamics,
    clockwork: &Superoperator,
    t: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if dynamics.mode() != RegisterMode::Periodic {
        return Err(Error::Mode("k-independence holds for periodic registers only".into()));
    }
    let channel = dynamics.channel(t)?;
    let reduced = clockwork.exp(t, DEFAULT_EXP_TOL)?;
    let mut report = ReportBuilder::new("k_independence", tol);
    for (s, rho) in random_states(dynamics.d(), samples, seed).iter().enumerate() {
        let want = reduced.apply(rho.matrix());
        for k in 0..dynamics.register_dim() {
            let out = dynamics.apply(&channel, rho.matrix(), k)?;
            let dev = dynamics.clockwork_marginal(&out).max_abs_diff(&want);
            report.record(dev, || format!("sample {s}, k = {k}"));
        }
    }
    Ok(report.finish())
}

/// Complete positivity and trace preservation of `exp(t·gen)` via its Choi
/// matrix. Returns the positivity and trace reports separately.
pub fn check_cptp(
    gen: &Superoperator,
    times: &[f64],
    psd_tol: f64,
    trace_tol: f64,
) -> Result<(VerificationReport, VerificationReport)> {
    let n = gen.dim();
    let mut psd = ReportBuilder::new("cptp_positivity", psd_tol);
    let mut tp = ReportBuilder::new("cptp_trace", trace_tol);
    for &t in times {
        let choi = gen.exp(t, DEFAULT_EXP_TOL)?.choi();
        let report = is_psd(&choi.hermitian_part(), psd_tol)?;
        psd.record((-report.min_eigenvalue).max(0.0), || {
            format!("t = {t}: Choi eigenvalue {:e}", report.min_eigenvalue)
        });
        let marginal = choi_input_marginal(&choi, n);
        tp.record(marginal.max_abs_diff(&ComplexMatrix::identity(n)), || format!("t = {t}"));
    }
    Ok((psd.finish(), tp.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{build_register_shift, ladder_clock, quasi_ideal_clock, random_clock, QuasiIdealParams};
    use crate::linalg::{kron, C64};

    fn spec(mode: RegisterMode, seed: u64) -> ClockSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_clock(&mut rng, 2, 2, mode).unwrap()
    }

    #[test]
    fn condition1_passes_for_the_explicit_form() {
        for mode in [RegisterMode::Periodic, RegisterMode::CutOff] {
            let dynamics = JointDynamics::from_spec(&spec(mode, 3)).unwrap();
            assert!(check_condition1(&dynamics, 0.7, 5, 1, 1e-10).unwrap().passed);
            assert_eq!(check_condition1(&dynamics, 0.0, 2, 1, 0.0).unwrap().max_deviation, 0.0);
        }
    }

    #[test]
    fn condition1_catches_k_dependent_ticks() {
        let s = spec(RegisterMode::Periodic, 4);
        let n_reg = 3;
        let id = ComplexMatrix::identity(n_reg);
        let mut shift = build_register_shift(2, RegisterMode::Periodic);
        shift[(2, 1)] = C64::new(2.0, 0.0);
        let mut ops: Vec<ComplexMatrix> = s.l_ops().iter().map(|l| kron(l, &id).unwrap()).collect();
        ops.extend(s.j_ops().iter().map(|j| kron(j, &shift).unwrap()));
        let full = Superoperator::lindblad(&kron(s.h(), &id).unwrap(), &ops).unwrap();
        let dynamics = JointDynamics::new(2, 2, RegisterMode::Periodic, full).unwrap();
        let r = check_condition1(&dynamics, 0.7, 3, 1, 1e-10).unwrap();
        assert!(!r.passed);
        assert!(!r.witnesses.is_empty());
    }

    #[test]
    fn condition5_requires_cut_off() {
        let dynamics = JointDynamics::from_spec(&spec(RegisterMode::Periodic, 5)).unwrap();
        assert!(matches!(check_condition5(&dynamics, &[1.0], 2, 0, 1e-12), Err(Error::Mode(_))));
        let ladder = ladder_clock(3).unwrap().with_register(2, RegisterMode::CutOff).unwrap();
        let dynamics = JointDynamics::from_spec(&ladder).unwrap();
        assert!(check_condition5(&dynamics, &[0.1, 1.0, 10.0], 4, 0, 1e-12).unwrap().passed);
    }

    #[test]
    fn register_coherence_generator_is_caught() {
        let s = spec(RegisterMode::CutOff, 6);
        let n_reg = 3;
        let o = build_register_shift(2, RegisterMode::CutOff);
        let hx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let h = &kron(s.h(), &ComplexMatrix::identity(n_reg)).unwrap() + &kron(&hx, &(&o + &o.adjoint())).unwrap();
        let ops: Vec<ComplexMatrix> = s.j_ops().iter().map(|j| kron(j, &o).unwrap()).collect();
        let full = Superoperator::lindblad(&h, &ops).unwrap();
        let dynamics = JointDynamics::new(2, 2, RegisterMode::CutOff, full).unwrap();
        assert!(!check_classical_register(&dynamics, 0.5, 2, 0, 1e-12).unwrap().passed);
        let good = JointDynamics::from_spec(&s).unwrap();
        assert!(check_classical_register(&good, 0.5, 2, 0, 1e-12).unwrap().passed);
    }

    #[test]
    fn classical_clockwork_examples() {
        let grid = TimeGrid::to_t_max(5.0, 10).unwrap();
        let ladder = ladder_clock(3).unwrap();
        let id3 = ComplexMatrix::identity(3);
        assert!(check_classical_clockwork(&ladder, &id3, &grid, 1e-12).unwrap().passed);
        let qi = quasi_ideal_clock(8, &QuasiIdealParams::defaults(8)).unwrap();
        let r = check_classical_clockwork(&qi, &ComplexMatrix::identity(8), &grid, 1e-12).unwrap();
        assert!(!r.passed && r.max_deviation > 1e-3);
        let bad = ComplexMatrix::identity(3).scale_real(2.0);
        assert!(matches!(check_classical_clockwork(&ladder, &bad, &grid, 1e-12), Err(Error::Validation(_))));
    }

    #[test]
    fn cptp_and_k_independence_for_random_clock() {
        let s = spec(RegisterMode::Periodic, 7);
        let dynamics = JointDynamics::from_spec(&s).unwrap();
        let cw = crate::clock::clockwork_generators(&s).unwrap().clockwork;
        assert!(check_k_independence(&dynamics, &cw, 0.8, 3, 0, 1e-10).unwrap().passed);
        let (psd, tp) = check_cptp(dynamics.full(), &[0.1, 1.0], 1e-9, 1e-10).unwrap();
        assert!(psd.passed && tp.passed);
    }
}
