use crate::clock::ClockSpec;
use crate::error::{Error, Result};
use crate::evolve::JointDynamics;
use crate::linalg::{kron, trace_norm_hermitian, ComplexMatrix, DensityMatrix};
use crate::report::{ReportBuilder, VerificationReport};

/// `‖ρ(t) − PρP − (P⊥ρP + h.c.) − P⊥ρ(0)P⊥‖₁` for the coordinate projector
/// onto `subset`.
fn memory_defect(rho_t: &ComplexMatrix, rho_0: &ComplexMatrix, subset: &[bool]) -> Result<f64> {
    let n = rho_t.rows();
    let diff = ComplexMatrix::from_fn(n, n, |r, s| match (subset[r], subset[s]) {
        (false, false) => rho_t[(r, s)] - rho_0[(r, s)],
        // Blocks touching P cancel exactly.
        _ => Default::default(),
    });
    trace_norm_hermitian(&diff.hermitian_part())
}

/// Greedy search for a small register subset satisfying the finite running
/// memory bound at time `t`, starting the clockwork in `rho_c`. Returns the
/// subset, sorted, and the achieved norm.
pub fn finite_running_memory(
    dynamics: &JointDynamics,
    rho_c: &DensityMatrix,
    rho_t0: &DensityMatrix,
    eps: f64,
    t: f64,
) -> Result<(Vec<usize>, f64)> {
    let n = dynamics.register_dim();
    if rho_t0.dim() != n {
        return Err(Error::Shape(format!("register state must be {n}x{n}")));
    }
    if rho_c.dim() != dynamics.d() {
        return Err(Error::Shape(format!("clockwork state must be {0}x{0}", dynamics.d())));
    }
    let joint = kron(rho_c.matrix(), rho_t0.matrix())?;
    let evolved = if t == 0.0 { joint } else { dynamics.channel(t)?.apply(&joint) };
    let rho_t = dynamics.register_marginal(&evolved);

    let mut chosen = vec![false; n];
    let mut value = memory_defect(&rho_t, rho_t0.matrix(), &chosen)?;
    while value > eps {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if chosen[i] {
                continue;
            }
            chosen[i] = true;
            let v = memory_defect(&rho_t, rho_t0.matrix(), &chosen)?;
            chosen[i] = false;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        let Some((i, v)) = best else { break };
        chosen[i] = true;
        value = v;
    }
    Ok(((0..n).filter(|&i| chosen[i]).collect(), value))
}

/// [`finite_running_memory`] with the clockwork in the spec's initial state,
/// reporting the subset size and the achieved norm against `eps`.
pub fn check_finite_running_memory(
    spec: &ClockSpec,
    rho_t0: &DensityMatrix,
    eps: f64,
    t: f64,
) -> Result<(usize, VerificationReport)> {
    let dynamics = JointDynamics::from_spec(spec)?;
    let (subset, value) = finite_running_memory(&dynamics, spec.rho_c0(), rho_t0, eps, t)?;
    let mut report = ReportBuilder::new("finite_running_memory", eps);
    report.record(value, || format!("t = {t}, subset {subset:?}"));
    Ok((subset.len(), report.finish()))
}
