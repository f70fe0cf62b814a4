use crate::error::{Error, Result};
use crate::evolve::JointDynamics;
use crate::linalg::{devectorize, vectorize, ComplexMatrix, DensityMatrix, Superoperator, C64};
use crate::report::{ReportBuilder, VerificationReport};

/// Largest number of outcome sequences [`check_measured_equivalence`]
/// enumerates.
pub const MEASUREMENT_BUDGET: u128 = 1_000_000;

/// Register readouts `(l_n, t_n)`: evolve for `t_n`, then project onto
/// `|l_n><l_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSequence {
    outcomes: Vec<(usize, f64)>,
}

impl MeasurementSequence {
    pub fn new(outcomes: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(_, t)) = outcomes.iter().find(|(_, t)| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Domain(format!("measurement interval {t} must be finite and >= 0")));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(usize, f64)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.outcomes.iter().map(|(_, t)| t).sum()
    }
}

/// Projects the register of a vectorized joint operator onto `|l><l|`.
fn project(v: &[C64], n_joint: usize, n_reg: usize, l: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for b in 0..n_joint / n_reg {
        let col = b * n_reg + l;
        for a in 0..n_joint / n_reg {
            let row = a * n_reg + l;
            out[row + col * n_joint] = v[row + col * n_joint];
        }
    }
    out
}

fn vec_trace(v: &[C64], n: usize) -> f64 {
    (0..n).map(|i| v[i + i * n].re).sum()
}

/// Probability of the outcome sequence and the conditional joint state.
/// A branch of probability zero yields `(0, 0)`.
pub fn measured_channel(
    dynamics: &JointDynamics,
    seq: &MeasurementSequence,
    rho_c: &DensityMatrix,
    k0: usize,
) -> Result<(f64, DensityMatrix)> {
    let n_reg = dynamics.register_dim();
    if let Some(&(l, _)) = seq.outcomes().iter().find(|(l, _)| *l >= n_reg) {
        return Err(Error::Domain(format!("outcome {l} exceeds N_T = {}", dynamics.n_ticks())));
    }
    let n = dynamics.d() * n_reg;
    let mut v = vectorize(&dynamics.input(rho_c.matrix(), k0)?);
    let mut prob = 1.0;
    for &(l, t) in seq.outcomes() {
        let evolved = if t == 0.0 { v } else { dynamics.channel(t)?.apply_vec(&v) };
        let projected = project(&evolved, n, n_reg, l);
        let p = vec_trace(&projected, n);
        if !(p > 0.0) {
            return Ok((0.0, DensityMatrix::trusted(ComplexMatrix::zeros(n, n))));
        }
        prob *= p;
        v = projected.into_iter().map(|x| x / p).collect();
    }
    let state = crate::evolve::evolved_state(devectorize(&v, n))?;
    Ok((prob, state))
}

/// Sums `Prob[s]·state(s)` over every outcome sequence for the intervals
/// `times` and compares it with the unmeasured channel over the total time.
pub fn check_measured_equivalence(
    dynamics: &JointDynamics,
    rho_c: &DensityMatrix,
    k0: usize,
    times: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let n_reg = dynamics.register_dim();
    let required = (n_reg as u128).checked_pow(times.len() as u32).unwrap_or(u128::MAX);
    if required > MEASUREMENT_BUDGET {
        let mut suggested_n = 0;
        while (n_reg as u128).pow(suggested_n as u32 + 1) <= MEASUREMENT_BUDGET {
            suggested_n += 1;
        }
        return Err(Error::Resource {
            required,
            budget: MEASUREMENT_BUDGET,
            suggested_n,
        });
    }
    MeasurementSequence::new(times.iter().map(|&t| (0, t)).collect())?;
    let n = dynamics.d() * n_reg;
    let channels = times
        .iter()
        .map(|&t| dynamics.channel(t))
        .collect::<Result<Vec<Superoperator>>>()?;

    // Depth-first over outcomes with unnormalized branches; the weight of a
    // leaf is Prob[s]·state(s).
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    let mut stack = vec![(0usize, vectorize(&dynamics.input(rho_c.matrix(), k0)?))];
    while let Some((depth, v)) = stack.pop() {
        if depth == channels.len() {
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
            continue;
        }
        let evolved = channels[depth].apply_vec(&v);
        for l in 0..n_reg {
            let branch = project(&evolved, n, n_reg, l);
            if vec_trace(&branch, n) > 0.0 {
                stack.push((depth + 1, branch));
            }
        }
    }
    let total: f64 = times.iter().sum();
    let direct = dynamics.output(total, k0, rho_c.matrix())?;
    let ensemble = devectorize(&acc, n);
    let mut report = ReportBuilder::new("measured_equivalence", tol);
    report.record(ensemble.max_abs_diff(&direct), || format!("times {times:?}, k0 = {k0}"));
    Ok(report.finish())
}
