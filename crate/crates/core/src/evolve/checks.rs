use super::JointDynamics;
use crate::clock::{full_generator, ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::linalg::{exp_scaled, ComplexMatrix, Superoperator, DEFAULT_EXP_TOL};
use crate::report::{ReportBuilder, VerificationReport};

/// Below this, the condition-4 ratio is reported but not judged.
pub const CONDITION4_MIN_DENOMINATOR: f64 = 1e-14;

/// Skip probabilities below this are lost in the rounding of the exponential
/// and are not judged either.
pub const CONDITION4_MIN_NUMERATOR: f64 = 1e-13;

/// Expected range of `ratio(δ/2) / ratio(δ)` for a generic clock. Only the
/// upper edge is judged: a ratio that shrinks faster still vanishes.
pub const CONDITION4_WINDOW: (f64, f64) = (0.4, 0.6);

/// Exponentials for small-δ checks are taken far below the default tolerance
/// so that second-order terms survive.
const SMALL_DELTA_EXP_TOL: f64 = 1e-16;

/// Compares `exp((t1+t2)·gen)` with `exp(t1·gen)·exp(t2·gen)` entrywise.
pub fn semigroup_check(
    name: &str,
    gen: &Superoperator,
    t1: f64,
    t2: f64,
    tol: f64,
) -> Result<VerificationReport> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(Error::Domain(format!("times must be >= 0, got {t1}, {t2}")));
    }
    let m = gen.matrix();
    let joint = exp_scaled(m, t1 + t2, DEFAULT_EXP_TOL)?;
    let split = exp_scaled(m, t1, DEFAULT_EXP_TOL)?.matmul(&exp_scaled(m, t2, DEFAULT_EXP_TOL)?);
    Ok(VerificationReport::single(
        name,
        joint.max_abs_diff(&split),
        tol,
        format!("t1 = {t1}, t2 = {t2}"),
    ))
}

/// Self-timing (divisibility) of the joint channel: `M^{t1+t2} = M^{t1} ∘ M^{t2}`.
pub fn self_timing_check(spec: &ClockSpec, t1: f64, t2: f64, tol: f64) -> Result<VerificationReport> {
    semigroup_check("self_timing", &full_generator(spec)?, t1, t2, tol)
}

/// `‖exp(δ·gen) − id‖₁ ≤ δ‖gen‖₁ e^{δ‖gen‖₁}` in the induced 1-norm of the
/// superoperator matrix. Deviation is the excess over the bound.
pub fn check_condition3(gen: &Superoperator, deltas: &[f64], tol: f64) -> Result<VerificationReport> {
    let mut report = ReportBuilder::new("condition3", tol);
    let norm = gen.matrix().norm_one();
    let id = ComplexMatrix::identity(gen.matrix().rows());
    for &delta in deltas {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("delta {delta} must be >= 0")));
        }
        let lhs = (&exp_scaled(gen.matrix(), delta, SMALL_DELTA_EXP_TOL)? - &id).norm_one();
        let bound = delta * norm * (delta * norm).exp();
        report.record((lhs - bound).max(0.0), || {
            format!("delta = {delta}: distance {lhs:e} exceeds bound {bound:e}")
        });
    }
    Ok(report.finish())
}

/// One evaluation of the condition-4 ratio from register state `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition4Sample {
    pub k: usize,
    pub delta: f64,
    /// Probability of landing anywhere except `k` and `f(k)`.
    pub numerator: f64,
    /// Probability of landing in `f(k)`.
    pub denominator: f64,
}

impl Condition4Sample {
    pub fn ratio(&self) -> f64 {
        self.numerator / self.denominator
    }
}

/// `δ = 1e-2 · 2^{-i}` down to about `1e-4`.
pub fn condition4_deltas() -> Vec<f64> {
    (0..8).map(|i| 1e-2 * 0.5f64.powi(i)).collect()
}

/// Register populations after time `δ` from `ρ_C ⊗ |k><k|` for every valid
/// `k` (all `k` when periodic, `k < N_T` when cut off).
pub fn condition4_samples(
    dynamics: &JointDynamics,
    rho_c: &ComplexMatrix,
    deltas: &[f64],
) -> Result<Vec<Condition4Sample>> {
    let n = dynamics.n_ticks();
    let ks: Vec<usize> = match dynamics.mode() {
        RegisterMode::Periodic => (0..=n).collect(),
        RegisterMode::CutOff => (0..n).collect(),
    };
    let mut out = Vec::new();
    for &delta in deltas {
        let channel = Superoperator::from_matrix(
            dynamics.full().dim(),
            exp_scaled(dynamics.full().matrix(), delta, SMALL_DELTA_EXP_TOL)?,
        )?;
        for &k in &ks {
            let next = dynamics.mode().next(k, n);
            let x = dynamics.apply(&channel, rho_c, k)?;
            let pops = dynamics.register_marginal(&x);
            let mut numerator = 0.0;
            for l in 0..=n {
                if l != k && l != next {
                    numerator += pops[(l, l)].re;
                }
            }
            out.push(Condition4Sample {
                k,
                delta,
                numerator,
                denominator: pops[(next, next)].re,
            });
        }
    }
    Ok(out)
}

/// Condition 4: the probability of skipping a tick vanishes faster than the
/// probability of one tick. For consecutive halvings of `δ` the ratio must
/// shrink by a factor in [`CONDITION4_WINDOW`]. Pairs with an underflowing
/// denominator, or with no skip probability at all, are not judged.
pub fn check_condition4(dynamics: &JointDynamics, rho_c: &ComplexMatrix, deltas: &[f64]) -> Result<VerificationReport> {
    let samples = condition4_samples(dynamics, rho_c, deltas)?;
    let mut report = ReportBuilder::new("condition4", 0.0);
    let (lo, hi) = CONDITION4_WINDOW;
    for a in &samples {
        let Some(b) = samples
            .iter()
            .find(|b| b.k == a.k && (b.delta - a.delta / 2.0).abs() <= 1e-15 * a.delta)
        else {
            continue;
        };
        if a.denominator <= CONDITION4_MIN_DENOMINATOR || b.denominator <= CONDITION4_MIN_DENOMINATOR {
            log::info!(
                "condition 4 not judged at k = {}, delta = {}: tick probability {:e} underflows",
                a.k,
                a.delta,
                a.denominator.min(b.denominator)
            );
            continue;
        }
        if a.numerator.abs() <= CONDITION4_MIN_NUMERATOR || b.numerator.abs() <= CONDITION4_MIN_NUMERATOR {
            report.record(0.0, String::new);
            continue;
        }
        let q = b.ratio() / a.ratio();
        if q < lo {
            log::debug!("condition 4 ratio at k = {} shrank by {q} on halving delta = {}", a.k, a.delta);
        }
        let excess = (q - hi).max(0.0);
        report.record(excess, || {
            format!("k = {}, delta = {}: ratio shrank by {q} on halving", a.k, a.delta)
        });
    }
    Ok(report.finish())
}
