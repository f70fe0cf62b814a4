//! Tick-only quantum-jump unravelling.
//!
//! Between ticks the clockwork follows the no-tick semigroup; the survival
//! probability `S(τ) = tr[exp(τ·C1)ρ]` is walked on a coarse grid and the
//! crossing `S(τ) = u` is solved on a Taylor polynomial of the current grid
//! interval. Each trajectory draws from its own ChaCha8 stream, so records
//! depend only on the seed and the trajectory index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::{clockwork_generators, ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::linalg::{devectorize, hermitian_eigen, matrix_exp, vectorize, ComplexMatrix, LinearOp, C64, I, ZERO};
use crate::par::{map_indexed, Execution};

/// Identifier recorded in output metadata.
pub const RNG_ALGORITHM: &str = "rand_chacha-0.9/ChaCha8Rng(seed_from_u64(seed), stream = trajectory_id)";

/// Required accuracy of `|S(τ) − u|` at a sampled tick.
pub const SURVIVAL_TOL: f64 = 1e-10;

/// Taylor order of the in-interval survival and state polynomials.
const TAYLOR_TERMS: usize = 20;

/// Grid intervals satisfy `Δ · ‖generator‖ <= GRID_NORM`.
const GRID_NORM: f64 = 0.5;

/// One trajectory's tick times in coordinate time.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub trajectory_id: u64,
    pub tick_times: Vec<f64>,
    /// The record stopped at `t_max` or at a full cut-off register.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    pub execution: Execution,
    /// First trajectory id; ids run consecutively from here.
    pub first_id: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            first_id: 0,
        }
    }
}

/// `n_traj` independent tick records up to `t_max`.
pub fn sample_trajectories(spec: &ClockSpec, t_max: f64, n_traj: usize, seed: u64) -> Result<Vec<TickRecord>> {
    sample_trajectories_with(spec, t_max, n_traj, seed, &SamplerOptions::default())
}

pub fn sample_trajectories_with(
    spec: &ClockSpec,
    t_max: f64,
    n_traj: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<Vec<TickRecord>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Validation(format!("t_max = {t_max} must be finite and > 0")));
    }
    if n_traj == 0 {
        return Err(Error::Validation("need at least one trajectory".into()));
    }
    let sampler = Sampler::new(spec)?;
    let max_ticks = match spec.mode() {
        RegisterMode::CutOff => spec.n_ticks() - spec.k0(),
        RegisterMode::Periodic => usize::MAX,
    };
    let results = map_indexed(n_traj, opts.execution, |i| {
        let id = opts.first_id + i as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        sampler.run(id, t_max, max_ticks, &mut rng)
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let silent = records.iter().filter(|r| r.tick_times.is_empty()).count();
    if silent * 100 > records.len() * 99 {
        log::warn!("{silent} of {} trajectories never ticked before t_max = {t_max}", records.len());
    }
    Ok(records)
}

/// Conditional clockwork state between ticks.
#[derive(Clone)]
enum Conditional {
    /// Column-stacked density operator.
    Operator(Vec<C64>),
    /// `ρ = Σ ψ ψ†` for clocks without `L` operators, which keep the rank.
    Vectors(Vec<Vec<C64>>),
}

enum Backend {
    Operator {
        /// `exp(Δ·C1)`.
        step: LinearOp,
        /// `C1`.
        gen: LinearOp,
        /// Rows `vec(I)ᵀ C1^k / k!`, so `S(s) = Σ_k s^k (row_k · v)`.
        trace_rows: Vec<Vec<C64>>,
    },
    Vectors {
        /// `exp(−i H_eff Δ)`.
        step: ComplexMatrix,
        /// `−i H_eff`.
        gen: ComplexMatrix,
    },
}

struct Sampler {
    d: usize,
    delta: f64,
    backend: Backend,
    j_ops: Vec<ComplexMatrix>,
    initial: Conditional,
}

impl Sampler {
    fn new(spec: &ClockSpec) -> Result<Self> {
        let d = spec.d();
        let gens = clockwork_generators(spec)?;
        if spec.l_ops().is_empty() {
            let gen = gens.h_eff.scale(-I);
            let delta = GRID_NORM / gen.norm_one().max(1e-300);
            let eig = hermitian_eigen(spec.rho_c0().matrix())?;
            let top = eig.values.last().copied().unwrap_or(0.0);
            let members = eig
                .values
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > 1e-15 * top)
                .map(|(k, &l)| eig.vector(k).into_iter().map(|z| z * l.sqrt()).collect())
                .collect();
            Ok(Self {
                d,
                delta,
                backend: Backend::Vectors {
                    step: matrix_exp(&gen.scale_real(delta), 1e-15)?,
                    gen,
                },
                j_ops: spec.j_ops().to_vec(),
                initial: Conditional::Vectors(members),
            })
        } else {
            let g = gens.no_tick.matrix();
            let delta = GRID_NORM / g.norm_one().max(1e-300);
            let gen = LinearOp::new(g.clone());
            let mut row: Vec<C64> = vectorize(&ComplexMatrix::identity(d));
            let mut trace_rows = vec![row.clone()];
            for k in 1..TAYLOR_TERMS {
                row = gen.left_apply(&row).into_iter().map(|z| z / k as f64).collect();
                trace_rows.push(row.clone());
            }
            Ok(Self {
                d,
                delta,
                backend: Backend::Operator {
                    step: LinearOp::new(matrix_exp(&g.scale_real(delta), 1e-15)?),
                    gen,
                    trace_rows,
                },
                j_ops: spec.j_ops().to_vec(),
                initial: Conditional::Operator(vectorize(spec.rho_c0().matrix())),
            })
        }
    }

    fn survival(&self, state: &Conditional) -> f64 {
        let d = self.d;
        match state {
            Conditional::Operator(v) => (0..d).map(|a| v[a + a * d].re).sum(),
            Conditional::Vectors(members) => members.iter().flatten().map(|z| z.norm_sqr()).sum(),
        }
    }

    fn advance_grid(&self, state: &Conditional) -> Conditional {
        match (&self.backend, state) {
            (Backend::Operator { step, .. }, Conditional::Operator(v)) => {
                let mut out = vec![ZERO; v.len()];
                step.apply(v, &mut out);
                Conditional::Operator(out)
            }
            (Backend::Vectors { step, .. }, Conditional::Vectors(m)) => {
                Conditional::Vectors(m.iter().map(|psi| step.matvec(psi)).collect())
            }
            _ => unreachable!("state does not match sampler backend"),
        }
    }

    /// Coefficients `c_k` with `S(s) = Σ_k c_k s^k` inside the current
    /// interval, and the Taylor terms needed to rebuild the state.
    fn expand(&self, state: &Conditional) -> (Vec<f64>, Expansion) {
        match (&self.backend, state) {
            (Backend::Operator { gen, trace_rows, .. }, Conditional::Operator(v)) => {
                let coeffs = trace_rows
                    .iter()
                    .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<C64>().re)
                    .collect();
                let mut terms = vec![v.clone()];
                for k in 1..TAYLOR_TERMS {
                    let mut next = vec![ZERO; v.len()];
                    gen.apply(&terms[k - 1], &mut next);
                    next.iter_mut().for_each(|z| *z /= k as f64);
                    terms.push(next);
                }
                (coeffs, Expansion::Operator(terms))
            }
            (Backend::Vectors { gen, .. }, Conditional::Vectors(members)) => {
                let mut coeffs = vec![0.0; TAYLOR_TERMS];
                let mut all_terms = Vec::with_capacity(members.len());
                for psi in members {
                    let mut terms = vec![psi.clone()];
                    for k in 1..TAYLOR_TERMS {
                        let next: Vec<C64> = gen.matvec(&terms[k - 1]).into_iter().map(|z| z / k as f64).collect();
                        terms.push(next);
                    }
                    for (m, c) in coeffs.iter_mut().enumerate() {
                        for j in 0..=m {
                            let inner: C64 = terms[j].iter().zip(&terms[m - j]).map(|(a, b)| a.conj() * b).sum();
                            *c += inner.re;
                        }
                    }
                    all_terms.push(terms);
                }
                (coeffs, Expansion::Vectors(all_terms))
            }
            _ => unreachable!("state does not match sampler backend"),
        }
    }

    fn run(&self, id: u64, t_max: f64, max_ticks: usize, rng: &mut ChaCha8Rng) -> Result<TickRecord> {
        let mut ticks = Vec::new();
        let mut epoch = 0.0;
        let mut state = self.initial.clone();
        while ticks.len() < max_ticks {
            let u = 1.0 - rng.random::<f64>();
            let mut s_prev = self.survival(&state);
            let mut offset = 0.0;
            let crossed = loop {
                if epoch + offset >= t_max {
                    break None;
                }
                let next = self.advance_grid(&state);
                let s_next = self.survival(&next);
                if s_next > s_prev + SURVIVAL_TOL {
                    return Err(Error::Invariant(format!(
                        "survival rose from {s_prev} to {s_next} at t = {}",
                        epoch + offset + self.delta
                    )));
                }
                if s_next <= u {
                    break Some(self.solve_crossing(&state, s_prev, u)?);
                }
                state = next;
                s_prev = s_next;
                offset += self.delta;
            };
            let Some((s, pre_tick)) = crossed else { break };
            let t_tick = epoch + offset + s;
            if t_tick > t_max {
                break;
            }
            if let Some(last) = ticks.last() {
                if t_tick <= *last {
                    return Err(Error::Invariant(format!("tick times not increasing at {t_tick}")));
                }
            }
            ticks.push(t_tick);
            epoch = t_tick;
            state = self.jump(pre_tick, rng)?;
        }
        Ok(TickRecord {
            trajectory_id: id,
            tick_times: ticks,
            truncated: true,
        })
    }

    /// Finds `s ∈ [0, Δ]` with `S(s) = u` and the unnormalized state there.
    fn solve_crossing(&self, state: &Conditional, s0: f64, u: f64) -> Result<(f64, Conditional)> {
        let (coeffs, expansion) = self.expand(state);
        let poly = |s: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c);
        let dpoly = |s: f64| {
            coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
        };
        let (mut lo, mut hi) = (0.0, self.delta);
        let mut s = if s0 > u { 0.5 * self.delta } else { 0.0 };
        for _ in 0..200 {
            let f = poly(s) - u;
            if f.abs() <= 0.01 * SURVIVAL_TOL || hi - lo <= 1e-15 * self.delta.max(1.0) {
                break;
            }
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let df = dpoly(s);
            let newton = s - f / df;
            s = if df < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let miss = (poly(s) - u).abs();
        if miss > SURVIVAL_TOL {
            return Err(Error::Numeric(format!("survival root missed u by {miss:e}")));
        }
        Ok((s, expansion.evaluate(s)))
    }

    /// Picks a tick operator with probability `∝ tr[J ρ J†]` and returns the
    /// normalized post-tick state.
    fn jump(&self, pre: Conditional, rng: &mut ChaCha8Rng) -> Result<Conditional> {
        let d = self.d;
        let weights: Vec<f64> = match &pre {
            Conditional::Operator(v) => {
                let rho = devectorize(v, d);
                self.j_ops
                    .iter()
                    .map(|j| (&(j * &rho) * &j.adjoint()).trace().re.max(0.0))
                    .collect()
            }
            Conditional::Vectors(members) => self
                .j_ops
                .iter()
                .map(|j| members.iter().map(|psi| j.matvec(psi).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum())
                .collect(),
        };
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric("tick occurred from a state with zero tick rate".into()));
        }
        let mut r = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (j, w) in weights.iter().enumerate() {
            if r < *w {
                pick = j;
                break;
            }
            r -= w;
        }
        let j = &self.j_ops[pick];
        let w = weights[pick];
        Ok(match pre {
            Conditional::Operator(v) => {
                let rho = devectorize(&v, d);
                let post = (&(j * &rho) * &j.adjoint()).scale_real(1.0 / w);
                Conditional::Operator(vectorize(&post.hermitian_part()))
            }
            Conditional::Vectors(members) => {
                let s = 1.0 / w.sqrt();
                Conditional::Vectors(
                    members
                        .iter()
                        .map(|psi| j.matvec(psi).into_iter().map(|z| z * s).collect())
                        .collect(),
                )
            }
        })
    }
}

enum Expansion {
    Operator(Vec<Vec<C64>>),
    Vectors(Vec<Vec<Vec<C64>>>),
}

impl Expansion {
    fn evaluate(&self, s: f64) -> Conditional {
        fn horner(terms: &[Vec<C64>], s: f64) -> Vec<C64> {
            let mut acc = terms[terms.len() - 1].clone();
            for t in terms.iter().rev().skip(1) {
                for (a, b) in acc.iter_mut().zip(t) {
                    *a = *a * s + b;
                }
            }
            acc
        }
        match self {
            Expansion::Operator(terms) => Conditional::Operator(horner(terms, s)),
            Expansion::Vectors(members) => Conditional::Vectors(members.iter().map(|t| horner(t, s)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{ladder_clock, ClockParts};
    use crate::linalg::DensityMatrix;

    fn poisson(mode: RegisterMode, n_ticks: usize) -> ClockSpec {
        ClockParts {
            n_ticks,
            mode,
            h: ComplexMatrix::zeros(1, 1),
            l_ops: vec![],
            j_ops: vec![ComplexMatrix::identity(1)],
            rho_c0: DensityMatrix::maximally_mixed(1),
            k0: 0,
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn cut_off_register_limits_tick_count() {
        let spec = ladder_clock(2).unwrap();
        let recs = sample_trajectories(&spec, 1e3, 50, 1).unwrap();
        for r in &recs {
            assert_eq!(r.tick_times.len(), spec.n_ticks());
            assert!(r.tick_times.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn deterministic_per_seed_and_id() {
        let spec = ladder_clock(3).unwrap();
        let a = sample_trajectories(&spec, 50.0, 20, 9).unwrap();
        let b = sample_trajectories_with(
            &spec,
            50.0,
            20,
            9,
            &SamplerOptions {
                execution: Execution::Sequential,
                first_id: 0,
            },
        )
        .unwrap();
        assert_eq!(a, b);
        let tail = sample_trajectories_with(
            &spec,
            50.0,
            5,
            9,
            &SamplerOptions {
                first_id: 15,
                ..SamplerOptions::default()
            },
        )
        .unwrap();
        assert_eq!(&a[15..], &tail[..]);
    }

    #[test]
    fn poisson_mean_rate() {
        let spec = poisson(RegisterMode::Periodic, 1);
        let recs = sample_trajectories(&spec, 200.0, 20, 3).unwrap();
        let n: usize = recs.iter().map(|r| r.tick_times.len()).sum();
        let rate = n as f64 / (20.0 * 200.0);
        assert!((rate - 1.0).abs() < 0.06, "rate {rate}");
    }

    #[test]
    fn operator_backend_handles_l_ops() {
        let spec = ladder_clock(4).unwrap().with_register(1, RegisterMode::CutOff).unwrap();
        let recs = sample_trajectories(&spec, 100.0, 2000, 5).unwrap();
        let mean = recs.iter().map(|r| r.tick_times[0]).sum::<f64>() / recs.len() as f64;
        assert!((mean - 4.0).abs() < 4.0 * 3.0 * 0.5 / (2000f64).sqrt() * 2.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = ladder_clock(1).unwrap();
        assert!(sample_trajectories(&spec, 0.0, 1, 0).is_err());
        assert!(sample_trajectories(&spec, 1.0, 0, 0).is_err());
    }
}
