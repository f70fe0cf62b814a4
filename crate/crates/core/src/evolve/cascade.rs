//! Number-resolved evolution `dρ⁽ⁿ⁾/dt = C1 ρ⁽ⁿ⁾ + C2 ρ⁽ⁿ⁻¹⁾`.
//!
//! Three steppers share one interface. Small block systems use the exact
//! exponential of the whole block generator, stored sparsely when most
//! entries vanish. A single block without `L` operators evolves as
//! `K ρ K†` on an ensemble of vectors. Everything else falls back to
//! fixed-step RK4 in operator form.

use super::{evolved_state, TimeGrid};
use crate::clock::{clockwork_generators, ClockSpec, ClockworkGenerators, RegisterMode};
use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, exp_scaled, hermitian_eigen, matrix_exp, vectorize, ComplexMatrix, DensityMatrix, LinearOp, C64, I,
    ZERO,
};

/// Largest block-generator dimension (`blocks · d²`) propagated by an exact
/// dense exponential.
pub const DEFAULT_DENSE_MAX_DIM: usize = 1024;

/// Total-trace drift beyond which a register cascade is rejected.
const TRACE_LEAK_TOL: f64 = 1e-6;

/// RK4 substeps keep `h · (generator norm bound)` below this.
const RK4_STEP_NORM: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOptions {
    pub dense_max_dim: usize,
    pub exp_tol: f64,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            dense_max_dim: DEFAULT_DENSE_MAX_DIM,
            exp_tol: 1e-13,
        }
    }
}

/// Register-resolved clockwork blocks `ρ⁽ⁿ⁾(t)`, `n = 0..=N_T`.
#[derive(Debug, Clone)]
pub struct CascadeState {
    pub time: f64,
    pub blocks: Vec<DensityMatrix>,
}

impl CascadeState {
    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(DensityMatrix::trace).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BlockKind {
    /// Evolves with the no-tick generator and emits ticks.
    Running,
    /// Full cut-off register: evolves with `lindblad(H, L)`, never ticks.
    Stalled,
}

/// Which generator drives each block and which block feeds it ticks.
#[derive(Debug, Clone)]
pub(crate) struct BlockLayout {
    kinds: Vec<BlockKind>,
    feeds: Vec<Option<usize>>,
}

impl BlockLayout {
    pub(crate) fn register(n_ticks: usize, mode: RegisterMode) -> Self {
        let n = n_ticks + 1;
        let kinds = (0..n)
            .map(|k| {
                if mode.ticks_from(k, n_ticks) {
                    BlockKind::Running
                } else {
                    BlockKind::Stalled
                }
            })
            .collect();
        let feeds = (0..n)
            .map(|k| match (k, mode) {
                (0, RegisterMode::Periodic) => Some(n_ticks),
                (0, RegisterMode::CutOff) => None,
                _ => Some(k - 1),
            })
            .collect();
        Self { kinds, feeds }
    }

    /// `k` running blocks without wrap-around: block `n` holds the
    /// clockwork conditioned on exactly `n` ticks.
    pub(crate) fn counting(k: usize) -> Self {
        Self {
            kinds: vec![BlockKind::Running; k],
            feeds: (0..k).map(|n| n.checked_sub(1)).collect(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.kinds.len()
    }
}

struct Rk4 {
    h: f64,
    substeps: usize,
    h_run: ComplexMatrix,
    h_stall: ComplexMatrix,
    l_ops: Vec<ComplexMatrix>,
    j_ops: Vec<ComplexMatrix>,
    /// Tick map as a superoperator matrix when that is cheaper than many
    /// operator products.
    tick_super: Option<ComplexMatrix>,
}

enum Stepper {
    Dense(LinearOp),
    Sandwich(ComplexMatrix),
    Rk4(Rk4),
}

/// Internal state of a [`CascadeEngine`].
pub(crate) enum EngineState {
    /// Concatenated column-stacked blocks.
    Vector(Vec<C64>, Vec<C64>),
    /// Single block `Σ ψ ψ†`.
    Ensemble(Vec<Vec<C64>>),
    Blocks(Vec<ComplexMatrix>),
}

/// Fixed-step propagator for a block system.
pub(crate) struct CascadeEngine {
    d: usize,
    layout: BlockLayout,
    stepper: Stepper,
}

impl CascadeEngine {
    pub(crate) fn new(
        spec: &ClockSpec,
        gens: &ClockworkGenerators,
        layout: BlockLayout,
        dt: f64,
        opts: &CascadeOptions,
    ) -> Result<Self> {
        let d = spec.d();
        let nb = layout.len();
        let m = d * d;
        let stepper = if nb == 1 && spec.l_ops().is_empty() {
            let h = match layout.kinds[0] {
                BlockKind::Running => gens.h_eff.clone(),
                BlockKind::Stalled => spec.h().clone(),
            };
            Stepper::Sandwich(matrix_exp(&h.scale(-I * dt), opts.exp_tol)?)
        } else if nb * m <= opts.dense_max_dim {
            let mut a = ComplexMatrix::zeros(nb * m, nb * m);
            for n in 0..nb {
                let diag = match layout.kinds[n] {
                    BlockKind::Running => gens.no_tick.matrix(),
                    BlockKind::Stalled => gens.stalled.matrix(),
                };
                a.add_block(n * m, n * m, diag);
                if let Some(p) = layout.feeds[n] {
                    a.add_block(n * m, p * m, gens.tick.matrix());
                }
            }
            Stepper::Dense(LinearOp::new(exp_scaled(&a, dt, opts.exp_tol)?))
        } else {
            let mut l_rates = ComplexMatrix::zeros(d, d);
            for l in spec.l_ops() {
                l_rates += &(&l.adjoint() * l);
            }
            let h_stall = spec.h() - &l_rates.scale(I * 0.5);
            let bound = 2.0 * gens.h_eff.norm_one().max(h_stall.norm_one())
                + spec.l_ops().iter().chain(spec.j_ops()).map(|o| o.norm_one().powi(2)).sum::<f64>();
            let substeps = ((dt * bound / RK4_STEP_NORM).ceil() as usize).max(1);
            log::debug!("cascade falls back to RK4 with {substeps} substeps per grid step");
            let tick_super = (2 * spec.j_ops().len() > d).then(|| gens.tick.matrix().clone());
            Stepper::Rk4(Rk4 {
                h: dt / substeps as f64,
                substeps,
                h_run: gens.h_eff.clone(),
                h_stall,
                l_ops: spec.l_ops().to_vec(),
                j_ops: spec.j_ops().to_vec(),
                tick_super,
            })
        };
        Ok(Self { d, layout, stepper })
    }

    pub(crate) fn init(&self, block: usize, rho: &ComplexMatrix) -> Result<EngineState> {
        let d = self.d;
        let nb = self.layout.len();
        Ok(match &self.stepper {
            Stepper::Dense(_) => {
                let mut v = vec![ZERO; nb * d * d];
                v[block * d * d..(block + 1) * d * d].copy_from_slice(&vectorize(rho));
                let scratch = vec![ZERO; v.len()];
                EngineState::Vector(v, scratch)
            }
            Stepper::Sandwich(_) => {
                let eig = hermitian_eigen(rho)?;
                let top = eig.values.last().copied().unwrap_or(0.0);
                let mut members = Vec::new();
                for (k, &lambda) in eig.values.iter().enumerate() {
                    if lambda > 1e-15 * top {
                        let s = lambda.sqrt();
                        members.push(eig.vector(k).into_iter().map(|z| z * s).collect());
                    }
                }
                EngineState::Ensemble(members)
            }
            Stepper::Rk4(_) => {
                let mut blocks = vec![ComplexMatrix::zeros(d, d); nb];
                blocks[block] = rho.clone();
                EngineState::Blocks(blocks)
            }
        })
    }

    pub(crate) fn step(&self, state: &mut EngineState) {
        match (&self.stepper, state) {
            (Stepper::Dense(p), EngineState::Vector(v, scratch)) => {
                p.apply(v, scratch);
                std::mem::swap(v, scratch);
            }
            (Stepper::Sandwich(k), EngineState::Ensemble(members)) => {
                for psi in members.iter_mut() {
                    *psi = k.matvec(psi);
                }
            }
            (Stepper::Rk4(rk), EngineState::Blocks(blocks)) => {
                for _ in 0..rk.substeps {
                    self.rk4_substep(rk, blocks);
                }
            }
            _ => unreachable!("engine state does not match its stepper"),
        }
    }

    fn rk4_substep(&self, rk: &Rk4, blocks: &mut Vec<ComplexMatrix>) {
        let h = rk.h;
        let k1 = self.derivative(rk, blocks);
        let y2 = axpy(blocks, &k1, h / 2.0);
        let k2 = self.derivative(rk, &y2);
        let y3 = axpy(blocks, &k2, h / 2.0);
        let k3 = self.derivative(rk, &y3);
        let y4 = axpy(blocks, &k3, h);
        let k4 = self.derivative(rk, &y4);
        for n in 0..blocks.len() {
            let incr = &(&(&k1[n] + &k2[n].scale_real(2.0)) + &k3[n].scale_real(2.0)) + &k4[n];
            blocks[n] += &incr.scale_real(h / 6.0);
        }
    }

    fn derivative(&self, rk: &Rk4, blocks: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        let d = self.d;
        (0..blocks.len())
            .map(|n| {
                let rho = &blocks[n];
                let h = match self.layout.kinds[n] {
                    BlockKind::Running => &rk.h_run,
                    BlockKind::Stalled => &rk.h_stall,
                };
                let mut out = (&(h * rho) - &(rho * &h.adjoint())).scale(-I);
                for l in &rk.l_ops {
                    out += &(&(l * rho) * &l.adjoint());
                }
                if let Some(p) = self.layout.feeds[n] {
                    let src = &blocks[p];
                    match &rk.tick_super {
                        Some(t) => out += &devectorize(&t.matvec(&vectorize(src)), d),
                        None => {
                            for j in &rk.j_ops {
                                out += &(&(j * src) * &j.adjoint());
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `tr[op ρ⁽ⁿ⁾]`.
    pub(crate) fn expectation(&self, state: &EngineState, n: usize, op: &ComplexMatrix) -> f64 {
        let d = self.d;
        match state {
            EngineState::Vector(v, _) => {
                let block = &v[n * d * d..(n + 1) * d * d];
                let mut acc = ZERO;
                for b in 0..d {
                    for a in 0..d {
                        acc += op[(b, a)] * block[a + b * d];
                    }
                }
                acc.re
            }
            EngineState::Ensemble(members) => members
                .iter()
                .map(|psi| {
                    let o = op.matvec(psi);
                    psi.iter().zip(&o).map(|(p, q)| p.conj() * q).sum::<C64>().re
                })
                .sum(),
            EngineState::Blocks(blocks) => (op * &blocks[n]).trace().re,
        }
    }

    pub(crate) fn block(&self, state: &EngineState, n: usize) -> ComplexMatrix {
        let d = self.d;
        match state {
            EngineState::Vector(v, _) => devectorize(&v[n * d * d..(n + 1) * d * d], d),
            EngineState::Ensemble(members) => {
                let mut acc = ComplexMatrix::zeros(d, d);
                for psi in members {
                    acc += &ComplexMatrix::outer(psi, psi);
                }
                acc
            }
            EngineState::Blocks(blocks) => blocks[n].clone(),
        }
    }

    pub(crate) fn num_blocks(&self) -> usize {
        self.layout.len()
    }
}

fn axpy(y: &[ComplexMatrix], k: &[ComplexMatrix], h: f64) -> Vec<ComplexMatrix> {
    y.iter().zip(k).map(|(a, b)| a + &b.scale_real(h)).collect()
}

/// Advances `state` from time 0 to `t0` in one exact step where possible.
fn advance_to_start(
    spec: &ClockSpec,
    gens: &ClockworkGenerators,
    layout: &BlockLayout,
    t0: f64,
    opts: &CascadeOptions,
    state: &mut EngineState,
) -> Result<()> {
    if t0 > 0.0 {
        let engine = CascadeEngine::new(spec, gens, layout.clone(), t0, opts)?;
        engine.step(state);
    }
    Ok(())
}

/// `tr[Σ_j J_j† J_j ρ⁽ᵏ⁻¹⁾(t_i)]` on the grid, counting ticks from `ρ_C0`
/// without a register bound.
pub(crate) fn delay_densities(spec: &ClockSpec, k: usize, grid: &TimeGrid, opts: &CascadeOptions) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Domain("tick index starts at 1".into()));
    }
    let gens = clockwork_generators(spec)?;
    let layout = BlockLayout::counting(k);
    let engine = CascadeEngine::new(spec, &gens, layout.clone(), grid.dt(), opts)?;
    let mut state = engine.init(0, spec.rho_c0().matrix())?;
    advance_to_start(spec, &gens, &layout, grid.t0(), opts, &mut state)?;
    let rate = spec.tick_rate_operator();
    let mut out = Vec::with_capacity(grid.len());
    out.push(engine.expectation(&state, k - 1, &rate));
    for _ in 0..grid.steps() {
        engine.step(&mut state);
        out.push(engine.expectation(&state, k - 1, &rate));
    }
    Ok(out)
}

/// Register-resolved cascade starting from `ρ_C0` in block `k0`, one state
/// per grid point.
pub fn cascade(spec: &ClockSpec, grid: &TimeGrid) -> Result<Vec<CascadeState>> {
    cascade_with(spec, grid, &CascadeOptions::default())
}

pub(crate) fn cascade_with(spec: &ClockSpec, grid: &TimeGrid, opts: &CascadeOptions) -> Result<Vec<CascadeState>> {
    let gens = clockwork_generators(spec)?;
    let layout = BlockLayout::register(spec.n_ticks(), spec.mode());
    let engine = CascadeEngine::new(spec, &gens, layout.clone(), grid.dt(), opts)?;
    let mut state = engine.init(spec.k0(), spec.rho_c0().matrix())?;
    advance_to_start(spec, &gens, &layout, grid.t0(), opts, &mut state)?;
    let snapshot = |state: &EngineState, time: f64| -> Result<CascadeState> {
        let blocks = (0..engine.num_blocks())
            .map(|n| evolved_state(engine.block(state, n)))
            .collect::<Result<Vec<_>>>()?;
        let out = CascadeState { time, blocks };
        let leak = (out.total_trace() - 1.0).abs();
        if leak > TRACE_LEAK_TOL {
            return Err(Error::Accuracy {
                message: format!("cascade trace drifted by {leak:e} at t = {time}"),
                suggested_dt: grid.dt() / 2.0,
            });
        }
        Ok(out)
    };
    let mut states = Vec::with_capacity(grid.len());
    states.push(snapshot(&state, grid.time(0))?);
    for i in 1..grid.len() {
        engine.step(&mut state);
        states.push(snapshot(&state, grid.time(i))?);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{ladder_clock, random_clock};
    use crate::evolve::JointDynamics;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_level_ladder_decays() {
        let spec = ladder_clock(1).unwrap();
        let grid = TimeGrid::to_t_max(5.0, 50).unwrap();
        let states = cascade(&spec, &grid).unwrap();
        for s in &states {
            assert!((s.blocks[0].trace() - (-s.time).exp()).abs() < 1e-9);
            assert!((s.total_trace() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn blocks_match_joint_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for mode in [RegisterMode::CutOff, RegisterMode::Periodic] {
            let spec = random_clock(&mut rng, 2, 2, mode).unwrap();
            let dynamics = JointDynamics::from_spec(&spec).unwrap();
            let grid = TimeGrid::new(0.2, 0.35, 4).unwrap();
            let states = cascade(&spec, &grid).unwrap();
            for s in &states {
                let joint = dynamics.output(s.time, 0, spec.rho_c0().matrix()).unwrap();
                for (n, b) in s.blocks.iter().enumerate() {
                    assert!(dynamics.register_block(&joint, n, n).max_abs_diff(b.matrix()) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn steppers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = random_clock(&mut rng, 3, 2, RegisterMode::CutOff).unwrap();
        let grid = TimeGrid::to_t_max(2.0, 20).unwrap();
        let exact = delay_densities(&spec, 2, &grid, &CascadeOptions::default()).unwrap();
        let rk = CascadeOptions {
            dense_max_dim: 1,
            ..CascadeOptions::default()
        };
        let approx = delay_densities(&spec, 2, &grid, &rk).unwrap();
        for (a, b) in exact.iter().zip(&approx) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn single_block_without_l_is_exact() {
        let spec = ladder_clock(1).unwrap();
        let grid = TimeGrid::to_t_max(3.0, 30).unwrap();
        let d = delay_densities(&spec, 1, &grid, &CascadeOptions::default()).unwrap();
        for (i, x) in d.iter().enumerate() {
            assert!((x - (-grid.time(i)).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn cut_off_ladder_fills_register() {
        let spec = ladder_clock(2).unwrap().with_register(2, RegisterMode::CutOff).unwrap();
        let t = 50.0 * 2.0 * 2.0;
        let states = cascade(&spec, &TimeGrid::to_t_max(t, 400).unwrap()).unwrap();
        let last = states.last().unwrap();
        assert!(1.0 - last.blocks[2].trace() < 1e-6);
    }
}
