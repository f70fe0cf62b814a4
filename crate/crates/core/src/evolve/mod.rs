//! Deterministic propagation: semigroup exponentials, the joint channel
//! `M^{t,k}`, first-order Euler channels and the number-resolved cascade.

mod cascade;
mod checks;

pub use cascade::{cascade, CascadeOptions, CascadeState, DEFAULT_DENSE_MAX_DIM};
pub(crate) use cascade::delay_densities;
pub use checks::{
    check_condition3, check_condition4, condition4_deltas, condition4_samples, self_timing_check, semigroup_check,
    Condition4Sample, CONDITION4_MIN_DENOMINATOR, CONDITION4_MIN_NUMERATOR, CONDITION4_WINDOW,
};

use crate::clock::{clockwork_generators, full_generator, ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, kron, vectorize, ComplexMatrix, DensityMatrix, Superoperator, C64, DEFAULT_EXP_TOL,
    EVOLVED_MIN_EIGENVALUE,
};

/// Uniform time grid `t_i = t0 + i·dt`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(t0 >= 0.0 && t0.is_finite()) {
            return Err(Error::Validation(format!("grid start {t0} must be finite and >= 0")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("grid spacing {dt} must be finite and > 0")));
        }
        if steps == 0 {
            return Err(Error::Validation("grid needs at least one step".into()));
        }
        if !(t0 + steps as f64 * dt).is_finite() {
            return Err(Error::Validation("grid end is not finite".into()));
        }
        Ok(Self { t0, dt, steps })
    }

    /// `[0, t_max]` split into `steps` intervals.
    pub fn to_t_max(t_max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Validation("grid needs at least one step".into()));
        }
        Self::new(0.0, t_max / steps as f64, steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.time(i))
    }

    /// Same span with twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt / 2.0,
            steps: self.steps * 2,
        }
    }
}

/// `exp(t·gen)(ρ)`. The result may be subnormalized when `gen` does not
/// preserve the trace.
pub fn propagate(gen: &Superoperator, rho: &DensityMatrix, t: f64, tol: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("propagation time {t} must be finite and >= 0")));
    }
    if gen.dim() != rho.dim() {
        return Err(Error::Shape(format!(
            "generator acts on dimension {}, state has {}",
            gen.dim(),
            rho.dim()
        )));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let prop = gen.exp(t, tol)?;
    let out = devectorize(&prop.apply_vec(&vectorize(rho.matrix())), rho.dim());
    evolved_state(out)
}

pub(crate) fn evolved_state(m: ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::subnormalized_with(m.hermitian_part(), EVOLVED_MIN_EIGENVALUE)
        .map_err(|e| Error::Invariant(format!("evolved state left the state space: {e}")))
}

/// Joint clockwork-register generator with its register layout. Built from
/// a [`ClockSpec`] or supplied directly to test generators outside the
/// explicit form.
#[derive(Debug, Clone)]
pub struct JointDynamics {
    d: usize,
    n_ticks: usize,
    mode: RegisterMode,
    full: Superoperator,
}

impl JointDynamics {
    pub fn from_spec(spec: &ClockSpec) -> Result<Self> {
        Ok(Self {
            d: spec.d(),
            n_ticks: spec.n_ticks(),
            mode: spec.mode(),
            full: full_generator(spec)?,
        })
    }

    pub fn new(d: usize, n_ticks: usize, mode: RegisterMode, full: Superoperator) -> Result<Self> {
        if d == 0 || n_ticks == 0 {
            return Err(Error::Validation("need d >= 1 and N_T >= 1".into()));
        }
        if full.dim() != d * (n_ticks + 1) {
            return Err(Error::Shape(format!(
                "generator acts on dimension {}, expected d(N_T+1) = {}",
                full.dim(),
                d * (n_ticks + 1)
            )));
        }
        Ok(Self { d, n_ticks, mode, full })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_ticks(&self) -> usize {
        self.n_ticks
    }

    pub fn register_dim(&self) -> usize {
        self.n_ticks + 1
    }

    pub fn mode(&self) -> RegisterMode {
        self.mode
    }

    pub fn full(&self) -> &Superoperator {
        &self.full
    }

    /// `exp(t·L_CR)`.
    pub fn channel(&self, t: f64) -> Result<Superoperator> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be finite and >= 0")));
        }
        self.full.exp(t, DEFAULT_EXP_TOL)
    }

    /// `ρ_C ⊗ |k><k|`.
    pub fn input(&self, rho_c: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
        if k > self.n_ticks {
            return Err(Error::Domain(format!("register index {k} exceeds N_T = {}", self.n_ticks)));
        }
        if rho_c.rows() != self.d || rho_c.cols() != self.d {
            return Err(Error::Shape(format!("clockwork operator must be {0}x{0}", self.d)));
        }
        kron(rho_c, &ComplexMatrix::ket_bra(self.register_dim(), k, k))
    }

    /// Applies a precomputed channel to `ρ_C ⊗ |k><k|`.
    pub fn apply(&self, channel: &Superoperator, rho_c: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
        let x = self.input(rho_c, k)?;
        Ok(channel.apply(&x))
    }

    /// `M^{t,k}(ρ_C)`.
    pub fn output(&self, t: f64, k: usize, rho_c: &ComplexMatrix) -> Result<ComplexMatrix> {
        let x = self.input(rho_c, k)?;
        if t == 0.0 {
            return Ok(x);
        }
        Ok(self.channel(t)?.apply(&x))
    }

    /// Register block `<r| X |s>` of a joint operator, a `d x d` matrix.
    pub fn register_block(&self, x: &ComplexMatrix, r: usize, s: usize) -> ComplexMatrix {
        register_block(x, self.d, self.register_dim(), r, s)
    }

    /// Clockwork marginal `tr_R X`.
    pub fn clockwork_marginal(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.d, self.d);
        for r in 0..self.register_dim() {
            acc += &self.register_block(x, r, r);
        }
        acc
    }

    /// Register marginal `tr_C X`.
    pub fn register_marginal(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = self.register_dim();
        ComplexMatrix::from_fn(n, n, |r, s| (0..self.d).map(|c| x[(c * n + r, c * n + s)]).sum())
    }
}

/// Register block `<r| X |s>` for the joint ordering clockwork ⊗ register.
pub fn register_block(x: &ComplexMatrix, d: usize, n_reg: usize, r: usize, s: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |a, b| x[(a * n_reg + r, b * n_reg + s)])
}

/// `x ⊗ |r><s|` in the joint ordering.
pub fn embed_block(x: &ComplexMatrix, n_reg: usize, r: usize, s: usize) -> ComplexMatrix {
    let d = x.rows();
    let mut out = ComplexMatrix::zeros(d * n_reg, d * n_reg);
    for a in 0..d {
        for b in 0..d {
            out[(a * n_reg + r, b * n_reg + s)] = x[(a, b)];
        }
    }
    out
}

/// `M^{t,k}(ρ_C) = exp(t·L_CR)(ρ_C ⊗ |k><k|)`.
pub fn channel_at(spec: &ClockSpec, t: f64, k: usize, rho_c: &DensityMatrix) -> Result<DensityMatrix> {
    if k > spec.n_ticks() {
        return Err(Error::Domain(format!("register index {k} exceeds N_T = {}", spec.n_ticks())));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time {t} must be finite and >= 0")));
    }
    let dynamics = JointDynamics::from_spec(spec)?;
    let out = dynamics.output(t, k, rho_c.matrix())?;
    if t == 0.0 {
        return Ok(DensityMatrix::trusted(out));
    }
    evolved_state(out)
}

/// First-order step from register state `k`:
/// `X ↦ (X_kk + dt·C1_k(X_kk)) ⊗ |k><k| + dt·C2(X_kk) ⊗ |f(k)><f(k)|`,
/// where `X_kk = <k|X|k>`. Summed over `k` it equals `I + dt·L_CR` on
/// register-diagonal inputs.
pub fn euler_channel(spec: &ClockSpec, dt: f64, k: usize) -> Result<Superoperator> {
    if k > spec.n_ticks() {
        return Err(Error::Domain(format!("register index {k} exceeds N_T = {}", spec.n_ticks())));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("Euler step {dt} must be finite and > 0")));
    }
    let gens = clockwork_generators(spec)?;
    let n_reg = spec.register_dim();
    let d = spec.d();
    let ticks = spec.mode().ticks_from(k, spec.n_ticks());
    let c1 = if ticks { &gens.no_tick } else { &gens.stalled };
    let rate = c1.matrix().norm_one() + gens.tick.matrix().norm_one();
    if dt * rate > 0.1 {
        log::warn!("Euler step dt = {dt} is large compared with the generator norm {rate}");
    }
    let next = spec.mode().next(k, spec.n_ticks());
    Superoperator::from_map(d * n_reg, |x| {
        let xk = register_block(x, d, n_reg, k, k);
        let stay = &xk + &c1.apply(&xk).scale_real(dt);
        let mut out = embed_block(&stay, n_reg, k, k);
        if ticks {
            out += &embed_block(&gens.tick.apply(&xk).scale_real(dt), n_reg, next, next);
        }
        out
    })
}

/// Sum of [`euler_channel`] over all register states.
pub fn euler_step(spec: &ClockSpec, dt: f64) -> Result<Superoperator> {
    let mut acc = euler_channel(spec, dt, 0)?;
    for k in 1..=spec.n_ticks() {
        acc = acc.add(&euler_channel(spec, dt, k)?);
    }
    Ok(acc)
}

/// `n` composed Euler steps of size `t/n` applied to `ρ_C ⊗ |k><k|`.
pub fn euler_composition(spec: &ClockSpec, t: f64, n: usize, k: usize, rho_c: &DensityMatrix) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::Validation("need at least one Euler step".into()));
    }
    let step = euler_step(spec, t / n as f64)?;
    let x = kron(rho_c.matrix(), &ComplexMatrix::ket_bra(spec.register_dim(), k, k))?;
    let mut v = vectorize(&x);
    let mut buf = vec![C64::new(0.0, 0.0); v.len()];
    for _ in 0..n {
        step.matrix().matvec_into(&v, &mut buf);
        std::mem::swap(&mut v, &mut buf);
    }
    Ok(devectorize(&v, x.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{build_generators, ladder_clock, random_clock};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn damping() -> Superoperator {
        Superoperator::lindblad(&ComplexMatrix::zeros(2, 2), &[ComplexMatrix::ket_bra(2, 0, 1)]).unwrap()
    }

    #[test]
    fn propagate_zero_time_is_identity() {
        let rho = DensityMatrix::basis(2, 1).unwrap();
        assert_eq!(propagate(&damping(), &rho, 0.0, 1e-12).unwrap(), rho);
        assert!(matches!(propagate(&damping(), &rho, -1.0, 1e-12), Err(Error::Domain(_))));
    }

    #[test]
    fn amplitude_damping_halves_at_ln2() {
        let rho = DensityMatrix::basis(2, 1).unwrap();
        let out = propagate(&damping(), &rho, std::f64::consts::LN_2, 1e-13).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cut_off_full_register_stays_full() {
        let spec = ladder_clock(2).unwrap().with_register(2, RegisterMode::CutOff).unwrap();
        let dynamics = JointDynamics::from_spec(&spec).unwrap();
        for t in [0.3, 2.0] {
            let out = channel_at(&spec, t, 2, spec.rho_c0()).unwrap();
            let reg = dynamics.register_marginal(out.matrix());
            assert!(reg.max_abs_diff(&ComplexMatrix::ket_bra(3, 2, 2)) < 1e-12);
        }
    }

    #[test]
    fn periodic_output_is_shift_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = random_clock(&mut rng, 2, 2, RegisterMode::Periodic).unwrap();
        let dynamics = JointDynamics::from_spec(&spec).unwrap();
        let n = 3;
        let a = channel_at(&spec, 0.6, 0, spec.rho_c0()).unwrap();
        let b = channel_at(&spec, 0.6, 1, spec.rho_c0()).unwrap();
        for r in 0..n {
            for s in 0..n {
                let x = dynamics.register_block(a.matrix(), r, s);
                let y = dynamics.register_block(b.matrix(), (r + 1) % n, (s + 1) % n);
                assert!(x.max_abs_diff(&y) < 1e-10);
            }
        }
    }

    #[test]
    fn euler_step_matches_first_order_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = random_clock(&mut rng, 2, 2, RegisterMode::CutOff).unwrap();
        let full = build_generators(&spec).unwrap().full;
        let dt = 1e-3;
        let step = euler_step(&spec, dt).unwrap();
        let dynamics = JointDynamics::from_spec(&spec).unwrap();
        for k in 0..3 {
            let x = dynamics.input(spec.rho_c0().matrix(), k).unwrap();
            let want = &x + &full.apply(&x).scale_real(dt);
            assert!(step.apply(&x).max_abs_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn euler_channel_only_touches_k_and_next() {
        let spec = ladder_clock(2).unwrap().with_register(3, RegisterMode::Periodic).unwrap();
        let dynamics = JointDynamics::from_spec(&spec).unwrap();
        let e = euler_channel(&spec, 0.01, 3).unwrap();
        let out = e.apply(&dynamics.input(&ComplexMatrix::identity(2).scale_real(0.5), 3).unwrap());
        let reg = dynamics.register_marginal(&out);
        assert_eq!(reg[(1, 1)], C64::new(0.0, 0.0));
        assert_eq!(reg[(2, 2)], C64::new(0.0, 0.0));
        assert!(reg[(0, 0)].re > 0.0);
    }
}
