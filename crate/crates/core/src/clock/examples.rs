use std::f64::consts::PI;

use super::{ClockParts, ClockSpec, RegisterMode, DEFAULT_N_TICKS};
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, DensityMatrix, C64};

/// Classical ladder: `L_j = |c_{j+1}><c_j|`, `J = |c_1><c_d|`, all rates one,
/// starting in `|c_1>`. Cut-off register with [`DEFAULT_N_TICKS`] ticks.
pub fn ladder_clock(d: usize) -> Result<ClockSpec> {
    if d == 0 {
        return Err(Error::Validation("ladder clock needs d >= 1".into()));
    }
    let l_ops = (0..d - 1).map(|j| ComplexMatrix::ket_bra(d, j + 1, j)).collect();
    ClockParts {
        n_ticks: DEFAULT_N_TICKS,
        mode: RegisterMode::CutOff,
        h: ComplexMatrix::zeros(d, d),
        l_ops,
        j_ops: vec![ComplexMatrix::ket_bra(d, 0, d - 1)],
        rho_c0: DensityMatrix::basis(d, 0)?,
        k0: 0,
    }
    .validate()
}

/// Parameters of the two-qubit-plus-ladder thermal machine clock.
#[derive(Debug, Clone)]
pub struct ThermoParams {
    pub e_h: f64,
    pub e_c: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    pub gamma_h: f64,
    pub gamma_c: f64,
    pub g: f64,
    /// Emission rate of the tick operator `√Γ |0><d-1|_w`.
    pub gamma: f64,
    pub d: usize,
    /// Replaces the default resonant three-body interaction.
    pub h_int: Option<ComplexMatrix>,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self {
            e_h: 2.0,
            e_c: 1.0,
            beta_h: 0.5,
            beta_c: 5.0,
            gamma_h: 1.0,
            gamma_c: 1.0,
            g: 0.5,
            gamma: 1.0,
            d: 3,
            h_int: None,
        }
    }
}

impl ThermoParams {
    fn validate(&self) -> Result<()> {
        let finite = [self.e_h, self.e_c, self.beta_h, self.beta_c, self.g];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("thermodynamic clock parameters must be finite".into()));
        }
        for (name, rate) in [("gamma_h", self.gamma_h), ("gamma_c", self.gamma_c), ("Gamma", self.gamma)] {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Validation(format!("{name} must be a positive rate, got {rate}")));
            }
        }
        if self.beta_h < 0.0 || self.beta_c < 0.0 {
            return Err(Error::Validation("inverse temperatures must be non-negative".into()));
        }
        if self.d < 2 {
            return Err(Error::Validation("thermodynamic clock needs a ladder with d >= 2".into()));
        }
        Ok(())
    }

    /// Default interaction `g(σ_h σ_c† ⊗ A_w† + h.c.)`.
    pub fn default_interaction(&self) -> ComplexMatrix {
        let d = self.d;
        let sigma = ComplexMatrix::ket_bra(2, 0, 1);
        let a_w = ComplexMatrix::from_fn(d, d, |r, c| if c == r + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let qubits = kron(&sigma, &sigma.adjoint()).expect("4x4");
        let term = kron(&qubits, &a_w.adjoint()).expect("4d x 4d");
        (&term + &term.adjoint()).scale_real(self.g)
    }
}

fn embed(h: &ComplexMatrix, c: &ComplexMatrix, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron(&kron(h, c)?, w)
}

fn thermal_qubit(beta: f64, e: f64) -> ComplexMatrix {
    let boltz = (-beta * e).exp();
    let z = 1.0 + boltz;
    ComplexMatrix::real_diag(&[1.0 / z, boltz / z])
}

/// Thermal machine clock on `qubit_h ⊗ qubit_c ⊗ ladder(d)`. The ladder is
/// pumped by the hot/cold qubit pair and ticks by decaying from its top
/// level. Cut-off register with [`DEFAULT_N_TICKS`] ticks.
pub fn thermodynamic_clock(params: &ThermoParams) -> Result<ClockSpec> {
    params.validate()?;
    if params.beta_h >= params.beta_c {
        log::warn!(
            "hot bath is not hotter than the cold bath (beta_h = {}, beta_c = {})",
            params.beta_h,
            params.beta_c
        );
    }
    let d = params.d;
    let i2 = ComplexMatrix::identity(2);
    let iw = ComplexMatrix::identity(d);
    let sigma = ComplexMatrix::ket_bra(2, 0, 1);
    let excited = ComplexMatrix::ket_bra(2, 1, 1);
    let e_w = params.e_h - params.e_c;
    let ladder_energy = ComplexMatrix::real_diag(&(0..d).map(|n| n as f64 * e_w).collect::<Vec<_>>());

    let h0 = &(&embed(&excited, &i2, &iw)?.scale_real(params.e_h) + &embed(&i2, &excited, &iw)?.scale_real(params.e_c))
        + &embed(&i2, &i2, &ladder_energy)?;
    let h_int = match &params.h_int {
        Some(m) => m.clone(),
        None => params.default_interaction(),
    };
    if h_int.rows() != 4 * d || h_int.cols() != 4 * d {
        return Err(Error::Shape(format!("interaction must be {0}x{0}", 4 * d)));
    }
    let h = &h0 + &h_int;

    let sigma_h = embed(&sigma, &i2, &iw)?;
    let sigma_c = embed(&i2, &sigma, &iw)?;
    let l_ops = vec![
        sigma_h.scale_real(params.gamma_h.sqrt()),
        sigma_h.adjoint().scale_real((params.gamma_h * (-params.beta_h * params.e_h).exp()).sqrt()),
        sigma_c.scale_real(params.gamma_c.sqrt()),
        sigma_c.adjoint().scale_real((params.gamma_c * (-params.beta_c * params.e_c).exp()).sqrt()),
    ];
    let j = embed(&i2, &i2, &ComplexMatrix::ket_bra(d, 0, d - 1))?.scale_real(params.gamma.sqrt());

    let rho = embed(
        &thermal_qubit(params.beta_h, params.e_h),
        &thermal_qubit(params.beta_c, params.e_c),
        &ComplexMatrix::ket_bra(d, 0, 0),
    )?;
    ClockParts {
        n_ticks: DEFAULT_N_TICKS,
        mode: RegisterMode::CutOff,
        h,
        l_ops,
        j_ops: vec![j],
        rho_c0: DensityMatrix::new(rho)?,
        k0: 0,
    }
    .validate()
}

/// How the quasi-ideal clock leaves the clockwork after a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuasiIdealVariant {
    /// `J_j = √(2V_j) |ψ><t_j|`: every tick resets to the initial state.
    #[default]
    Reset,
    /// Single `J = Σ_j √(2V_j) |t_j><t_j|`: the clockwork keeps running.
    NonReset,
}

/// Gaussian parameters of the quasi-ideal clock. Positions are measured on
/// the ring of `d` time states, so distances wrap around.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiIdealParams {
    pub sigma: f64,
    pub n0: f64,
    pub j0: f64,
    pub j_v: f64,
    pub v0: f64,
    pub sigma_v: f64,
    pub variant: QuasiIdealVariant,
}

impl QuasiIdealParams {
    pub fn defaults(d: usize) -> Self {
        let df = d as f64;
        Self {
            sigma: df.sqrt(),
            n0: df / 2.0,
            j0: 0.0,
            j_v: df / 2.0,
            v0: df / (2.0 * PI),
            sigma_v: df.sqrt() / 2.0,
            variant: QuasiIdealVariant::Reset,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let df = d as f64;
        let all = [self.sigma, self.n0, self.j0, self.j_v, self.v0, self.sigma_v];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("quasi-ideal parameters must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < df) {
            return Err(Error::Validation(format!("sigma = {} outside (0, {d})", self.sigma)));
        }
        if self.sigma_v <= 0.0 {
            return Err(Error::Validation(format!("sigma_V = {} must be positive", self.sigma_v)));
        }
        for (name, x) in [("n0", self.n0), ("j0", self.j0), ("jV", self.j_v)] {
            if !(0.0..df).contains(&x) {
                return Err(Error::Validation(format!("{name} = {x} outside [0, {d})")));
            }
        }
        if self.v0 < 0.0 {
            return Err(Error::Validation(format!("V0 = {} must be non-negative", self.v0)));
        }
        Ok(())
    }

    /// Tick potential `V_j = V0 exp(-π Δ(j, jV)² / σ_V²)`.
    pub fn potential(&self, d: usize) -> Vec<f64> {
        (0..d)
            .map(|j| {
                let x = ring_offset(j as f64 - self.j_v, d);
                self.v0 * (-PI * x * x / (self.sigma_v * self.sigma_v)).exp()
            })
            .collect()
    }

    /// Normalized amplitudes `<t_j|ψ>` of the initial Gaussian wave packet.
    pub fn initial_amplitudes(&self, d: usize) -> Vec<C64> {
        let raw: Vec<C64> = (0..d)
            .map(|j| {
                let x = ring_offset(j as f64 - self.j0, d);
                let env = (-PI * x * x / (self.sigma * self.sigma)).exp();
                C64::from_polar(env, 2.0 * PI * self.n0 * x / d as f64)
            })
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        raw.into_iter().map(|a| a / norm).collect()
    }

    /// `Σ_j V_j |<t_j|ψ>|²`, the initial tick rate over two.
    pub fn overlap(&self, d: usize) -> f64 {
        self.potential(d)
            .iter()
            .zip(self.initial_amplitudes(d))
            .map(|(v, a)| v * a.norm_sqr())
            .sum()
    }
}

/// Signed offset on a ring of `d` sites, in `(-d/2, d/2]`.
fn ring_offset(x: f64, d: usize) -> f64 {
    let df = d as f64;
    let r = x.rem_euclid(df);
    if r > df / 2.0 {
        r - df
    } else {
        r
    }
}

/// Quasi-ideal clock of dimension `d`: a Gaussian packet rotating through
/// the time basis under `H = Σ_n (2π/d) n |E_n><E_n|`, ticking where the
/// potential `V` is large. Cut-off register with [`DEFAULT_N_TICKS`] ticks.
pub fn quasi_ideal_clock(d: usize, params: &QuasiIdealParams) -> Result<ClockSpec> {
    if d < 2 {
        return Err(Error::Validation("quasi-ideal clock needs d >= 2".into()));
    }
    params.validate(d)?;
    let df = d as f64;
    let omega = 2.0 * PI / df;
    let h = ComplexMatrix::from_fn(d, d, |j, k| {
        let mut acc = C64::new(0.0, 0.0);
        for n in 1..d {
            acc += C64::from_polar(omega * n as f64, 2.0 * PI * (n * (j + d - k) % d) as f64 / df);
        }
        acc / df
    })
    .hermitian_part();

    let psi = params.initial_amplitudes(d);
    let v = params.potential(d);
    let j_ops = match params.variant {
        QuasiIdealVariant::Reset => (0..d)
            .map(|j| {
                let s = (2.0 * v[j]).sqrt();
                ComplexMatrix::from_fn(d, d, |r, c| if c == j { psi[r] * s } else { C64::new(0.0, 0.0) })
            })
            .collect(),
        QuasiIdealVariant::NonReset => {
            vec![ComplexMatrix::real_diag(&v.iter().map(|x| (2.0 * x).sqrt()).collect::<Vec<_>>())]
        }
    };
    ClockParts {
        n_ticks: DEFAULT_N_TICKS,
        mode: RegisterMode::CutOff,
        h,
        l_ops: vec![],
        j_ops,
        rho_c0: DensityMatrix::pure(&psi)?,
        k0: 0,
    }
    .validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::clockwork_generators;

    #[test]
    fn ladder_shapes() {
        let s = ladder_clock(4).unwrap();
        assert_eq!(s.l_ops().len(), 3);
        assert_eq!(s.j_ops().len(), 1);
        let one = ladder_clock(1).unwrap();
        assert!(one.l_ops().is_empty());
        assert_eq!(one.j_ops()[0], ComplexMatrix::identity(1));
        assert!(ladder_clock(0).is_err());
    }

    #[test]
    fn thermo_tick_rate_when_pinned_at_top() {
        let p = ThermoParams {
            gamma: 7.5,
            ..ThermoParams::default()
        };
        let s = thermodynamic_clock(&p).unwrap();
        let d = p.d;
        let mut top = ComplexMatrix::zeros(4 * d, 4 * d);
        top[(d - 1, d - 1)] = C64::new(1.0, 0.0);
        let rate = (&s.tick_rate_operator() * &top).trace().re;
        assert!((rate - 7.5).abs() < 1e-12);
    }

    #[test]
    fn thermo_rejects_bad_rates() {
        let p = ThermoParams {
            gamma_h: 0.0,
            ..ThermoParams::default()
        };
        assert!(matches!(thermodynamic_clock(&p), Err(Error::Validation(_))));
        let p = ThermoParams {
            d: 1,
            ..ThermoParams::default()
        };
        assert!(thermodynamic_clock(&p).is_err());
    }

    #[test]
    fn quasi_ideal_hamiltonian_spectrum_is_integer_multiples() {
        let d = 6;
        let s = quasi_ideal_clock(d, &QuasiIdealParams::defaults(d)).unwrap();
        let eig = crate::linalg::hermitian_eigen(s.h()).unwrap();
        for (n, e) in eig.values.iter().enumerate() {
            assert!((e - 2.0 * PI * n as f64 / d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_ideal_validation() {
        let d = 8;
        let mut p = QuasiIdealParams::defaults(d);
        p.sigma = 0.0;
        assert!(matches!(quasi_ideal_clock(d, &p), Err(Error::Validation(_))));
        let mut p = QuasiIdealParams::defaults(d);
        p.v0 = 0.0;
        assert_eq!(quasi_ideal_clock(d, &p).unwrap_err(), Error::NeverTicks);
    }

    #[test]
    fn far_apart_gaussians_barely_overlap() {
        let d = 64;
        let p = QuasiIdealParams {
            sigma: 2.0,
            sigma_v: 1.5,
            j0: 0.0,
            j_v: 32.0,
            ..QuasiIdealParams::defaults(d)
        };
        assert!(p.overlap(d) < 1e-6 * p.v0);
    }

    #[test]
    fn reset_variant_rate_matches_overlap() {
        let d = 8;
        let p = QuasiIdealParams::defaults(d);
        let s = quasi_ideal_clock(d, &p).unwrap();
        let rate = (&s.tick_rate_operator() * s.rho_c0().matrix()).trace().re;
        assert!((rate - 2.0 * p.overlap(d)).abs() < 1e-12);
        let g = clockwork_generators(&s).unwrap();
        assert_eq!(g.h_eff.rows(), d);
    }
}
