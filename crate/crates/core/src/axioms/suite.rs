use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::clock::clockwork_generators;
use crate::evolve::condition4_deltas;

/// Named checks understood by [`run_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckName {
    SelfTiming,
    SemigroupClockwork,
    SemigroupNoTick,
    Condition1,
    Condition3,
    Condition4,
    Condition5,
    ClassicalRegister,
    ClassicalClockwork,
    KIndependence,
    CptpPositivity,
    CptpTrace,
    MeasuredEquivalence,
    FiniteRunningMemory,
}

impl CheckName {
    pub const ALL: [CheckName; 14] = [
        CheckName::SelfTiming,
        CheckName::SemigroupClockwork,
        CheckName::SemigroupNoTick,
        CheckName::Condition1,
        CheckName::Condition3,
        CheckName::Condition4,
        CheckName::Condition5,
        CheckName::ClassicalRegister,
        CheckName::ClassicalClockwork,
        CheckName::KIndependence,
        CheckName::CptpPositivity,
        CheckName::CptpTrace,
        CheckName::MeasuredEquivalence,
        CheckName::FiniteRunningMemory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::SelfTiming => "self_timing",
            CheckName::SemigroupClockwork => "semigroup_clockwork",
            CheckName::SemigroupNoTick => "semigroup_no_tick",
            CheckName::Condition1 => "condition1",
            CheckName::Condition3 => "condition3",
            CheckName::Condition4 => "condition4",
            CheckName::Condition5 => "condition5",
            CheckName::ClassicalRegister => "classical_register",
            CheckName::ClassicalClockwork => "classical_clockwork",
            CheckName::KIndependence => "k_independence",
            CheckName::CptpPositivity => "cptp_positivity",
            CheckName::CptpTrace => "cptp_trace",
            CheckName::MeasuredEquivalence => "measured_equivalence",
            CheckName::FiniteRunningMemory => "finite_running_memory",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckName::SelfTiming | CheckName::SemigroupClockwork | CheckName::SemigroupNoTick => 1e-9,
            CheckName::Condition1 | CheckName::KIndependence | CheckName::CptpTrace => 1e-10,
            CheckName::MeasuredEquivalence => 1e-10,
            CheckName::Condition3 | CheckName::Condition4 => 0.0,
            CheckName::Condition5 | CheckName::ClassicalRegister | CheckName::ClassicalClockwork => 1e-12,
            CheckName::CptpPositivity => 1e-9,
            CheckName::FiniteRunningMemory => 1e-3,
        }
    }

    /// Whether the check is defined for a register in `mode`.
    pub fn applies_to(self, mode: RegisterMode) -> bool {
        match self {
            CheckName::Condition5 => mode == RegisterMode::CutOff,
            CheckName::KIndependence => mode == RegisterMode::Periodic,
            _ => true,
        }
    }

    /// Part of [`run_suite`]: the checks every generated clock must pass.
    pub fn is_structural(self) -> bool {
        !matches!(
            self,
            CheckName::ClassicalClockwork | CheckName::FiniteRunningMemory | CheckName::MeasuredEquivalence
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown check '{s}'")))
    }
}

/// Inputs shared by the checks in a suite run.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub samples: usize,
    pub seed: u64,
    /// Evolution time for the single-time checks.
    pub t: f64,
    pub semigroup_times: (f64, f64),
    pub condition3_deltas: Vec<f64>,
    pub condition4_deltas: Vec<f64>,
    pub condition5_times: Vec<f64>,
    pub cptp_times: Vec<f64>,
    pub measured_times: Vec<f64>,
    /// Basis for the classical-clockwork check, computational if `None`.
    pub basis: Option<ComplexMatrix>,
    pub grid: TimeGrid,
    pub memory_t: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            t: 0.7,
            semigroup_times: (0.3, 0.45),
            condition3_deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            condition4_deltas: condition4_deltas(),
            condition5_times: vec![0.1, 1.0, 10.0],
            cptp_times: vec![0.1, 1.0],
            measured_times: vec![0.2, 0.3, 0.5],
            basis: None,
            grid: TimeGrid::to_t_max(5.0, 50).expect("valid grid"),
            memory_t: 0.1,
        }
    }
}

/// Runs one check on `spec`; `tol` overrides the check's default.
pub fn run_check(spec: &ClockSpec, name: CheckName, tol: Option<f64>, opts: &SuiteOptions) -> Result<VerificationReport> {
    let tol = tol.unwrap_or(name.default_tolerance());
    let dynamics = JointDynamics::from_spec(spec)?;
    let (t1, t2) = opts.semigroup_times;
    match name {
        CheckName::SelfTiming => semigroup_check("self_timing", dynamics.full(), t1, t2, tol),
        CheckName::SemigroupClockwork => {
            semigroup_check("semigroup_clockwork", &clockwork_generators(spec)?.clockwork, t1, t2, tol)
        }
        CheckName::SemigroupNoTick => {
            semigroup_check("semigroup_no_tick", &clockwork_generators(spec)?.no_tick, t1, t2, tol)
        }
        CheckName::Condition1 => check_condition1(&dynamics, opts.t, opts.samples, opts.seed, tol),
        CheckName::Condition3 => check_condition3(dynamics.full(), &opts.condition3_deltas, tol),
        CheckName::Condition4 => {
            // Full-rank inputs keep the one-tick probability of first order.
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let rho = DensityMatrix::random(spec.d(), &mut rng);
            let mut report = check_condition4(&dynamics, rho.matrix(), &opts.condition4_deltas)?;
            report.tolerance = tol;
            report.passed = report.max_deviation <= tol;
            Ok(report)
        }
        CheckName::Condition5 => check_condition5(&dynamics, &opts.condition5_times, opts.samples, opts.seed, tol),
        CheckName::ClassicalRegister => check_classical_register(&dynamics, opts.t, opts.samples, opts.seed, tol),
        CheckName::ClassicalClockwork => {
            let basis = opts.basis.clone().unwrap_or_else(|| ComplexMatrix::identity(spec.d()));
            check_classical_clockwork(spec, &basis, &opts.grid, tol)
        }
        CheckName::KIndependence => {
            let cw = clockwork_generators(spec)?.clockwork;
            check_k_independence(&dynamics, &cw, opts.t, opts.samples, opts.seed, tol)
        }
        CheckName::CptpPositivity | CheckName::CptpTrace => {
            let (psd_tol, tp_tol) = match name {
                CheckName::CptpPositivity => (tol, CheckName::CptpTrace.default_tolerance()),
                _ => (CheckName::CptpPositivity.default_tolerance(), tol),
            };
            let (psd, tp) = check_cptp(dynamics.full(), &opts.cptp_times, psd_tol, tp_tol)?;
            Ok(if name == CheckName::CptpPositivity { psd } else { tp })
        }
        CheckName::MeasuredEquivalence => {
            check_measured_equivalence(&dynamics, spec.rho_c0(), spec.k0(), &opts.measured_times, tol)
        }
        CheckName::FiniteRunningMemory => {
            let rho_t0 = DensityMatrix::basis(spec.register_dim(), spec.k0())?;
            Ok(check_finite_running_memory(spec, &rho_t0, tol, opts.memory_t)?.1)
        }
    }
}

/// Every structural check that applies to the spec's register mode, at
/// default tolerances.
pub fn run_suite(spec: &ClockSpec, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    CheckName::ALL
        .into_iter()
        .filter(|c| c.is_structural() && c.applies_to(spec.mode()))
        .map(|c| run_check(spec, c, None, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ladder_clock;

    #[test]
    fn names_round_trip() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
        }
        assert!("condition2".parse::<CheckName>().is_err());
    }

    #[test]
    fn ladder_passes_everything() {
        let spec = ladder_clock(3).unwrap().with_register(2, RegisterMode::CutOff).unwrap();
        let opts = SuiteOptions {
            samples: 4,
            ..SuiteOptions::default()
        };
        for c in CheckName::ALL.into_iter().filter(|c| c.applies_to(spec.mode())) {
            let r = run_check(&spec, c, None, &opts).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
