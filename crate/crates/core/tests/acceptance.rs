//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Tolerances and runtime budgets are fixed here.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ticksim::axioms::{check_measured_equivalence, run_suite, SuiteOptions};
use ticksim::clock::{
    canonicalize_jumps, clockwork_generators, ladder_clock, quasi_ideal_clock, random_clock,
    thermodynamic_clock, ClockSpec, QuasiIdealParams, QuasiIdealVariant, RegisterMode, ThermoParams,
};
use ticksim::evolve::{channel_at, condition4_samples, euler_composition, JointDynamics, TimeGrid, CONDITION4_WINDOW};
use ticksim::linalg::{kron, random_ginibre, ComplexMatrix, DensityMatrix, Superoperator, C64};
use ticksim::stats::{accuracy, delay_function, empirical_accuracy, sample_trajectories, TickRecord};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: ticksim::Error) -> String {
    format!("error: {e}")
}

fn r_value(spec: &ClockSpec, k: usize, t_max: f64, steps: usize) -> Result<f64, String> {
    let grid = TimeGrid::to_t_max(t_max, steps).map_err(err)?;
    let df = delay_function(spec, k, &grid).map_err(err)?;
    Ok(accuracy(&df).map_err(err)?.r_value)
}

fn ladder_r_k() -> Outcome {
    let spec = ladder_clock(10).map_err(err)?;
    let mut msg = String::new();
    let mut ok = true;
    for k in 1..=3usize {
        let r = r_value(&spec, k, 20.0 * (k * 10) as f64, 4000 * k)?;
        let want = (10 * k) as f64;
        let tol = 1e-3 * k as f64;
        ok &= (r - want).abs() <= tol;
        let _ = write!(msg, "R_{k} = {r:.6} (want {want} ± {tol}) ");
    }
    ensure(ok, msg)
}

fn erlang_densities() -> Outcome {
    let grid = TimeGrid::to_t_max(40.0, 4000).map_err(err)?;
    let mut worst = 0.0f64;
    for d in [1usize, 2, 5] {
        let spec = ladder_clock(d).map_err(err)?;
        let df = delay_function(&spec, 1, &grid).map_err(err)?;
        let fact: f64 = (1..d).map(|i| i as f64).product();
        for (i, p) in df.density.iter().enumerate() {
            let t = grid.time(i);
            let want = t.powi(d as i32 - 1) * (-t).exp() / fact;
            worst = worst.max((p - want).abs());
        }
    }
    ensure(worst <= 1e-8, format!("max pointwise deviation {worst:e} (tol 1e-8)"))
}

fn quasi_ideal_scaling() -> Outcome {
    let mut r = Vec::new();
    for d in [8usize, 16, 32] {
        let spec = quasi_ideal_clock(d, &QuasiIdealParams::defaults(d)).map_err(err)?;
        let t_max = 6.0 * d as f64;
        r.push(r_value(&spec, 1, t_max, (t_max * 200.0) as usize)?);
    }
    let (q1, q2) = (r[1] / r[0], r[2] / r[1]);
    let ok = q1 > 2.0 && q2 > 2.0 && r[1] > 16.0 && r[2] > 32.0;
    ensure(
        ok,
        format!(
            "R_1(8) = {:.4}, R_1(16) = {:.4}, R_1(32) = {:.4}; ratios {q1:.4}, {q2:.4} (> 2)",
            r[0], r[1], r[2]
        ),
    )
}

/// `-i(Ĥ X − X Ĥ†) + Σ L X L†` with `Ĥ = H − (i/2) Γ |d−1><d−1|_w`, built
/// from the thermal-machine parameters without going through the factory's
/// jump operators.
fn thermo_oracle(p: &ThermoParams, spec: &ClockSpec, x: &ComplexMatrix) -> ComplexMatrix {
    let d = p.d;
    let top = kron(
        &ComplexMatrix::identity(4),
        &ComplexMatrix::ket_bra(d, d - 1, d - 1),
    )
    .unwrap();
    let mut damp = top.scale_real(p.gamma);
    for l in spec.l_ops() {
        damp = &damp + &(&l.adjoint() * l);
    }
    let h_hat = spec.h() - &damp.scale(C64::new(0.0, 0.5));
    let mi = C64::new(0.0, -1.0);
    let mut out = (&(&h_hat * x) - &(x * &h_hat.adjoint())).scale(mi);
    for l in spec.l_ops() {
        out = &out + &(&(l * x) * &l.adjoint());
    }
    out
}

fn thermo_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let e_c = rng.random_range(0.2..2.0);
        let p = ThermoParams {
            e_h: e_c + rng.random_range(0.2..2.0),
            e_c,
            beta_h: rng.random_range(0.1..1.0),
            beta_c: rng.random_range(1.0..6.0),
            gamma_h: rng.random_range(0.1..2.0),
            gamma_c: rng.random_range(0.1..2.0),
            g: rng.random_range(0.1..1.0),
            gamma: rng.random_range(0.1..3.0),
            d: 3,
            h_int: None,
        };
        let spec = thermodynamic_clock(&p).map_err(err)?;
        let gens = clockwork_generators(&spec).map_err(err)?;
        let n = spec.d();
        for _ in 0..4 {
            let x = random_ginibre(n, &mut rng);
            worst = worst.max(gens.no_tick.apply(&x).max_abs_diff(&thermo_oracle(&p, &spec, &x)));
        }
    }
    ensure(worst <= 1e-12, format!("max entry deviation {worst:e} (tol 1e-12)"))
}

fn measured_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ladder = ladder_clock(2)
        .and_then(|s| s.with_register(2, RegisterMode::CutOff))
        .map_err(err)?;
    let random = random_clock(&mut rng, 2, 2, RegisterMode::CutOff).map_err(err)?;
    let mut msg = String::new();
    let mut ok = true;
    for (label, spec) in [("ladder", &ladder), ("random", &random)] {
        let dynamics = JointDynamics::from_spec(spec).map_err(err)?;
        let rho = DensityMatrix::random(2, &mut rng);
        let cuts: [f64; 2] = [rng.random_range(0.05..0.5), rng.random_range(0.5..0.95)];
        let arbitrary = [cuts[0], cuts[1] - cuts[0], 1.0 - cuts[1]];
        let r = check_measured_equivalence(&dynamics, &rho, 0, &arbitrary, 1e-10).map_err(err)?;
        ok &= r.passed;
        let _ = write!(msg, "{label}: N=3 {:.1e}", r.max_deviation);
        for n in [2usize, 4, 8] {
            let times = vec![1.0 / n as f64; n];
            let r = check_measured_equivalence(&dynamics, &rho, 0, &times, 1e-10).map_err(err)?;
            ok &= r.passed;
            let _ = write!(msg, ", N={n} {:.1e}", r.max_deviation);
        }
        msg.push_str("; ");
    }
    ensure(ok, msg)
}

fn axiom_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = SuiteOptions::default();
    let (lo, hi) = CONDITION4_WINDOW;
    let mut failures = Vec::new();
    let mut checks = 0;
    for i in 0..10 {
        let d = rng.random_range(2..=3);
        let n_ticks = rng.random_range(1..=3);
        let mode = if i % 2 == 0 { RegisterMode::Periodic } else { RegisterMode::CutOff };
        let spec = random_clock(&mut rng, d, n_ticks, mode).map_err(err)?;
        for r in run_suite(&spec, &SuiteOptions { seed: i, ..opts.clone() }).map_err(err)? {
            checks += 1;
            if !r.passed {
                failures.push(format!("spec {i}: {} {:e}", r.check_name, r.max_deviation));
            }
        }
        // Generic clocks have a first-order tick probability and a
        // second-order skip probability, so the full window applies.
        let dynamics = JointDynamics::from_spec(&spec).map_err(err)?;
        let rho = DensityMatrix::random(d, &mut rng);
        let samples = condition4_samples(&dynamics, rho.matrix(), &opts.condition4_deltas).map_err(err)?;
        for a in &samples {
            if let Some(b) = samples.iter().find(|b| b.k == a.k && b.delta == a.delta / 2.0) {
                // Without skip targets the ratio is identically zero.
                let vacuous = a.numerator == 0.0 && b.numerator == 0.0;
                if a.denominator > 1e-14 && b.denominator > 1e-14 && !vacuous {
                    checks += 1;
                    let q = b.ratio() / a.ratio();
                    if !(lo..=hi).contains(&q) {
                        failures.push(format!("spec {i}: condition4 window q = {q}"));
                    }
                }
            }
        }
    }
    ensure(
        failures.is_empty(),
        format!("{checks} checks over 10 specs, failures: {failures:?}"),
    )
}

fn euler_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = random_clock(&mut rng, 2, 2, RegisterMode::CutOff).map_err(err)?;
    let rho = DensityMatrix::random(2, &mut rng);
    let exact = channel_at(&spec, 1.0, 0, &rho).map_err(err)?;
    let errors: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            euler_composition(&spec, 1.0, n, 0, &rho)
                .map(|m| m.max_abs_diff(exact.matrix()))
                .map_err(err)
        })
        .collect::<Result<_, _>>()?;
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    ensure(
        ratios.iter().all(|q| (1.5..=2.5).contains(q)),
        format!("errors {:.3e}, {:.3e}, {:.3e}, ratios {:.4}, {:.4} (in [1.5, 2.5])", errors[0], errors[1], errors[2], ratios[0], ratios[1]),
    )
}

fn fingerprint(records: &[TickRecord]) -> String {
    let mut s = String::new();
    for r in records {
        for t in &r.tick_times {
            let _ = writeln!(s, "{},{:016x}", r.trajectory_id, t.to_bits());
        }
    }
    s
}

fn sample_with_threads(spec: &ClockSpec, threads: usize) -> Result<Vec<TickRecord>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| sample_trajectories(spec, 60.0, 100_000, 42)).map_err(err)
}

fn monte_carlo() -> Outcome {
    let spec = ladder_clock(5).map_err(err)?;
    let first = sample_with_threads(&spec, 1)?;
    let again = sample_with_threads(&spec, 1)?;
    let wide = sample_with_threads(&spec, 8)?;
    let e = empirical_accuracy(&first, 1).map_err(err)?;
    let z = (e.summary.r_value - 5.0) / e.se_r;
    let base = fingerprint(&first);
    let same_seed = base == fingerprint(&again);
    let same_threads = base == fingerprint(&wide);
    ensure(
        z.abs() <= 3.0 && same_seed && same_threads,
        format!(
            "R_1 = {:.4} ± {:.4} (z = {z:.2}), rerun identical: {same_seed}, 1 vs 8 threads identical: {same_threads}",
            e.summary.r_value, e.se_r
        ),
    )
}

fn canonicalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let basis: Vec<ComplexMatrix> = (0..3).map(|_| random_ginibre(2, &mut rng)).collect();
    let ops: Vec<ComplexMatrix> = (0..9)
        .map(|_| {
            basis.iter().fold(ComplexMatrix::zeros(2, 2), |acc, b| {
                &acc + &b.scale(C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            })
        })
        .collect();
    let reduced = canonicalize_jumps(&ops, 2).map_err(err)?;
    let before = Superoperator::kraus(2, &ops).map_err(err)?;
    let after = Superoperator::kraus(2, &reduced).map_err(err)?;
    let dev = before.max_abs_diff(&after);
    ensure(
        reduced.len() <= 3 && dev <= 1e-10,
        format!("9 operators -> {}, tick map deviation {dev:e} (tol 1e-10)", reduced.len()),
    )
}

fn reset_law() -> Outcome {
    let d = 8;
    let params = QuasiIdealParams {
        variant: QuasiIdealVariant::Reset,
        ..QuasiIdealParams::defaults(d)
    };
    let spec = quasi_ideal_clock(d, &params).map_err(err)?;
    let mut r = Vec::new();
    for k in 1..=3usize {
        let t_max = 6.0 * (d * k) as f64;
        r.push(r_value(&spec, k, t_max, (t_max * 200.0) as usize)?);
    }
    let dev: Vec<f64> = (0..3).map(|i| (r[i] - (i + 1) as f64 * r[0]).abs() / ((i + 1) as f64 * r[0])).collect();
    ensure(
        dev.iter().all(|x| *x < 5e-3),
        format!(
            "R_k = {:.5}, {:.5}, {:.5}; relative deviation from k R_1 {:.2e}, {:.2e} (< 0.5%)",
            r[0], r[1], r[2], dev[1], dev[2]
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "ladder R_k = k d", budget: Duration::from_secs(5), run: ladder_r_k },
        Criterion { id: 2, name: "Erlang delay densities", budget: Duration::from_secs(2), run: erlang_densities },
        Criterion { id: 3, name: "quasi-ideal R_1 scaling", budget: Duration::from_secs(60), run: quasi_ideal_scaling },
        Criterion { id: 4, name: "thermal no-tick generator", budget: Duration::from_secs(1), run: thermo_identity },
        Criterion { id: 5, name: "measured-register equivalence", budget: Duration::from_secs(5), run: measured_equivalence },
        Criterion { id: 6, name: "axiom suite on random clocks", budget: Duration::from_secs(30), run: axiom_suite },
        Criterion { id: 7, name: "Euler composition convergence", budget: Duration::from_secs(10), run: euler_convergence },
        Criterion { id: 8, name: "Monte Carlo consistency", budget: Duration::from_secs(60), run: monte_carlo },
        Criterion { id: 9, name: "jump canonicalization", budget: Duration::from_secs(1), run: canonicalization },
        Criterion { id: 10, name: "reset clock R_k = k R_1", budget: Duration::from_secs(30), run: reset_law },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok(m) => (in_budget, m),
            Err(m) => (false, m),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} | {} | {:.2}s (budget {}s) | {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
