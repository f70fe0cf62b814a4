use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use ticksim::axioms::{run_check, run_suite, CheckName, SuiteOptions};
use ticksim::clock::ClockSpec;
use ticksim::evolve::TimeGrid;
use ticksim::report::VerificationReport;
use ticksim::stats::{
    accuracy, atg_referee, delay_function, empirical_accuracy, sample_trajectories, TickRecord, RNG_ALGORITHM,
};

use crate::config::{load_config, matrix_from, LoadedConfig, RunConfig};
use crate::output::{num, Csv, Manifest, OutputDir};
use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Delay,
    Accuracy,
    Trajectories,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Delay => "delay",
            Command::Accuracy => "accuracy",
            Command::Trajectories => "trajectories",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Runs one command and returns the exit code. Results are written before
/// a nonzero code that only flags a warning.
pub fn run(opts: &Options) -> Result<u8, CliError> {
    let start = Instant::now();
    let LoadedConfig { config, hash } = load_config(&opts.config)?;
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, e.g. in tests.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.outputs.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out or set 'outputs'"))?;
    let spec = config.clock.to_spec()?;
    let mut out = OutputDir::create(&out_dir)?;
    let code = match opts.command {
        Command::Delay => cmd_delay(&config, &spec, &mut out)?,
        Command::Accuracy => cmd_accuracy(&config, &spec, &mut out)?,
        Command::Trajectories => cmd_trajectories(&config, &spec, opts.seed, &mut out)?,
        Command::Verify => cmd_verify(&config, &spec, opts.seed, &mut out)?,
    };
    let mut files = out.files().to_vec();
    files.push("manifest.json".into());
    let manifest = Manifest {
        command: opts.command.name(),
        config_hash: &hash,
        toolkit_version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RNG_ALGORITHM,
        runtime_seconds: start.elapsed().as_secs_f64(),
        files,
    };
    out.write_json("manifest.json", &manifest)?;
    Ok(code)
}

fn grid_of(config: &RunConfig) -> Result<TimeGrid, CliError> {
    let g = config
        .grid
        .ok_or_else(|| CliError::usage("this command needs a 'grid' section"))?;
    Ok(TimeGrid::to_t_max(g.t_max, g.steps)?)
}

fn ticks_of(config: &RunConfig) -> Result<&[usize], CliError> {
    if config.ticks.is_empty() {
        return Err(CliError::usage("'ticks' is empty"));
    }
    if config.ticks.contains(&0) {
        return Err(CliError::usage("tick indices start at 1"));
    }
    Ok(&config.ticks)
}

fn cmd_delay(config: &RunConfig, spec: &ClockSpec, out: &mut OutputDir) -> Result<u8, CliError> {
    let grid = grid_of(config)?;
    let mut code = exit::OK;
    for &k in ticks_of(config)? {
        let df = delay_function(spec, k, &grid)?;
        if let Some(h) = df.horizon {
            eprintln!(
                "warning: tick {k} has mass {} on the grid; try t_max >= {}",
                h.mass, h.suggested_t_max
            );
            code = exit::ACCURACY;
        }
        let mut csv = Csv::new(&["t", "density"]);
        for (i, p) in df.density.iter().enumerate() {
            csv.row(&[num(grid.time(i)), num(*p)]);
        }
        out.write(&format!("delay_k{k}.csv"), &csv.into_string())?;
    }
    Ok(code)
}

fn cmd_accuracy(config: &RunConfig, spec: &ClockSpec, out: &mut OutputDir) -> Result<u8, CliError> {
    let grid = grid_of(config)?;
    let mut csv = Csv::new(&["k", "mean", "variance", "R"]);
    for &k in ticks_of(config)? {
        let acc = accuracy(&delay_function(spec, k, &grid)?)?;
        csv.row(&[k.to_string(), num(acc.mean), num(acc.variance), num(acc.r_value)]);
    }
    out.write("accuracy.csv", &csv.into_string())?;
    Ok(exit::OK)
}

fn ticks_csv(records: &[TickRecord]) -> String {
    let mut csv = Csv::new(&["trajectory_id", "tick_index", "time"]);
    for r in records {
        for (i, t) in r.tick_times.iter().enumerate() {
            csv.row(&[r.trajectory_id.to_string(), (i + 1).to_string(), num(*t)]);
        }
    }
    csv.into_string()
}

fn empirical_csv(records: &[TickRecord], ticks: &[usize]) -> Result<String, CliError> {
    let mut csv = Csv::new(&[
        "k",
        "usable",
        "excluded",
        "excluded_truncated",
        "mean",
        "variance",
        "R",
        "se_mean",
        "se_variance",
        "se_R",
    ]);
    for &k in ticks {
        match empirical_accuracy(records, k) {
            Ok(e) => csv.row(&[
                k.to_string(),
                e.usable.to_string(),
                e.excluded.to_string(),
                e.excluded_truncated.to_string(),
                num(e.summary.mean),
                num(e.summary.variance),
                num(e.summary.r_value),
                num(e.se_mean),
                num(e.se_variance),
                num(e.se_r),
            ]),
            Err(e @ (ticksim::Error::InsufficientData { .. } | ticksim::Error::Degenerate(_))) => {
                eprintln!("warning: no empirical accuracy for tick {k}: {e}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(csv.into_string())
}

fn cmd_trajectories(
    config: &RunConfig,
    spec: &ClockSpec,
    seed: Option<u64>,
    out: &mut OutputDir,
) -> Result<u8, CliError> {
    let tc = config
        .trajectories
        .ok_or_else(|| CliError::usage("this command needs a 'trajectories' section"))?;
    let ticks = ticks_of(config)?;
    let seed = seed.unwrap_or(tc.seed);
    let a = sample_trajectories(spec, tc.t_max, tc.n, seed)?;
    out.write("ticks.csv", &ticks_csv(&a))?;
    out.write("empirical_accuracy.csv", &empirical_csv(&a, ticks)?)?;
    if let Some(clock_b) = &config.clock_b {
        let spec_b = clock_b.to_spec()?;
        // The second clock draws from the next seed so that identical
        // clocks still produce independent streams.
        let b = sample_trajectories(&spec_b, tc.t_max, tc.n, seed.wrapping_add(1))?;
        out.write("ticks_b.csv", &ticks_csv(&b))?;
        out.write("empirical_accuracy_b.csv", &empirical_csv(&b, ticks)?)?;
        let summary = atg_referee(&a, &b)?;
        let mut csv = Csv::new(&["game_id", "length", "winner"]);
        for g in &summary.games {
            let play = g.natural();
            csv.row(&[g.game_id.to_string(), play.length.to_string(), play.outcome.label().to_string()]);
        }
        out.write("atg.csv", &csv.into_string())?;
    }
    Ok(exit::OK)
}

#[derive(Debug, Serialize)]
struct CheckResult {
    passed: bool,
    max_deviation: f64,
    tolerance: f64,
    expect: &'static str,
}

fn cmd_verify(config: &RunConfig, spec: &ClockSpec, seed: Option<u64>, out: &mut OutputDir) -> Result<u8, CliError> {
    let mut opts = SuiteOptions::default();
    if let Some(v) = config.verify {
        if let Some(s) = v.samples {
            opts.samples = s;
        }
        if let Some(s) = v.seed {
            opts.seed = s;
        }
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let mut results: Vec<(VerificationReport, bool)> = Vec::new();
    if config.checks.is_empty() {
        results.extend(run_suite(spec, &opts)?.into_iter().map(|r| (r, true)));
    }
    for c in &config.checks {
        let name: CheckName = c.name.parse()?;
        let expect_pass = match c.expect.as_deref() {
            None | Some("pass") => true,
            Some("fail") => false,
            Some(other) => return Err(CliError::usage(format!("expect must be 'pass' or 'fail', got '{other}'"))),
        };
        if !name.applies_to(spec.mode()) {
            return Err(CliError::usage(format!(
                "check {name} does not apply to a {:?} register",
                spec.mode()
            )));
        }
        let mut check_opts = opts.clone();
        if let Some(b) = &c.basis {
            check_opts.basis = Some(matrix_from(b, "basis")?);
        }
        results.push((run_check(spec, name, c.tol, &check_opts)?, expect_pass));
    }
    let mut code = exit::OK;
    let mut map = BTreeMap::new();
    for (r, expect_pass) in results {
        if r.passed != expect_pass {
            eprintln!(
                "check {} {} (max deviation {:e}, tolerance {:e})",
                r.check_name,
                if r.passed { "passed but was expected to fail" } else { "failed" },
                r.max_deviation,
                r.tolerance
            );
            code = 1;
        }
        map.insert(
            r.check_name.clone(),
            CheckResult {
                passed: r.passed,
                max_deviation: r.max_deviation,
                tolerance: r.tolerance,
                expect: if expect_pass { "pass" } else { "fail" },
            },
        );
    }
    out.write_json("verify.json", &map)?;
    Ok(code)
}
