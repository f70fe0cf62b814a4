use crate::clock::{ClockSpec, RegisterMode};
use crate::error::{Error, Result};
use crate::evolve::{delay_densities, CascadeOptions, TimeGrid};

/// Moments need at least this much of the delay function on the grid.
pub const MIN_MOMENT_MASS: f64 = 0.999;

/// Densities below this are treated as rounding noise; anything more
/// negative is an error.
const DENSITY_NEG_TOL: f64 = -1e-12;

/// Mass may exceed one by this much beyond the quadrature error.
const MASS_EXCESS_TOL: f64 = 1e-6;

/// A density still above this at `t_max` means the horizon is too short.
const TAIL_TOL: f64 = 1e-8;

/// The grid ends before the delay function has settled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonWarning {
    pub mass: f64,
    pub suggested_t_max: f64,
}

/// Density of the `k`-th tick on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFunction {
    pub k: usize,
    pub grid: TimeGrid,
    pub density: Vec<f64>,
    pub mass: f64,
    pub horizon: Option<HorizonWarning>,
}

impl DelayFunction {
    /// Wraps a sampled density, e.g. an analytic one, for [`accuracy`].
    pub fn from_density(k: usize, grid: TimeGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} density samples for {} grid points",
                density.len(),
                grid.len()
            )));
        }
        if let Some((i, &p)) = density
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < DENSITY_NEG_TOL)
        {
            return Err(Error::Invariant(format!(
                "delay density {p:e} at t = {} is negative or not finite",
                grid.time(i)
            )));
        }
        let mass = trapezoid(&density, grid.dt());
        if mass > 1.0 + MASS_EXCESS_TOL + quadrature_error(&density, grid.dt()) {
            return Err(Error::Invariant(format!("delay function mass {mass} exceeds one")));
        }
        let tail = *density.last().expect("grid has points");
        let horizon = (mass < MIN_MOMENT_MASS && tail > TAIL_TOL).then(|| {
            let suggested_t_max = 2.0 * grid.t_max();
            log::warn!("delay function for tick {k} has mass {mass} on the grid; try t_max >= {suggested_t_max}");
            HorizonWarning { mass, suggested_t_max }
        });
        Ok(Self {
            k,
            grid,
            density,
            mass,
            horizon,
        })
    }
}

/// Twice the leading Euler-Maclaurin term `dt²/12 |f'(b) − f'(a)|`, with
/// one-sided differences at the ends.
fn quadrature_error(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let slope_a = (values[1] - values[0]) / dt;
    let slope_b = (values[n - 1] - values[n - 2]) / dt;
    dt * dt / 6.0 * (slope_b - slope_a).abs()
}

/// Trapezoidal integral of equally spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Delay function of the `k`-th tick counted from `ρ_C0`,
/// `P_k(t) = tr[Σ_j J_j† J_j ρ⁽ᵏ⁻¹⁾(t)]`.
pub fn delay_function(spec: &ClockSpec, k: usize, grid: &TimeGrid) -> Result<DelayFunction> {
    delay_function_with(spec, k, grid, &CascadeOptions::default())
}

pub fn delay_function_with(
    spec: &ClockSpec,
    k: usize,
    grid: &TimeGrid,
    opts: &CascadeOptions,
) -> Result<DelayFunction> {
    if k == 0 {
        return Err(Error::Domain("tick index starts at 1".into()));
    }
    if spec.mode() == RegisterMode::CutOff && k > spec.n_ticks() - spec.k0() {
        return Err(Error::Domain(format!(
            "a cut-off register with N_T = {} starting at {} records at most {} ticks, asked for tick {k}",
            spec.n_ticks(),
            spec.k0(),
            spec.n_ticks() - spec.k0()
        )));
    }
    let density = delay_densities(spec, k, grid, opts)?;
    DelayFunction::from_density(k, *grid, density)
}

/// Moments of a delay function and `R = mean² / variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySummary {
    pub k: usize,
    pub mean: f64,
    pub variance: f64,
    pub r_value: f64,
    pub mass: f64,
}

/// Trapezoidal moments of `df`, normalized by its mass.
pub fn accuracy(df: &DelayFunction) -> Result<AccuracySummary> {
    if df.mass < MIN_MOMENT_MASS {
        return Err(Error::Horizon {
            mass: df.mass,
            suggested_t_max: 2.0 * df.grid.t_max(),
        });
    }
    let grid = &df.grid;
    let first: Vec<f64> = df.density.iter().enumerate().map(|(i, p)| grid.time(i) * p).collect();
    let second: Vec<f64> = first.iter().enumerate().map(|(i, p)| grid.time(i) * p).collect();
    let mean = trapezoid(&first, grid.dt()) / df.mass;
    let variance = trapezoid(&second, grid.dt()) / df.mass - mean * mean;
    if !(variance > 1e-12 * mean * mean) {
        return Err(Error::Degenerate(format!(
            "variance {variance:e} is not positive for mean {mean}"
        )));
    }
    Ok(AccuracySummary {
        k: df.k,
        mean,
        variance,
        r_value: mean * mean / variance,
        mass: df.mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ladder_clock;

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&v, 0.1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn erlang_two_moments() {
        let grid = TimeGrid::to_t_max(60.0, 60_000).unwrap();
        let density = grid.times().map(|t| t * (-t).exp()).collect();
        let df = DelayFunction::from_density(1, grid, density).unwrap();
        let acc = accuracy(&df).unwrap();
        assert!((acc.mean - 2.0).abs() < 1e-6);
        assert!((acc.variance - 2.0).abs() < 1e-6);
        assert!((acc.r_value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn short_horizon_warns_and_refuses_moments() {
        let spec = ladder_clock(3).unwrap();
        let grid = TimeGrid::to_t_max(2.0, 200).unwrap();
        let df = delay_function(&spec, 1, &grid).unwrap();
        assert!(df.horizon.is_some());
        assert!(matches!(accuracy(&df), Err(Error::Horizon { .. })));
    }

    #[test]
    fn tick_beyond_cut_off_register_is_rejected() {
        let spec = ladder_clock(2).unwrap();
        let grid = TimeGrid::to_t_max(2.0, 20).unwrap();
        assert!(matches!(delay_function(&spec, 5, &grid), Err(Error::Domain(_))));
    }

    #[test]
    fn point_mass_is_degenerate() {
        let grid = TimeGrid::to_t_max(2.0, 2).unwrap();
        let df = DelayFunction::from_density(1, grid, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(accuracy(&df), Err(Error::Degenerate(_))));
    }
}
