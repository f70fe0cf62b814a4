//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use ticksim::clock::{
    ladder_clock, quasi_ideal_clock, thermodynamic_clock, ClockParts, ClockSpec, QuasiIdealParams, QuasiIdealVariant,
    RegisterMode, ThermoParams,
};
use ticksim::linalg::{ComplexMatrix, DensityMatrix, C64};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub clock: ClockConfig,
    /// Second clock for the alternate-ticks game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_b: Option<ClockConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// Tick indices for `delay`, `accuracy` and empirical accuracy.
    #[serde(default = "default_ticks")]
    pub ticks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

fn default_ticks() -> Vec<usize> {
    vec![1]
}

/// Either `{"builtin": name, "params": {...}}` or `{"explicit": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<ExplicitClock>,
}

/// Complex matrices as rows of `[re, im]` pairs.
pub type MatrixConfig = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExplicitClock {
    pub h: MatrixConfig,
    #[serde(default)]
    pub l_ops: Vec<MatrixConfig>,
    pub j_ops: Vec<MatrixConfig>,
    pub rho_c0: MatrixConfig,
    pub n_ticks: usize,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub k0: usize,
}

fn default_mode() -> String {
    "cut_off".into()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub seed: u64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// `"pass"` (default) or `"fail"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<MatrixConfig>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A parsed configuration and the hash of its canonical form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

/// SHA-256 of the compact serialization with sorted keys.
pub fn config_hash(value: &Value) -> String {
    // serde_json maps keep keys sorted, so this is canonical.
    let canonical = serde_json::to_string(value).expect("JSON values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
    let hash = config_hash(&value);
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
    config.validate()?;
    Ok(LoadedConfig { config, hash })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        if let Some(g) = &self.grid {
            if !(g.t_max.is_finite() && g.t_max > 0.0) || g.steps == 0 {
                return Err(CliError::usage("grid needs finite t_max > 0 and steps >= 1"));
            }
        }
        if let Some(t) = &self.trajectories {
            if !(t.t_max.is_finite() && t.t_max > 0.0) || t.n == 0 {
                return Err(CliError::usage("trajectories need finite t_max > 0 and n >= 1"));
            }
        }
        for c in &self.checks {
            if let Some(tol) = c.tol {
                if !tol.is_finite() || tol < 0.0 {
                    return Err(CliError::usage(format!("check {}: tolerance must be finite and >= 0", c.name)));
                }
            }
        }
        Ok(())
    }
}

fn mode_from(name: &str) -> Result<RegisterMode, CliError> {
    match name {
        "periodic" => Ok(RegisterMode::Periodic),
        "cut_off" | "cutoff" => Ok(RegisterMode::CutOff),
        other => Err(CliError::usage(format!("unknown register mode '{other}'"))),
    }
}

fn mode_name(mode: RegisterMode) -> &'static str {
    match mode {
        RegisterMode::Periodic => "periodic",
        RegisterMode::CutOff => "cut_off",
    }
}

pub fn matrix_from(m: &MatrixConfig, what: &str) -> Result<ComplexMatrix, CliError> {
    let rows: Vec<Vec<C64>> = m
        .iter()
        .map(|row| row.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::usage(format!("{what} has non-finite entries")));
    }
    ComplexMatrix::from_rows(&rows).map_err(|e| CliError::usage(format!("{what}: {e}")))
}

pub fn matrix_to(m: &ComplexMatrix) -> MatrixConfig {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

impl ExplicitClock {
    pub fn from_spec(spec: &ClockSpec) -> Self {
        Self {
            h: matrix_to(spec.h()),
            l_ops: spec.l_ops().iter().map(matrix_to).collect(),
            j_ops: spec.j_ops().iter().map(matrix_to).collect(),
            rho_c0: matrix_to(spec.rho_c0().matrix()),
            n_ticks: spec.n_ticks(),
            mode: mode_name(spec.mode()).into(),
            k0: spec.k0(),
        }
    }

    pub fn to_spec(&self) -> Result<ClockSpec, CliError> {
        let ops = |list: &[MatrixConfig], name: &str| -> Result<Vec<ComplexMatrix>, CliError> {
            list.iter()
                .enumerate()
                .map(|(i, m)| matrix_from(m, &format!("{name}_{i}")))
                .collect()
        };
        let rho = DensityMatrix::new(matrix_from(&self.rho_c0, "rho_c0")?)?;
        Ok(ClockParts {
            n_ticks: self.n_ticks,
            mode: mode_from(&self.mode)?,
            h: matrix_from(&self.h, "h")?,
            l_ops: ops(&self.l_ops, "L")?,
            j_ops: ops(&self.j_ops, "J")?,
            rho_c0: rho,
            k0: self.k0,
        }
        .validate()?)
    }
}

/// Reads typed builtin parameters, rejecting unknown names.
struct Params<'a> {
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(map: &'a Map<String, Value>) -> Self {
        Self { map, used: Vec::new() }
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::usage(format!("parameter {key} must be a finite number"))),
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> Result<usize, CliError> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| CliError::usage(format!("parameter {key} must be a non-negative integer"))),
        }
    }

    fn string(&mut self, key: &'static str) -> Result<Option<String>, CliError> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::usage(format!("parameter {key} must be a string"))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.map.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(CliError::usage(format!("unknown clock parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

fn builtin_spec(name: &str, map: &Map<String, Value>) -> Result<ClockSpec, CliError> {
    let mut p = Params::new(map);
    let spec = match name {
        "ladder" => ladder_clock(p.usize("d", 2)?)?,
        "thermodynamic" => {
            let base = ThermoParams::default();
            let params = ThermoParams {
                e_h: p.f64("e_h", base.e_h)?,
                e_c: p.f64("e_c", base.e_c)?,
                beta_h: p.f64("beta_h", base.beta_h)?,
                beta_c: p.f64("beta_c", base.beta_c)?,
                gamma_h: p.f64("gamma_h", base.gamma_h)?,
                gamma_c: p.f64("gamma_c", base.gamma_c)?,
                g: p.f64("g", base.g)?,
                gamma: p.f64("gamma", base.gamma)?,
                d: p.usize("d", base.d)?,
                h_int: None,
            };
            thermodynamic_clock(&params)?
        }
        "quasi-ideal" => {
            let d = p.usize("d", 8)?;
            let base = QuasiIdealParams::defaults(d);
            let variant = match p.string("variant")?.as_deref() {
                None | Some("reset") => QuasiIdealVariant::Reset,
                Some("non_reset") => QuasiIdealVariant::NonReset,
                Some(other) => return Err(CliError::usage(format!("unknown quasi-ideal variant '{other}'"))),
            };
            let params = QuasiIdealParams {
                sigma: p.f64("sigma", base.sigma)?,
                n0: p.f64("n0", base.n0)?,
                j0: p.f64("j0", base.j0)?,
                j_v: p.f64("j_v", base.j_v)?,
                v0: p.f64("v0", base.v0)?,
                sigma_v: p.f64("sigma_v", base.sigma_v)?,
                variant,
            };
            quasi_ideal_clock(d, &params)?
        }
        other => return Err(CliError::usage(format!("unknown builtin clock '{other}'"))),
    };
    let n_ticks = p.usize("n_ticks", spec.n_ticks())?;
    let mode = match p.string("mode")? {
        Some(m) => mode_from(&m)?,
        None => spec.mode(),
    };
    let k0 = p.usize("k0", spec.k0())?;
    p.finish()?;
    Ok(spec.with_register(n_ticks, mode)?.with_k0(k0)?)
}

impl ClockConfig {
    pub fn to_spec(&self) -> Result<ClockSpec, CliError> {
        match (&self.builtin, &self.explicit) {
            (Some(name), None) => builtin_spec(name, &self.params),
            (None, Some(explicit)) => {
                if !self.params.is_empty() {
                    return Err(CliError::usage("params apply to builtin clocks only"));
                }
                explicit.to_spec()
            }
            _ => Err(CliError::usage("clock needs exactly one of 'builtin' and 'explicit'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = parse_config(r#"{"clock": {"builtin": "ladder", "params": {"d": 3}}, "ticks": [1, 2]}"#).unwrap();
        let b = parse_config("{ \"ticks\":[1,2],\n  \"clock\":{\"params\":{\"d\":3},\"builtin\":\"ladder\"} }").unwrap();
        assert_eq!(a.hash, b.hash);
        let c = parse_config(r#"{"clock": {"builtin": "ladder", "params": {"d": 4}}, "ticks": [1, 2]}"#).unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn clock_needs_exactly_one_form() {
        let both = ClockConfig {
            builtin: Some("ladder".into()),
            params: Map::new(),
            explicit: Some(ExplicitClock::from_spec(&ladder_clock(2).unwrap())),
        };
        assert!(both.to_spec().is_err());
        let neither = ClockConfig {
            builtin: None,
            params: Map::new(),
            explicit: None,
        };
        assert!(neither.to_spec().is_err());
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let mut params = Map::new();
        params.insert("dd".into(), Value::from(3));
        let c = ClockConfig {
            builtin: Some("ladder".into()),
            params,
            explicit: None,
        };
        assert_eq!(c.to_spec().unwrap_err().code, 2);
    }
}
