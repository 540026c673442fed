//! Flat JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// Parameter a sweep axis varies. `load` sets `lambda = load / n_sensors`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NSensors,
    Lambda,
    Load,
    Alpha,
    Beta,
    Eps,
    Psi,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NSensors => "n_sensors",
            SweepParam::Lambda => "lambda",
            SweepParam::Load => "load",
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Eps => "eps",
            SweepParam::Psi => "psi",
        }
    }

    pub fn apply(self, mut p: SystemParams, value: f64) -> SystemParams {
        match self {
            SweepParam::NSensors => p.n_sensors = value.round() as usize,
            SweepParam::Lambda => p.lambda = value,
            SweepParam::Load => p.lambda = value / p.n_sensors as f64,
            SweepParam::Alpha => p.alpha = value,
            SweepParam::Beta => p.beta = value,
            SweepParam::Eps => p.eps = value,
            SweepParam::Psi => p.psi = value,
        }
        p
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl SweepAxis {
    /// Grid values, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.min];
        }
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k == n - 1 {
                    return self.max;
                }
                let f = k as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    /// Parses `param:min:max:points[:log|:linear]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(Error::Config(format!("sweep `{s}` must look like param:min:max:points[:log]")));
        }
        let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Config(format!("sweep `{s}`: `{x}` is not a number")));
        let points = parts[3]
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("sweep `{s}`: `{}` is not a point count", parts[3])))?;
        let scale = match parts.get(4).copied() {
            None | Some("linear") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(other) => return Err(Error::Config(format!("sweep `{s}`: unknown scale `{other}`"))),
        };
        Ok(SweepAxis { param: parts[0].parse()?, min: num(parts[1])?, max: num(parts[2])?, points, scale })
    }
}

/// Everything an experiment needs. Absent fields take their defaults; `load`,
/// when present, overrides `lambda` with `load / n_sensors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_sensors: usize,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub psi: f64,
    /// Joules per transmitting slot.
    pub energy_per_slot: f64,
    /// Seconds per slot.
    pub slot_duration: f64,

    pub sweeps: Vec<SweepAxis>,
    pub percentiles: Vec<f64>,

    /// Target number of simulated PAoII samples (L).
    pub samples: usize,
    pub seed: u64,
    /// Slots per simulated replication.
    pub horizon: u64,
    pub warmup: u64,
    pub max_replications: u64,
    /// DKW confidence parameter.
    pub delta: f64,

    /// Slot horizon of the analytic PMF.
    pub t_max: usize,
    pub tail_tol: f64,

    /// Percentile minimized by `optimize`.
    pub quantile: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_points: usize,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Fill the `wall_ms` column. Off by default so outputs are reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            n_sensors: p.n_sensors,
            lambda: p.lambda,
            load: None,
            alpha: p.alpha,
            beta: p.beta,
            eps: p.eps,
            psi: p.psi,
            energy_per_slot: p.energy_per_slot,
            slot_duration: p.slot_duration,
            sweeps: Vec::new(),
            percentiles: vec![0.5, 0.9, 0.95, 0.99],
            samples: 1_000_000,
            seed: 1,
            horizon: crate::sim::DEFAULT_SLOTS,
            warmup: crate::sim::DEFAULT_WARMUP,
            max_replications: 100_000,
            delta: 1e-6,
            t_max: crate::paoii::DEFAULT_HORIZON,
            tail_tol: crate::paoii::DEFAULT_TAIL_TOL,
            quantile: 0.95,
            beta_min: 1e-3,
            beta_max: 1.0,
            beta_points: 20,
            out: None,
            format: OutputFormat::Csv,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; blank input yields the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            n_sensors: self.n_sensors,
            lambda: match self.load {
                Some(rho) if self.n_sensors > 0 => rho / self.n_sensors as f64,
                _ => self.lambda,
            },
            alpha: self.alpha,
            beta: self.beta,
            eps: self.eps,
            psi: self.psi,
            energy_per_slot: self.energy_per_slot,
            slot_duration: self.slot_duration,
        }
    }

    /// Writes `params` back into the flat fields, clearing `load`.
    pub fn set_params(&mut self, p: &SystemParams) {
        self.n_sensors = p.n_sensors;
        self.lambda = p.lambda;
        self.load = None;
        self.alpha = p.alpha;
        self.beta = p.beta;
        self.eps = p.eps;
        self.psi = p.psi;
        self.energy_per_slot = p.energy_per_slot;
        self.slot_duration = p.slot_duration;
    }

    /// Sorts and deduplicates the percentile list, then checks every field.
    pub fn validate(&mut self) -> Result<()> {
        let base = self.params();
        base.validate()?;
        for axis in &self.sweeps {
            validate_axis(axis, &base)?;
        }
        if self.percentiles.is_empty() {
            return Err(Error::Config("percentiles must not be empty".into()));
        }
        for &q in &self.percentiles {
            open_unit("percentiles", q)?;
        }
        self.percentiles.sort_by(f64::total_cmp);
        self.percentiles.dedup();
        open_unit("quantile", self.quantile)?;
        open_unit("delta", self.delta)?;
        if self.samples == 0 {
            return Err(invalid("samples", 0.0, "must be at least 1"));
        }
        if self.horizon <= self.warmup {
            return Err(invalid("horizon", self.horizon as f64, "must exceed warmup"));
        }
        if self.max_replications == 0 {
            return Err(invalid("max_replications", 0.0, "must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(invalid("t_max", 0.0, "must be at least 1"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(invalid("tail_tol", self.tail_tol, "must lie in (0, 1)"));
        }
        if !(self.beta_min > 0.0 && self.beta_min < self.beta_max && self.beta_max <= 1.0) {
            return Err(invalid("beta_min", self.beta_min, "need 0 < beta_min < beta_max <= 1"));
        }
        if self.beta_points < 3 {
            return Err(invalid("beta_points", self.beta_points as f64, "must be at least 3"));
        }
        Ok(())
    }

    /// Every parameter point of the Cartesian product of the sweep axes, the
    /// first axis varying slowest. Without axes, the single base point.
    pub fn grid(&self) -> Vec<SystemParams> {
        let mut points = vec![self.params()];
        for axis in &self.sweeps {
            let values = axis.values();
            points = points.iter().flat_map(|p| values.iter().map(move |&v| axis.param.apply(*p, v))).collect();
        }
        points
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn validate_axis(axis: &SweepAxis, base: &SystemParams) -> Result<()> {
    let name = axis.param.name();
    if axis.points < 2 {
        return Err(Error::Config(format!("sweep over `{name}` needs at least 2 points, got {}", axis.points)));
    }
    if !(axis.min.is_finite() && axis.max.is_finite() && axis.min <= axis.max) {
        return Err(Error::Config(format!(
            "sweep over `{name}` needs finite min <= max, got [{}, {}]",
            axis.min, axis.max
        )));
    }
    if axis.scale == Scale::Log && axis.min <= 0.0 {
        return Err(Error::Config(format!("log sweep over `{name}` needs min > 0")));
    }
    if axis.param == SweepParam::NSensors && (axis.min < 1.0 || axis.min.fract() != 0.0 || axis.max.fract() != 0.0) {
        return Err(Error::Config("sweep over `n_sensors` needs integer bounds >= 1".into()));
    }
    for v in [axis.min, axis.max] {
        axis.param.apply(*base, v).validate()?;
    }
    Ok(())
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, v, "must lie in (0, 1)"))
    }
}

fn invalid(field: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParam { field, value, reason }
}
