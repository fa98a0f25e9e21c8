use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegrateOptions, Method, Representation, Sampling, TimeUnit};
use crate::error::{Error, Result};
use crate::master_equation::{DipolarCoupling, PhysicalParams};
use crate::observables::ObservableVector;

/// Named initial states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPreset {
    /// `(|01> - |10>) / sqrt 2`: `Mzz = -1/4`, `Mc = -1/2`.
    Singlet,
    /// `(|01> + |10>) / sqrt 2`: `Mzz = -1/4`, `Mc = +1/2`.
    Triplet,
    /// Negative dipolar order: `Mzz = -1/4`, everything else zero.
    DipolarOrder,
    /// Maximally mixed state.
    Zero,
    /// Uncorrelated thermal state: `Mz = M0`, `Mzz = M0^2 / 4`.
    Thermal,
    Custom { values: ObservableVector },
}

impl Default for InitialPreset {
    fn default() -> Self {
        InitialPreset::DipolarOrder
    }
}

impl InitialPreset {
    pub fn name(&self) -> &'static str {
        match self {
            InitialPreset::Singlet => "singlet",
            InitialPreset::Triplet => "triplet",
            InitialPreset::DipolarOrder => "dipolar_order",
            InitialPreset::Zero => "zero",
            InitialPreset::Thermal => "thermal",
            InitialPreset::Custom { .. } => "custom",
        }
    }

    /// Observable vector of the preset; `m0` is only used by `Thermal`.
    pub fn expand(&self, m0: f64) -> ObservableVector {
        match self {
            InitialPreset::Singlet => ObservableVector::block1(0.0, -0.25, -0.5),
            InitialPreset::Triplet => ObservableVector::block1(0.0, -0.25, 0.5),
            InitialPreset::DipolarOrder => ObservableVector::block1(0.0, -0.25, 0.0),
            InitialPreset::Zero => ObservableVector::zero(),
            InitialPreset::Thermal => ObservableVector::block1(m0, 0.25 * m0 * m0, 0.0),
            InitialPreset::Custom { values } => *values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Trajectory CSV plus metadata JSON.
    #[default]
    Csv,
    /// A single JSON document.
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("."), format: OutputFormat::Csv }
    }
}

/// Parameters a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Kappa1,
    Kappa2,
    Kappa0,
    DeltaKappa1,
    DeltaKappa2,
    OmegaD0,
    Alpha,
    M0,
    J,
    DeltaOmega,
}

impl SweepParam {
    pub fn apply(self, p: &mut PhysicalParams, value: f64) -> Result<()> {
        match self {
            SweepParam::Alpha => p.alpha = value,
            SweepParam::M0 => p.m0 = value,
            SweepParam::J => p.j = value,
            SweepParam::DeltaOmega => p.delta_omega = value,
            _ => {
                let DipolarCoupling::Scaled(s) = &mut p.dipolar else {
                    return Err(Error::invalid(
                        "sweep",
                        format!("{self:?} can only be swept with the scaled dipolar entry"),
                    ));
                };
                match self {
                    SweepParam::Kappa1 => s.kappa1 = value,
                    SweepParam::Kappa2 => s.kappa2 = value,
                    SweepParam::Kappa0 => s.kappa0 = value,
                    SweepParam::DeltaKappa1 => s.delta_kappa1 = value,
                    SweepParam::DeltaKappa2 => s.delta_kappa2 = value,
                    SweepParam::OmegaD0 => s.omega_d0 = value,
                    _ => unreachable!(),
                }
            }
        }
        Ok(())
    }
}

/// One sweep axis: explicit `values`, or `count` points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn range(param: SweepParam, start: f64, stop: f64, count: usize, spacing: Spacing) -> Self {
        AxisSpec { param, values: None, start: Some(start), stop: Some(stop), count: Some(count), spacing }
    }

    pub fn values(param: SweepParam, values: Vec<f64>) -> Self {
        AxisSpec { param, values: Some(values), start: None, stop: None, count: None, spacing: Spacing::Linear }
    }

    /// Grid points of the axis. `field` names the axis in error messages.
    pub fn resolve(&self, field: &str) -> Result<Vec<f64>> {
        let values = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(Error::invalid(format!("{field}.count"), "must be at least 1"));
                }
                let frac = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                match self.spacing {
                    Spacing::Linear => {
                        let mut v: Vec<f64> = (0..n).map(|k| a + (b - a) * frac(k)).collect();
                        v[n - 1] = if n == 1 { a } else { b };
                        v
                    }
                    Spacing::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(Error::invalid(field, "log spacing needs positive start and stop"));
                        }
                        let mut v: Vec<f64> = (0..n).map(|k| a * ((b / a).ln() * frac(k)).exp()).collect();
                        v[n - 1] = if n == 1 { a } else { b };
                        v
                    }
                }
            }
            _ => {
                return Err(Error::invalid(field, "give either `values` or all of `start`, `stop`, `count`"));
            }
        };
        if values.is_empty() {
            return Err(Error::invalid(format!("{field}.values"), "grid must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{field}.values"), "grid values must be finite"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    /// Tie `kappa2` to `kappa1` in every cell.
    #[serde(default)]
    pub couple_kappa2: bool,
}

/// A complete, self-describing run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub params: PhysicalParams,
    #[serde(default)]
    pub initial_state: InitialPreset,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Number of sampled points; log sampling adds `t = 0` in front.
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub sampling: Spacing,
    /// First nonzero time of log sampling.
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default)]
    pub time_unit: TimeUnit,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_representation")]
    pub representation: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_t_end() -> f64 {
    1e4
}
fn default_sample_count() -> usize {
    200
}
fn default_t_start() -> f64 {
    1e-3
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_representation() -> Representation {
    Representation::Blocks
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, params: PhysicalParams, initial_state: InitialPreset) -> Self {
        ScenarioConfig {
            name: name.into(),
            params,
            initial_state,
            t_end: default_t_end(),
            sample_count: default_sample_count(),
            sampling: Spacing::Log,
            t_start: default_t_start(),
            rtol: default_rtol(),
            time_unit: TimeUnit::Scaled,
            method: Method::Auto,
            representation: Representation::Blocks,
            sweep: None,
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid("name", "must be a nonempty file stem"));
        }
        self.params.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => Error::invalid(format!("params.{field}"), reason),
            other => other,
        })?;
        if self.sample_count < 2 {
            return Err(Error::invalid("sample_count", format!("{} must be at least 2", self.sample_count)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", format!("{} must be > 0", self.t_end)));
        }
        if self.sampling == Spacing::Log && !(self.t_start > 0.0 && self.t_start < self.t_end) {
            return Err(Error::invalid("t_start", format!("{} not in (0, t_end)", self.t_start)));
        }
        self.integrate_options().validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } if field == "rtol" => Error::invalid("rtol", reason),
            other => other,
        })?;
        if let Some(s) = &self.sweep {
            s.x.resolve("sweep.x")?;
            s.y.resolve("sweep.y")?;
        }
        Ok(())
    }

    pub fn initial_vector(&self) -> ObservableVector {
        self.initial_state.expand(self.params.m0)
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        let sampling = match self.sampling {
            Spacing::Log => Sampling::Log { count: self.sample_count, start: self.t_start },
            Spacing::Linear => Sampling::Linear { count: self.sample_count },
        };
        IntegrateOptions {
            t_end: self.t_end,
            rtol: self.rtol,
            atol: None,
            sampling,
            time_unit: self.time_unit,
            method: self.method,
            ..IntegrateOptions::default()
        }
    }
}
