//! Time evolution in either representation, steady states and spectra.

mod ode;
mod spectral;
mod steady;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master_equation::{unvectorize, vectorize, LiouvilleVector, Superoperator};
use crate::observables::{
    expectation_values, observables_to_rho, rho_to_observables, BlockSystem, ObservableVector,
};
use crate::spin::Operator;

pub use ode::{AffineSystem, SolverStats};
pub use spectral::{spectral_analysis, SpectralAnalysis};
pub use steady::{
    common_environment_closed_form, regular_closed_form, steady_state, SteadyMode, SteadyState,
    NEAR_SINGULAR_WINDOW,
};

/// Unit of all times passed to and reported by this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// `J t`.
    #[default]
    Scaled,
    /// Same unit as the inverse of the rates in the parameters.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    /// `count` points spaced geometrically from `start` to the end time.
    Log { count: usize, start: f64 },
    /// `count` evenly spaced points from 0 to the end time.
    Linear { count: usize },
    /// Caller-chosen sample times.
    Explicit { times: Vec<f64> },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Log { count: 200, start: 1e-3 }
    }
}

impl Sampling {
    /// Sample times including `t = 0`, strictly increasing.
    pub fn times(&self, t_end: f64) -> Result<Vec<f64>> {
        let mut times = match self {
            Sampling::Log { count, start } => {
                if *count < 2 {
                    return Err(Error::invalid("sample_count", "must be at least 2"));
                }
                if !(*start > 0.0 && *start < t_end) {
                    return Err(Error::invalid("sampling.start", format!("{start} not in (0, {t_end})")));
                }
                let ratio = (t_end / start).ln();
                let mut v: Vec<f64> = (0..*count)
                    .map(|k| start * (ratio * k as f64 / (*count - 1) as f64).exp())
                    .collect();
                v[*count - 1] = t_end;
                v
            }
            Sampling::Linear { count } => {
                if *count < 2 {
                    return Err(Error::invalid("sample_count", "must be at least 2"));
                }
                (0..*count).map(|k| t_end * k as f64 / (*count - 1) as f64).collect()
            }
            Sampling::Explicit { times } => times.clone(),
        };
        if times.first().is_none_or(|&t| t > 0.0) {
            times.insert(0, 0.0);
        }
        if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("sampling", "times must be finite, nonnegative and strictly increasing"));
        }
        Ok(times)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Explicit, switching to implicit when stiffness is detected.
    #[default]
    Auto,
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub rtol: f64,
    /// Defaults to `rtol * 1e-2`.
    pub atol: Option<f64>,
    pub sampling: Sampling,
    pub time_unit: TimeUnit,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            t_end: 100.0,
            rtol: 1e-10,
            atol: None,
            sampling: Sampling::default(),
            time_unit: TimeUnit::Scaled,
            method: Method::Auto,
            max_steps: 5_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn new(t_end: f64) -> Self {
        IntegrateOptions { t_end, ..Default::default() }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_time_unit(mut self, unit: TimeUnit) -> Self {
        self.time_unit = unit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", format!("{} must be > 0", self.t_end)));
        }
        if !(self.rtol > 1e-14 && self.rtol < 1e-3) {
            return Err(Error::invalid("rtol", format!("{} not in (1e-14, 1e-3)", self.rtol)));
        }
        if let Some(a) = self.atol {
            if !(a > 0.0) {
                return Err(Error::invalid("atol", format!("{a} must be > 0")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be positive"));
        }
        Ok(())
    }

    fn atol(&self) -> f64 {
        self.atol.unwrap_or(self.rtol * 1e-2)
    }
}

/// Starting point for an integration, in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Observables(ObservableVector),
    Density(Operator),
}

impl From<ObservableVector> for InitialState {
    fn from(v: ObservableVector) -> Self {
        InitialState::Observables(v)
    }
}

impl From<Operator> for InitialState {
    fn from(rho: Operator) -> Self {
        InitialState::Density(rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Blocks,
    Liouvillian,
}

/// A linear generator that can be integrated: either representation.
pub trait Generator {
    /// Real affine vector field in physical time.
    fn affine(&self) -> AffineSystem;
    /// Rate that defines the scaled time unit.
    fn rate_unit(&self) -> f64;
    fn encode(&self, init: &InitialState) -> Result<DVector<f64>>;
    fn decode(&self, y: &DVector<f64>) -> ObservableVector;
    fn representation(&self) -> Representation;
}

impl Generator for BlockSystem {
    fn affine(&self) -> AffineSystem {
        let m = self.full_matrix();
        let b = self.offset();
        AffineSystem::new(DMatrix::from_iterator(15, 15, m.iter().copied()), DVector::from_iterator(15, b.iter().copied()))
    }

    fn rate_unit(&self) -> f64 {
        self.j
    }

    fn encode(&self, init: &InitialState) -> Result<DVector<f64>> {
        let v = match init {
            InitialState::Observables(v) => *v,
            InitialState::Density(rho) => rho_to_observables(rho)?,
        };
        Ok(DVector::from_column_slice(&v.to_array()))
    }

    fn decode(&self, y: &DVector<f64>) -> ObservableVector {
        let mut a = [0.0; 15];
        a.copy_from_slice(y.as_slice());
        ObservableVector::from_array(a)
    }

    fn representation(&self) -> Representation {
        Representation::Blocks
    }
}

impl Generator for Superoperator {
    /// Real and imaginary parts stacked: `[Re vec rho; Im vec rho]`.
    fn affine(&self) -> AffineSystem {
        let l = self.matrix();
        let a = DMatrix::from_fn(32, 32, |r, c| {
            let z = l[(r % 16, c % 16)];
            match (r < 16, c < 16) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        AffineSystem::new(a, DVector::zeros(32))
    }

    fn rate_unit(&self) -> f64 {
        Superoperator::rate_unit(self)
    }

    fn encode(&self, init: &InitialState) -> Result<DVector<f64>> {
        let rho = match init {
            InitialState::Observables(v) => observables_to_rho(v),
            InitialState::Density(rho) => {
                rho_to_observables(rho)?;
                *rho
            }
        };
        let v = vectorize(&rho);
        Ok(DVector::from_fn(32, |k, _| if k < 16 { v[k].re } else { v[k - 16].im }))
    }

    fn decode(&self, y: &DVector<f64>) -> ObservableVector {
        let v = LiouvilleVector::from_fn(|k, _| num_complex::Complex64::new(y[k], y[k + 16]));
        expectation_values(&unvectorize(&v))
    }

    fn representation(&self) -> Representation {
        Representation::Liouvillian
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ObservableVector>,
    pub time_unit: TimeUnit,
    pub representation: Representation,
    /// Method that produced the final sample.
    pub method: Method,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &ObservableVector)> {
        Some((*self.times.last()?, self.states.last()?))
    }

    /// Largest excursion of `Mxx + Myy + Mzz` from its initial value.
    pub fn conservation_drift(&self) -> f64 {
        let Some(first) = self.states.first() else { return 0.0 };
        let f = first.conserved_sum();
        self.states.iter().fold(0.0, |m, s| m.max((s.conserved_sum() - f).abs()))
    }

    /// Largest observable discrepancy against a trajectory on the same times.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        assert_eq!(self.times, other.times, "trajectories sampled on different times");
        self.states
            .iter()
            .zip(&other.states)
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

fn unit_scale<G: Generator + ?Sized>(gen: &G, unit: TimeUnit) -> f64 {
    match unit {
        TimeUnit::Scaled => 1.0 / gen.rate_unit(),
        TimeUnit::Physical => 1.0,
    }
}

/// Adaptive integration with output at the sampling times of `opts`.
pub fn integrate<G: Generator + ?Sized>(
    gen: &G,
    init: impl Into<InitialState>,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let times = opts.sampling.times(opts.t_end)?;
    let sys = gen.affine().scaled(unit_scale(gen, opts.time_unit));
    let y0 = gen.encode(&init.into())?;
    let ctl = ode::StepControl { rtol: opts.rtol, atol: opts.atol(), max_steps: opts.max_steps };

    let mut out = vec![y0.clone()];
    let mut stats = SolverStats::default();
    let samples = &times[1..];
    let mut method = opts.method;
    match opts.method {
        Method::Implicit => {
            let h0 = ode::initial_step(&sys, &y0, samples.last().copied().unwrap_or(0.0), &ctl);
            ode::radau5(&sys, 0.0, &y0, h0, samples, &ctl, &mut out, &mut stats)?;
        }
        Method::Explicit | Method::Auto => {
            let allow = opts.method == Method::Auto;
            if let Some(h) = ode::dopri5(&sys, 0.0, &y0, samples, &ctl, allow, &mut out, &mut stats)? {
                log::warn!("explicit integrator: {} at t = {:.6e}; switching to implicit", h.reason, h.t);
                stats.switched_at = Some(h.t);
                method = Method::Implicit;
                let rest = &samples[out.len() - 1..];
                ode::radau5(&sys, h.t, &h.y, h.h.max(1e-3 * h.t.max(1e-12)), rest, &ctl, &mut out, &mut stats)?;
            } else if method == Method::Auto {
                method = Method::Explicit;
            }
        }
    }

    Ok(Trajectory {
        states: out.iter().map(|y| gen.decode(y)).collect(),
        times,
        time_unit: opts.time_unit,
        representation: gen.representation(),
        method,
        stats,
    })
}

/// Exact solution at the given times through the matrix exponential.
pub fn propagate_exact<G: Generator + ?Sized>(
    gen: &G,
    init: impl Into<InitialState>,
    times: &[f64],
    unit: TimeUnit,
) -> Result<Trajectory> {
    let sys = gen.affine().scaled(unit_scale(gen, unit));
    let y0 = gen.encode(&init.into())?;
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let (phi, q) = sys.flow(t);
        let y = phi * &y0 + q;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        states.push(gen.decode(&y));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        time_unit: unit,
        representation: gen.representation(),
        method: Method::Implicit,
        stats: SolverStats::default(),
    })
}
