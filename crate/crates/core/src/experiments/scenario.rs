use serde::Serialize;

use crate::dynamics::{
    integrate, propagate_exact, steady_state, Generator, IntegrateOptions, Representation, SteadyState, TimeUnit,
    Trajectory,
};
use crate::entanglement::{concurrence_guard, ConcurrenceResult};
use crate::error::{Error, Result};
use crate::master_equation::{assemble_with_rates, compute_rates, PhysicalParams, RateSet};
use crate::observables::{build_block_system, ObservableVector};

use super::config::ScenarioConfig;

/// Resolved inputs echoed next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub name: String,
    pub version: &'static str,
    pub params: PhysicalParams,
    pub rates: RateSet,
    pub scaled_kappa: (f64, f64),
    pub initial_preset: &'static str,
    pub initial_state: ObservableVector,
    pub integration: IntegrateOptions,
    pub representation: Representation,
    /// Inputs chosen by this program rather than given by the user.
    pub assumptions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutput {
    pub metadata: RunMetadata,
    pub trajectory: Trajectory,
    pub concurrence: Vec<ConcurrenceResult>,
    pub steady_state: SteadyState,
}

/// Largest sampled concurrence, refined between neighbouring samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub value: f64,
    pub time: f64,
    /// The peak sits on the last sample.
    pub at_end: bool,
}

/// Integrate the scenario and evaluate concurrence at every sample.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let p = &cfg.params;
    let rates = compute_rates(p)?;
    let init = cfg.initial_vector();
    let opts = cfg.integrate_options();
    let ctx = |e: Error| match e {
        Error::InvalidState(m) => Error::InvalidState(format!("scenario `{}`: {m}", cfg.name)),
        other => other,
    };

    let trajectory = match cfg.representation {
        Representation::Blocks => integrate(&build_block_system(p, &rates), init, &opts),
        Representation::Liouvillian => integrate(&assemble_with_rates(p, &rates), init, &opts),
    }
    .map_err(ctx)?;
    let concurrence = concurrence_series(&trajectory).map_err(ctx)?;
    let steady_state = steady_state(p, &rates, &init)?;

    Ok(ScenarioOutput {
        metadata: RunMetadata {
            name: cfg.name.clone(),
            version: env!("CARGO_PKG_VERSION"),
            params: p.clone(),
            scaled_kappa: rates.scaled(p.j),
            rates,
            initial_preset: cfg.initial_state.name(),
            initial_state: init,
            integration: opts,
            representation: cfg.representation,
            assumptions: Vec::new(),
        },
        trajectory,
        concurrence,
        steady_state,
    })
}

pub fn concurrence_series(traj: &Trajectory) -> Result<Vec<ConcurrenceResult>> {
    traj.states
        .iter()
        .zip(&traj.times)
        .map(|(v, t)| {
            concurrence_guard(v).map_err(|e| match e {
                Error::InvalidState(m) => Error::InvalidState(format!("at t = {t:e}: {m}")),
                other => other,
            })
        })
        .collect()
}

/// Peak of the sampled concurrence, refined by golden-section search on the
/// exact propagator between the neighbouring samples.
pub fn concurrence_peak<G: Generator + ?Sized>(
    gen: &G,
    traj: &Trajectory,
    values: &[f64],
    unit: TimeUnit,
) -> Result<Peak> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidState("empty concurrence series".into()));
    }
    let k = (0..n).fold(0, |best, i| if values[i] > values[best] { i } else { best });
    let mut peak = Peak { value: values[k], time: traj.times[k], at_end: k == n - 1 };
    if peak.value <= 0.0 || k == n - 1 {
        return Ok(peak);
    }

    let lo = k.saturating_sub(1);
    let (t0, v0) = (traj.times[lo], traj.states[lo]);
    let eval = |t: f64| -> Result<f64> {
        let s = propagate_exact(gen, v0, &[t - t0], unit)?;
        Ok(concurrence_guard(&s.states[0])?.value)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (t0, traj.times[k + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..200 {
        if b - a <= 1e-12 * b.max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let (t, v) = if fc > fd { (c, fc) } else { (d, fd) };
    if v > peak.value {
        peak.value = v;
        peak.time = t;
    }
    Ok(peak)
}

/// First time after the peak at which the series drops below `1/e` of the
/// peak value, linearly interpolated between samples.
pub fn decay_time(times: &[f64], values: &[f64], peak: &Peak) -> Option<f64> {
    if peak.value <= 0.0 {
        return None;
    }
    let level = peak.value / std::f64::consts::E;
    let start = times.iter().position(|&t| t >= peak.time)?;
    (start.max(1)..times.len()).find_map(|i| {
        let (t0, t1, c0, c1) = (times[i - 1], times[i], values[i - 1], values[i]);
        if times[i] > peak.time && c1 < level && c0 >= level {
            Some(t0 + (t1 - t0) * (c0 - level) / (c0 - c1))
        } else {
            None
        }
    })
}

/// First time at which the series falls below `level` and stays below it
/// for the rest of the samples, linearly interpolated.
pub fn time_below(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let last_above = values.iter().rposition(|&c| c >= level);
    match last_above {
        None => times.first().copied(),
        Some(i) if i + 1 == values.len() => None,
        Some(i) => {
            let (t0, t1, c0, c1) = (times[i], times[i + 1], values[i], values[i + 1]);
            Some(t0 + (t1 - t0) * (c0 - level) / (c0 - c1))
        }
    }
}
