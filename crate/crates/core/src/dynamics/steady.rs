use nalgebra::{RowVector3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master_equation::{PhysicalParams, RateSet};
use crate::observables::{build_block_system, ObservableVector};

/// Commonness values in `(1 - NEAR_SINGULAR_WINDOW, 1)` are flagged as
/// numerically near-singular.
pub const NEAR_SINGULAR_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMode {
    /// Unique steady state (`alpha < 1`).
    Regular,
    /// Steady state fixed by the conserved `Mxx + Myy + Mzz` (`alpha = 1`).
    ConservedManifold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub values: ObservableVector,
    pub mode: SteadyMode,
    /// Initial `Mxx + Myy + Mzz`; only for the conserved manifold.
    #[serde(rename = "F")]
    pub f: Option<f64>,
    /// `max |L1 v + B1| / J`.
    pub residual: f64,
    /// Largest difference between the two independent evaluations.
    pub cross_check: f64,
    pub near_singular: bool,
}

/// Unique steady state `(Mz, Mzz, Mc)` for `alpha < 1`, in scaled rates.
pub fn regular_closed_form(m0: f64, alpha: f64, k1: f64, k2: f64) -> [f64; 3] {
    let c1 = (1.0 + k1) * (2.0 + k1 + 4.0 * k2) + alpha * (2.0 + k1 + 4.0 * k2 - k1 * m0 * m0);
    [
        2.0 * m0 * (1.0 + alpha + k1) / c1,
        m0 * m0 * (2.0 + 2.0 * alpha + k1) / (4.0 * c1),
        m0 * m0 * k1 / (2.0 * c1),
    ]
}

/// Steady state `(Mz, Mzz, Mc)` for `alpha = 1` with conserved value `f`.
pub fn common_environment_closed_form(m0: f64, k1: f64, k2: f64, f: f64) -> [f64; 3] {
    let c2 = 4.0 * m0 * m0 + 3.0 * (2.0 + k1) * (2.0 + k1 + 4.0 * k2);
    let mz = 2.0 * m0 * (3.0 + 4.0 * f) * (2.0 + k1) / c2;
    let mc = (-2.0 * m0 * m0 + 2.0 * f * (2.0 + k1) * (2.0 + k1 + 4.0 * k2)) / c2;
    [mz, f - mc, mc]
}

/// Steady state of the polarization block; other blocks relax to zero.
///
/// For `alpha < 1` the linear solve is returned and the closed form is the
/// cross-check. For `alpha = 1` the closed form is returned and a bordered
/// solve (one equation replaced by the conservation constraint) is the
/// cross-check.
pub fn steady_state(p: &PhysicalParams, r: &RateSet, init: &ObservableVector) -> Result<SteadyState> {
    p.validate()?;
    let blocks = build_block_system(p, r).scaled();
    let (l1, b1) = (blocks.l1, blocks.b1);
    let (k1, k2) = r.scaled(p.j);
    let residual_of = |v: &Vector3<f64>| (l1 * v + b1).amax();

    if p.alpha < 1.0 {
        let near_singular = p.alpha > 1.0 - NEAR_SINGULAR_WINDOW;
        if near_singular {
            log::warn!("alpha = {} is within {NEAR_SINGULAR_WINDOW:e} of 1; the steady-state solve is ill-conditioned", p.alpha);
        }
        let v = l1
            .lu()
            .solve(&-b1)
            .ok_or_else(|| Error::Singular(format!("polarization block at alpha = {}", p.alpha)))?;
        let closed = Vector3::from(regular_closed_form(p.m0, p.alpha, k1, k2));
        Ok(SteadyState {
            values: ObservableVector::block1(v[0], v[1], v[2]),
            mode: SteadyMode::Regular,
            f: None,
            residual: residual_of(&v),
            cross_check: (v - closed).amax(),
            near_singular,
        })
    } else {
        let f = init.conserved_sum();
        let closed = Vector3::from(common_environment_closed_form(p.m0, k1, k2, f));
        let mut bordered = l1;
        bordered.set_row(1, &RowVector3::new(0.0, 1.0, 1.0));
        let mut rhs = -b1;
        rhs[1] = f;
        let v = bordered
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("bordered polarization block".into()))?;
        Ok(SteadyState {
            values: ObservableVector::block1(closed[0], closed[1], closed[2]),
            mode: SteadyMode::ConservedManifold,
            f: Some(f),
            residual: residual_of(&closed),
            cross_check: (v - closed).amax(),
            near_singular: false,
        })
    }
}
