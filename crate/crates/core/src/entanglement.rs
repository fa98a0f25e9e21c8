//! Wootters concurrence by two routes: the general spin-flip construction
//! and the closed form valid when only `(Mz, Mzz, Mc)` are nonzero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{observables_to_rho, ObservableVector};
use crate::spin::{hermiticity_residual, pauli_pair, Axis, Operator};

/// Roundoff allowance on negative spectra.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-9;
/// Off-block magnitude below which the closed form applies, and the
/// largest tolerated disagreement between the routes.
pub const GUARD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Wootters,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcurrenceResult {
    pub value: f64,
    pub route: Route,
    /// Spin-flip spectrum, sorted decreasing.
    pub lambdas: [f64; 4],
}

fn sorted_desc(mut l: [f64; 4]) -> [f64; 4] {
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

fn from_lambdas(lambdas: [f64; 4], route: Route) -> ConcurrenceResult {
    let [l1, l2, l3, l4] = lambdas;
    ConcurrenceResult { value: (l1 - l2 - l3 - l4).max(0.0), route, lambdas }
}

/// `(s_y (x) s_y) rho^* (s_y (x) s_y)`.
pub fn spin_flip(rho: &Operator) -> Operator {
    let yy = pauli_pair(Axis::Y, Axis::Y);
    yy * rho.conjugate() * yy
}

/// `lambda_i` as the singular values of `sqrt(rho) sqrt(spin_flip(rho))`.
///
/// Equivalent to square roots of the eigenvalues of `rho * spin_flip(rho)`,
/// but without the square-root amplification of roundoff near pure states.
pub fn concurrence_wootters(rho: &Operator) -> Result<ConcurrenceResult> {
    if hermiticity_residual(rho) > NEGATIVITY_TOLERANCE {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - Complex64::from(1.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let herm = (rho + rho.adjoint()) * Complex64::from(0.5);
    let eig = herm.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -NEGATIVITY_TOLERANCE {
        return Err(Error::InvalidState(format!("density matrix has eigenvalue {min:e}")));
    }
    let u = eig.eigenvectors;
    let sqrt_p = eig.eigenvalues.map(|p| Complex64::from(p.max(0.0).sqrt()));
    let sqrt_rho = u * Operator::from_diagonal(&sqrt_p) * u.adjoint();
    let sv = (sqrt_rho * spin_flip(&sqrt_rho)).singular_values();
    let lambdas = [sv[0], sv[1], sv[2], sv[3]];
    Ok(from_lambdas(sorted_desc(lambdas), Route::Wootters))
}

/// `max{0, 2 |Mc| - sqrt((1 + 4 Mzz)^2 - 4 Mz^2) / 2}`.
pub fn concurrence_closed_form(mz: f64, mzz: f64, mc: f64) -> Result<ConcurrenceResult> {
    let disc = (1.0 + 4.0 * mzz).powi(2) - 4.0 * mz * mz;
    if disc < -1e-12 || !disc.is_finite() {
        return Err(Error::ClosedFormDomain { discriminant: disc });
    }
    let b = 0.25 * disc.max(0.0).sqrt();
    let a = 0.25 - mzz;
    let lambdas = sorted_desc([a + mc.abs(), (a - mc.abs()).abs(), b, b]);
    Ok(ConcurrenceResult {
        value: (2.0 * mc.abs() - 2.0 * b).max(0.0),
        route: Route::ClosedForm,
        lambdas,
    })
}

/// Concurrence of the state described by `v`, cross-checked against the
/// closed form whenever it applies. Returns the Wootters result.
pub fn concurrence_guard(v: &ObservableVector) -> Result<ConcurrenceResult> {
    let w = concurrence_wootters(&observables_to_rho(v))?;
    if v.off_block1_norm() < GUARD_TOLERANCE {
        let c = concurrence_closed_form(v.mz, v.mzz, v.mc)?;
        if (w.value - c.value).abs() >= GUARD_TOLERANCE {
            return Err(Error::RouteDisagreement { wootters: w.value, closed_form: c.value });
        }
    }
    Ok(w)
}
