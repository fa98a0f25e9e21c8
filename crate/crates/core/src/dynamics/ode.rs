//! Integrators for constant-coefficient affine systems `y' = A y + b`.
//!
//! The explicit solver is Dormand-Prince 5(4) with Hairer's stiffness
//! detection and quartic dense output. The implicit solver is the
//! three-stage Radau IIA collocation method (order 5, L-stable); for a
//! linear system one step is the affine map `y + W(h) (A y + b)`, so `W` is
//! formed once per distinct step size and error is estimated by step
//! doubling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real affine vector field `y' = a y + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len());
        assert_eq!(a.ncols(), b.len());
        AffineSystem { a, b }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn rhs(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.a * y + &self.b
    }

    pub fn scaled(&self, s: f64) -> AffineSystem {
        AffineSystem { a: &self.a * s, b: &self.b * s }
    }

    /// Exact flow over `t` via the exponential of the augmented matrix.
    pub fn flow(&self, t: f64) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * t));
        aug.view_mut((0, n), (n, 1)).copy_from(&(&self.b * t));
        let e = aug.exp();
        (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, 1)).column(0).into_owned())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Time at which the explicit solver handed over to the implicit one.
    pub switched_at: Option<f64>,
}

/// Why the explicit solver stopped early.
#[derive(Debug, Clone)]
pub(crate) struct Handover {
    pub t: f64,
    pub y: DVector<f64>,
    pub h: f64,
    pub reason: &'static str,
}

fn error_norm(err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, ctl: &StepControl) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sk = ctl.atol + ctl.rtol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn check_finite(y: &DVector<f64>, t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { t })
    }
}

fn step_floor(t: f64) -> f64 {
    16.0 * f64::EPSILON * t.abs().max(1e-300)
}

/// Initial step from the size of the field and of the matrix.
pub(crate) fn initial_step(sys: &AffineSystem, y0: &DVector<f64>, span: f64, ctl: &StepControl) -> f64 {
    let f0 = sys.rhs(y0);
    let scale = |v: &DVector<f64>| error_norm(v, y0, y0, ctl);
    let d0 = scale(y0);
    let d1 = scale(&f0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let norm_a = sys.a.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * sys.dim() as f64;
    if norm_a > 0.0 {
        h = h.min(0.5 / norm_a).max(1e-6 / norm_a);
    }
    h.min(span).max(span * 1e-12)
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dormand-Prince 5(4). Writes the state at each `samples` entry (all
/// `> t0`, increasing) into `out`. Returns `Some(handover)` if stiffness or
/// a step-size floor was hit and `allow_handover` is set.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dopri5(
    sys: &AffineSystem,
    t0: f64,
    y0: &DVector<f64>,
    samples: &[f64],
    ctl: &StepControl,
    allow_handover: bool,
    out: &mut Vec<DVector<f64>>,
    stats: &mut SolverStats,
) -> Result<Option<Handover>> {
    let Some(&t_end) = samples.last() else { return Ok(None) };
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = sys.rhs(&y);
    let mut h = initial_step(sys, &y, t_end - t0, ctl);
    let mut next = 0;
    let mut facold = 1e-4_f64;
    let mut last_rejected = false;
    let mut stiff_count = 0;
    let mut nonstiff_count = 0;
    let mut steps = 0;

    while next < samples.len() {
        if steps >= ctl.max_steps {
            return Err(Error::StepBudget { t, max_steps: ctl.max_steps });
        }
        steps += 1;
        if h < step_floor(t) {
            if allow_handover {
                return Ok(Some(Handover { t, y, h, reason: "step-size floor" }));
            }
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let h_step = h.min(t_end - t);

        let k2 = sys.rhs(&(&y + &k1 * (h_step * A21)));
        let k3 = sys.rhs(&(&y + (&k1 * A31 + &k2 * A32) * h_step));
        let k4 = sys.rhs(&(&y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h_step));
        let k5 = sys.rhs(&(&y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h_step));
        let ysti = &y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h_step;
        let k6 = sys.rhs(&ysti);
        let y_new = &y + (&k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h_step;
        let k7 = sys.rhs(&y_new);
        let err_vec = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h_step;
        let err = error_norm(&err_vec, &y, &y_new, ctl);
        if !err.is_finite() {
            return Err(Error::NonFiniteState { t: t + h_step });
        }

        let fac11 = err.powf(0.2);
        let fac = (fac11 / facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
        let mut h_new = h_step / fac;

        if err <= 1.0 {
            check_finite(&y_new, t + h_step)?;
            facold = err.max(1e-4);
            stats.accepted += 1;
            let t_new = if h_step == t_end - t { t_end } else { t + h_step };

            while next < samples.len() && samples[next] <= t_new {
                let s = samples[next];
                if s == t_new {
                    out.push(y_new.clone());
                } else {
                    let theta = (s - t) / h_step;
                    let theta1 = 1.0 - theta;
                    let ydiff = &y_new - &y;
                    let bspl = &k1 * h_step - &ydiff;
                    let c3 = &ydiff - &k7 * h_step - &bspl;
                    let c4 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h_step;
                    let v = &y + (&ydiff + (&bspl + (&c3 + &c4 * theta1) * theta) * theta1) * theta;
                    out.push(v);
                }
                next += 1;
            }

            let stnum = (&k7 - &k6).norm_squared();
            let stden = (&y_new - &ysti).norm_squared();
            if stden > 0.0 && h_step * (stnum / stden).sqrt() > 3.25 {
                nonstiff_count = 0;
                stiff_count += 1;
            } else {
                nonstiff_count += 1;
                if nonstiff_count == 6 {
                    stiff_count = 0;
                }
            }

            if last_rejected {
                h_new = h_new.min(h_step);
            }
            last_rejected = false;
            t = t_new;
            y = y_new;
            k1 = k7;
            h = h_new;

            if allow_handover && stiff_count >= 15 && next < samples.len() {
                return Ok(Some(Handover { t, y, h, reason: "stiffness detected" }));
            }
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = h_step / (fac11 / 0.9).min(5.0);
        }
    }
    Ok(None)
}

const SQ6: f64 = 2.449489742783178;

fn radau_tableau() -> ([[f64; 3]; 3], [f64; 3]) {
    let a = [
        [(88.0 - 7.0 * SQ6) / 360.0, (296.0 - 169.0 * SQ6) / 1800.0, (-2.0 + 3.0 * SQ6) / 225.0],
        [(296.0 + 169.0 * SQ6) / 1800.0, (88.0 + 7.0 * SQ6) / 360.0, (-2.0 - 3.0 * SQ6) / 225.0],
        [(16.0 - SQ6) / 36.0, (16.0 + SQ6) / 36.0, 1.0 / 9.0],
    ];
    (a, a[2])
}

/// Step matrix `W(h)` with `y_{n+1} = y_n + W (A y_n + b)`.
fn radau_step_matrix(a_mat: &DMatrix<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = a_mat.nrows();
    let (a, b) = radau_tableau();
    let mut m = DMatrix::<f64>::identity(3 * n, 3 * n);
    for i in 0..3 {
        for j in 0..3 {
            let mut blk = m.view_mut((i * n, j * n), (n, n));
            blk -= a_mat * (h * a[i][j]);
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(3 * n, n);
    for i in 0..3 {
        rhs.view_mut((i * n, 0), (n, n)).fill_with_identity();
    }
    let g = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("Radau stage matrix at h = {h}")))?;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for j in 0..3 {
        w += g.view((j * n, 0), (n, n)) * (h * b[j]);
    }
    Ok(w)
}

struct StepCache {
    h: f64,
    w: DMatrix<f64>,
    w_half: DMatrix<f64>,
}

/// Radau IIA with step doubling. Step ends are clipped onto sample times.
#[allow(clippy::too_many_arguments)]
pub(crate) fn radau5(
    sys: &AffineSystem,
    t0: f64,
    y0: &DVector<f64>,
    h0: f64,
    samples: &[f64],
    ctl: &StepControl,
    out: &mut Vec<DVector<f64>>,
    stats: &mut SolverStats,
) -> Result<()> {
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = h0;
    let mut cache: Option<StepCache> = None;
    let mut steps = 0;
    let mut next = 0;
    while next < samples.len() {
        let target = samples[next];
        if steps >= ctl.max_steps {
            return Err(Error::StepBudget { t, max_steps: ctl.max_steps });
        }
        steps += 1;
        if h < step_floor(t) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let clipped = h >= target - t;
        let h_step = if clipped { target - t } else { h };

        let cached = matches!(&cache, Some(c) if c.h == h_step);
        if !cached {
            cache = Some(StepCache {
                h: h_step,
                w: radau_step_matrix(&sys.a, h_step)?,
                w_half: radau_step_matrix(&sys.a, 0.5 * h_step)?,
            });
        }
        let c = cache.as_ref().expect("step cache populated above");

        let full = &y + &c.w * sys.rhs(&y);
        let mid = &y + &c.w_half * sys.rhs(&y);
        let y_new = &mid + &c.w_half * sys.rhs(&mid);
        let err = error_norm(&((&y_new - &full) / 31.0), &y, &y_new, ctl);
        if !err.is_finite() {
            return Err(Error::NonFiniteState { t: t + h_step });
        }
        let fac = (0.9 * err.max(1e-10).powf(-1.0 / 6.0)).clamp(0.2, 4.0);

        if err <= 1.0 {
            let t_new = if clipped { target } else { t + h_step };
            check_finite(&y_new, t_new)?;
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            if clipped {
                out.push(y.clone());
                next += 1;
            }
            // Keep the step (and its cached factorization) unless growth is worthwhile.
            if !clipped && fac > 1.5 {
                h = h_step * fac;
            } else if clipped {
                h = h.max(h_step * fac);
            }
        } else {
            stats.rejected += 1;
            h = h_step * fac.min(0.5);
        }
    }
    Ok(())
}
