//! Second-order rates and the Liouville-space generator.
//!
//! The generator acts on column-stacked density matrices,
//! `vec(rho)[4 c + r] = rho[r, c]`, so that `vec(A X B) = (B^T (x) A) vec(X)`.
//!
//! ```text
//! d rho / dt = -i [H_coh, rho] + D rho + Q rho
//!
//! H_coh  = -omega_{d,0} T_0 + H_Lamb + H_dds
//! H_Lamb = -(dw/2) sum_ij a_ij [ (1-M0) s+^i s-^j - (1+M0) s-^i s+^j ]
//! H_dds  =  sum_{m != 0} dk_m T_{-m}^dag T_{-m}
//! D rho  =  (J/2) sum_ij a_ij [ (1+M0) (2 s+^i rho s-^j - {s-^j s+^i, rho})
//!                             + (1-M0) (2 s-^i rho s+^j - {s+^j s-^i, rho}) ]
//! Q rho  =  sum_m kappa_m (2 T_{-m} rho T_{-m}^dag - {T_{-m}^dag T_{-m}, rho})
//! ```
//!
//! with `a_ij = alpha^(1 - delta_ij)`. The `(1+M0)` channel drives each spin
//! toward `|0>` (spin-up), so a local environment relaxes `<sigma_z>` to `M0`
//! at rate `2J` and transverse components at rate `J`. The signs of the
//! coherent terms are the ones under which the observable equations take the
//! block form built in [`crate::observables::build_block_system`].

use std::ops::{Add, Mul};

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{
    identity, pauli, spherical_harmonic_y2, AngularConfig, Axis, Operator, Qubit,
    SphericalTensorSet,
};

/// 16x16 complex matrix on Liouville space.
pub type LiouvilleMatrix = SMatrix<Complex64, 16, 16>;
/// Column-stacked density matrix.
pub type LiouvilleVector = SVector<Complex64, 16>;

/// Dipolar coupling entry: either microscopic inputs or rates scaled by `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DipolarCoupling {
    Physical {
        omega_d: f64,
        omega0: f64,
        tau_c: f64,
        theta: f64,
        phi: f64,
    },
    Scaled(ScaledRates),
}

/// Rates in units of `J`. Only `kappa1` and `kappa2` enter the
/// polarization block; the rest default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledRates {
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub delta_kappa1: f64,
    #[serde(default)]
    pub delta_kappa2: f64,
    #[serde(default)]
    pub omega_d0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Real part of the system-environment spectral density.
    #[serde(alias = "J")]
    pub j: f64,
    /// Imaginary part (Lamb-shift strength).
    #[serde(default)]
    pub delta_omega: f64,
    /// Equilibrium polarization.
    #[serde(alias = "M0")]
    pub m0: f64,
    /// Commonness of the environment.
    pub alpha: f64,
    pub dipolar: DipolarCoupling,
}

impl PhysicalParams {
    /// Parameters in the scaled entry mode with `kappa*_1`, `kappa*_2` only.
    pub fn scaled(j: f64, m0: f64, alpha: f64, kappa1: f64, kappa2: f64) -> Self {
        PhysicalParams {
            j,
            delta_omega: 0.0,
            m0,
            alpha,
            dipolar: DipolarCoupling::Scaled(ScaledRates { kappa1, kappa2, ..Default::default() }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::invalid("j", format!("{} must be > 0", self.j)));
        }
        if !self.delta_omega.is_finite() {
            return Err(Error::invalid("delta_omega", "must be finite"));
        }
        if !(self.m0.abs() <= 1.0) {
            return Err(Error::invalid("m0", format!("{} not in [-1, 1]", self.m0)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        match &self.dipolar {
            DipolarCoupling::Physical { omega_d, omega0, tau_c, theta, phi } => {
                if !(*tau_c > 0.0) || !tau_c.is_finite() {
                    return Err(Error::invalid("tau_c", format!("{tau_c} must be > 0")));
                }
                if !(*omega_d >= 0.0) || !omega_d.is_finite() {
                    return Err(Error::invalid("omega_d", format!("{omega_d} must be >= 0")));
                }
                if !omega0.is_finite() {
                    return Err(Error::invalid("omega0", "must be finite"));
                }
                AngularConfig { theta: *theta, phi: *phi }.validate()?;
            }
            DipolarCoupling::Scaled(s) => {
                for (name, v) in [("kappa1", s.kappa1), ("kappa2", s.kappa2), ("kappa0", s.kappa0)] {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(Error::invalid(name, format!("{v} must be >= 0")));
                    }
                }
                for (name, v) in [
                    ("delta_kappa1", s.delta_kappa1),
                    ("delta_kappa2", s.delta_kappa2),
                    ("omega_d0", s.omega_d0),
                ] {
                    if !v.is_finite() {
                        return Err(Error::invalid(name, "must be finite"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Second-order dipolar rates in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    /// `kappa_m` for `m = 0, 1, 2`.
    pub kappa: [f64; 3],
    /// `delta kappa_m` for `m = 0, 1, 2`; index 0 is always zero.
    pub delta_kappa: [f64; 3],
    /// Coefficient of the secular `T_0` term.
    pub omega_d0: f64,
}

impl RateSet {
    pub fn zero() -> Self {
        RateSet { kappa: [0.0; 3], delta_kappa: [0.0; 3], omega_d0: 0.0 }
    }

    /// `kappa_m`, even in `m`.
    pub fn kappa(&self, m: i32) -> f64 {
        self.kappa[m.unsigned_abs() as usize]
    }

    /// `delta kappa_m`, odd in `m`.
    pub fn delta_kappa(&self, m: i32) -> f64 {
        self.delta_kappa[m.unsigned_abs() as usize] * m.signum() as f64
    }

    /// `kappa_m / J` for `m = 1, 2`.
    pub fn scaled(&self, j: f64) -> (f64, f64) {
        (self.kappa[1] / j, self.kappa[2] / j)
    }
}

/// `kappa_m + i dk_m = |omega_{d,m}|^2 tau_c (1 + i m omega0 tau_c) / (1 + (m omega0 tau_c)^2)`.
pub fn compute_rates(p: &PhysicalParams) -> Result<RateSet> {
    p.validate()?;
    match &p.dipolar {
        DipolarCoupling::Physical { omega_d, omega0, tau_c, theta, phi } => {
            let ang = AngularConfig { theta: *theta, phi: *phi };
            let mut r = RateSet::zero();
            for m in 0..=2 {
                // |omega_{d,m}| = |Y^2_{-m}| omega_d
                let w2 = spherical_harmonic_y2(-m, ang).norm_sqr() * omega_d * omega_d;
                let x = m as f64 * omega0 * tau_c;
                let kappa = w2 * tau_c / (1.0 + x * x);
                r.kappa[m as usize] = kappa;
                r.delta_kappa[m as usize] = kappa * x;
            }
            r.omega_d0 = spherical_harmonic_y2(0, ang).re * omega_d;
            Ok(r)
        }
        DipolarCoupling::Scaled(s) => Ok(RateSet {
            kappa: [s.kappa0 * p.j, s.kappa1 * p.j, s.kappa2 * p.j],
            delta_kappa: [0.0, s.delta_kappa1 * p.j, s.delta_kappa2 * p.j],
            omega_d0: s.omega_d0 * p.j,
        }),
    }
}

/// Linear map on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: LiouvilleMatrix,
    /// Rate that defines the scaled time unit (`J` for assembled generators).
    rate_unit: f64,
}

impl Superoperator {
    pub fn new(matrix: LiouvilleMatrix) -> Self {
        Superoperator { matrix, rate_unit: 1.0 }
    }

    pub fn zero() -> Self {
        Self::new(LiouvilleMatrix::zeros())
    }

    pub fn with_rate_unit(mut self, rate_unit: f64) -> Self {
        self.rate_unit = rate_unit;
        self
    }

    pub fn matrix(&self) -> &LiouvilleMatrix {
        &self.matrix
    }

    pub fn rate_unit(&self) -> f64 {
        self.rate_unit
    }

    /// `rho -> -i [h, rho]`.
    pub fn commutator(h: &Operator) -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::new((left(h) - right(h)) * -i)
    }

    /// `rho -> 2 a rho b^dag - {b^dag a, rho}`; equals the usual Lindblad
    /// dissipator when `a == b`.
    pub fn cross_dissipator(a: &Operator, b: &Operator) -> Self {
        let bd = b.adjoint();
        let k = bd * a;
        Self::new(sandwich(a, &bd) * Complex64::from(2.0) - left(&k) - right(&k))
    }

    pub fn lindblad(jump: &Operator) -> Self {
        Self::cross_dissipator(jump, jump)
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        unvectorize(&(self.matrix * vectorize(rho)))
    }

    /// Row functional `vec(1)^dag` composed with the generator; zero for
    /// trace-preserving maps.
    pub fn trace_residual(&self) -> f64 {
        let tr = vectorize(&identity()).adjoint();
        (tr * self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `exp(L t)`, with `t` in the inverse units of the matrix entries.
    pub fn propagator(&self, t: f64) -> LiouvilleMatrix {
        (self.matrix * Complex64::from(t)).exp()
    }

    fn scaled_add(&mut self, other: &Superoperator, w: f64) {
        self.matrix += other.matrix * Complex64::from(w);
    }
}

impl Mul<f64> for Superoperator {
    type Output = Superoperator;

    fn mul(mut self, rhs: f64) -> Superoperator {
        self.matrix *= Complex64::from(rhs);
        self
    }
}

impl Add for Superoperator {
    type Output = Superoperator;

    fn add(mut self, rhs: Superoperator) -> Superoperator {
        self.scaled_add(&rhs, 1.0);
        self
    }
}

/// Choi matrix `sum_ij |i><j| (x) map(|i><j|)` of a map on column-stacked
/// matrices; positive semidefinite exactly when the map is completely positive.
pub fn choi_matrix(map: &LiouvilleMatrix) -> LiouvilleMatrix {
    LiouvilleMatrix::from_fn(|r, c| {
        let (i, a, j, b) = (r / 4, r % 4, c / 4, c % 4);
        map[(4 * b + a, 4 * j + i)]
    })
}

pub fn vectorize(rho: &Operator) -> LiouvilleVector {
    LiouvilleVector::from_fn(|k, _| rho[(k % 4, k / 4)])
}

pub fn unvectorize(v: &LiouvilleVector) -> Operator {
    Operator::from_fn(|r, c| v[4 * c + r])
}

/// `vec(a X b) = (b^T (x) a) vec(X)`.
fn sandwich(a: &Operator, b: &Operator) -> LiouvilleMatrix {
    let bt = b.transpose();
    LiouvilleMatrix::from_fn(|r, c| bt[(r / 4, c / 4)] * a[(r % 4, c % 4)])
}

fn left(a: &Operator) -> LiouvilleMatrix {
    sandwich(a, &identity())
}

fn right(b: &Operator) -> LiouvilleMatrix {
    sandwich(&identity(), b)
}

fn pair_weight(alpha: f64, i: Qubit, j: Qubit) -> f64 {
    if i == j {
        1.0
    } else {
        alpha
    }
}

/// Hermitian part of the generator: secular dipolar term, Lamb shift and
/// the second-order dipolar shift (orders `+-1`, `+-2` only).
pub fn build_coherent_part(p: &PhysicalParams, r: &RateSet) -> Operator {
    let tensors = SphericalTensorSet::new();
    let mut h = tensors.get(0) * Complex64::from(-r.omega_d0);

    let up = 1.0 + p.m0;
    let down = 1.0 - p.m0;
    for i in Qubit::BOTH {
        for j in Qubit::BOTH {
            let w = -0.5 * p.delta_omega * pair_weight(p.alpha, i, j);
            let raise_lower = pauli(Axis::Plus, i) * pauli(Axis::Minus, j);
            let lower_raise = pauli(Axis::Minus, i) * pauli(Axis::Plus, j);
            h += (raise_lower * Complex64::from(down) - lower_raise * Complex64::from(up))
                * Complex64::from(w);
        }
    }

    for m in [-2, -1, 1, 2] {
        let t = tensors.get(-m);
        h += t.adjoint() * t * Complex64::from(r.delta_kappa(m));
    }
    h
}

/// Dissipator of the spatially correlated environment.
pub fn build_dissipator_d(p: &PhysicalParams) -> Superoperator {
    let mut d = Superoperator::zero();
    for i in Qubit::BOTH {
        for j in Qubit::BOTH {
            let w = 0.5 * p.j * pair_weight(p.alpha, i, j);
            let toward_up = Superoperator::cross_dissipator(&pauli(Axis::Plus, i), &pauli(Axis::Plus, j));
            let toward_down =
                Superoperator::cross_dissipator(&pauli(Axis::Minus, i), &pauli(Axis::Minus, j));
            d.scaled_add(&toward_up, w * (1.0 + p.m0));
            d.scaled_add(&toward_down, w * (1.0 - p.m0));
        }
    }
    d.with_rate_unit(p.j)
}

/// Second-order dipolar dissipator. Only the secular pairs `(m, -m)`
/// contribute, each as a Lindblad term with jump operator `T_{-m}`.
pub fn build_dissipator_q(r: &RateSet) -> Superoperator {
    let tensors = SphericalTensorSet::new();
    let mut q = Superoperator::zero();
    for m in -2..=2 {
        let rate = r.kappa(m);
        if rate != 0.0 {
            q.scaled_add(&Superoperator::lindblad(tensors.get(-m)), rate);
        }
    }
    q
}

/// Full generator `-i [H_coh, .] + D + Q`, with `J` as its time unit.
pub fn assemble_liouvillian(p: &PhysicalParams) -> Result<Superoperator> {
    let r = compute_rates(p)?;
    Ok(assemble_with_rates(p, &r))
}

/// As [`assemble_liouvillian`] for an already computed rate set.
pub fn assemble_with_rates(p: &PhysicalParams, r: &RateSet) -> Superoperator {
    let h = build_coherent_part(p, r);
    let mut l = Superoperator::commutator(&h);
    l.scaled_add(&build_dissipator_d(p), 1.0);
    l.scaled_add(&build_dissipator_q(r), 1.0);
    l.with_rate_unit(p.j)
}
