//! Operator primitives on the two-qubit Hilbert space.
//!
//! Basis ordering is `|q1 q2>` with `|0>` the spin-up state (sigma_z = +1),
//! so the index order is `00, 01, 10, 11` and qubit 1 is the left tensor
//! factor.
//!
//! Rank-2 spherical tensors use the Pauli-scale normalization: every order
//! carries `Tr[T_m T_m^dag] = 1`, and they are twice the usual spin-operator
//! tensors built from `I = sigma / 2`:
//!
//! ```text
//! T_0   = (3 sz1 sz2 - s1.s2) / (2 sqrt 6)
//! T_+-1 = -+ (sz1 s+-2 + s+-1 sz2) / 2
//! T_+-2 = s+-1 s+-2
//! ```
//!
//! With this scale the dissipative rates of the dipolar coupling enter the
//! observable equations with unit weight (`-(kappa_1 + 4 kappa_2)` on `M_z`).

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex operator on the two-qubit Hilbert space.
pub type Operator = Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Single-qubit Pauli axis, including the ladder combinations
/// `sigma_+- = (sigma_x +- i sigma_y) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub const BOTH: [Qubit; 2] = [Qubit::One, Qubit::Two];
}

fn single(axis: Axis) -> Matrix2<Complex64> {
    match axis {
        Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Matrix2::new(ZERO, -I, I, ZERO),
        Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        // |0> is spin-up, so sigma_+ = |0><1| raises sigma_z.
        Axis::Plus => Matrix2::new(ZERO, ONE, ZERO, ZERO),
        Axis::Minus => Matrix2::new(ZERO, ZERO, ONE, ZERO),
    }
}

/// Kronecker product of two single-qubit operators.
pub fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Operator {
    Operator::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `sigma_axis` acting on one qubit, identity on the other.
pub fn pauli(axis: Axis, qubit: Qubit) -> Operator {
    let s = single(axis);
    let id = Matrix2::identity();
    match qubit {
        Qubit::One => kron2(&s, &id),
        Qubit::Two => kron2(&id, &s),
    }
}

/// `sigma_a (x) sigma_b` on qubits one and two.
pub fn pauli_pair(a: Axis, b: Axis) -> Operator {
    kron2(&single(a), &single(b))
}

pub fn identity() -> Operator {
    Operator::identity()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Largest entry modulus of `a - a^dag`.
pub fn hermiticity_residual(a: &Operator) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orientation of the inter-qubit vector relative to the polarization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularConfig {
    pub theta: f64,
    pub phi: f64,
}

impl AngularConfig {
    /// Validates `theta in [0, pi]` and `phi in [0, 2 pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let ang = AngularConfig { theta, phi };
        ang.validate()?;
        Ok(ang)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::invalid("theta", format!("{} not in [0, pi]", self.theta)));
        }
        if !(0.0..2.0 * PI).contains(&self.phi) {
            return Err(Error::invalid("phi", format!("{} not in [0, 2 pi)", self.phi)));
        }
        Ok(())
    }
}

fn check_order(m: i32) {
    assert!((-2..=2).contains(&m), "spherical order {m} outside -2..=2");
}

/// `Y^2_m(theta, phi)`, orthonormalized with the Condon-Shortley phase.
///
/// # Panics
/// If `m` is outside `-2..=2`.
pub fn spherical_harmonic_y2(m: i32, ang: AngularConfig) -> Complex64 {
    check_order(m);
    let (s, c) = ang.theta.sin_cos();
    let phase = Complex64::from_polar(1.0, m as f64 * ang.phi);
    match m {
        0 => Complex64::from((5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0)),
        1 => -(15.0 / (8.0 * PI)).sqrt() * s * c * phase,
        -1 => (15.0 / (8.0 * PI)).sqrt() * s * c * phase,
        _ => (15.0 / (32.0 * PI)).sqrt() * s * s * phase,
    }
}

/// Rank-2 irreducible spherical tensor of order `m` for two spins.
///
/// # Panics
/// If `m` is outside `-2..=2`.
pub fn build_t2(m: i32) -> Operator {
    check_order(m);
    let sz1 = pauli(Axis::Z, Qubit::One);
    let sz2 = pauli(Axis::Z, Qubit::Two);
    match m {
        0 => {
            let dot = pauli_pair(Axis::X, Axis::X)
                + pauli_pair(Axis::Y, Axis::Y)
                + pauli_pair(Axis::Z, Axis::Z);
            (sz1 * sz2 * Complex64::from(3.0) - dot) / Complex64::from(2.0 * 6f64.sqrt())
        }
        1 | -1 => {
            let ladder = if m == 1 { Axis::Plus } else { Axis::Minus };
            let sum = sz1 * pauli(ladder, Qubit::Two) + pauli(ladder, Qubit::One) * sz2;
            sum * Complex64::from(-0.5 * m as f64)
        }
        _ => {
            let ladder = if m == 2 { Axis::Plus } else { Axis::Minus };
            pauli(ladder, Qubit::One) * pauli(ladder, Qubit::Two)
        }
    }
}

/// The full rank-2 multiplet, indexed by order.
#[derive(Debug, Clone)]
pub struct SphericalTensorSet {
    t2: [Operator; 5],
}

impl SphericalTensorSet {
    pub fn new() -> Self {
        SphericalTensorSet {
            t2: [build_t2(-2), build_t2(-1), build_t2(0), build_t2(1), build_t2(2)],
        }
    }

    /// # Panics
    /// If `m` is outside `-2..=2`.
    pub fn get(&self, m: i32) -> &Operator {
        check_order(m);
        &self.t2[(m + 2) as usize]
    }
}

impl Default for SphericalTensorSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Dipolar Hamiltonian together with its per-order coefficients.
#[derive(Debug, Clone)]
pub struct DipolarHamiltonian {
    pub operator: Operator,
    /// `omega_{d,m}` stored at index `m + 2`.
    pub coefficients: [Complex64; 5],
}

impl DipolarHamiltonian {
    pub fn coefficient(&self, m: i32) -> Complex64 {
        check_order(m);
        self.coefficients[(m + 2) as usize]
    }
}

/// `H_DD = sum_m omega_{d,m} T_m` with `omega_{d,m} = (-1)^m Y^2_{-m} omega_d`.
pub fn dipolar_hamiltonian(omega_d: f64, ang: AngularConfig) -> Result<DipolarHamiltonian> {
    if !(omega_d >= 0.0) {
        return Err(Error::invalid("omega_d", format!("{omega_d} must be >= 0")));
    }
    let tensors = SphericalTensorSet::new();
    let mut coefficients = [ZERO; 5];
    let mut operator = Operator::zeros();
    for m in -2..=2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let w = spherical_harmonic_y2(-m, ang) * (sign * omega_d);
        coefficients[(m + 2) as usize] = w;
        operator += tensors.get(m) * w;
    }
    Ok(DipolarHamiltonian { operator, coefficients })
}
