//! The 15-observable representation of two-qubit states and the
//! block-diagonal linear system they obey.
//!
//! Observables, in the frozen serialization order:
//!
//! ```text
//! Mz  Mzz  Mc  Mx  My  Mxy  Mxz  Myz  Ax  Ay  Az  Axy  Axz  Ayz  Ac
//! ```
//!
//! with `M_a = <s_a (x) 1 + 1 (x) s_a> / 2`, `A_a = <s_a (x) 1 - 1 (x) s_a> / 2`,
//! `M_ab = <s_a s_b + s_b s_a> / 4`, `A_ab = <s_a s_b - s_b s_a> / 4`,
//! `Mzz = <s_z s_z> / 4`, `Mc = Mxx + Myy` and `Ac = Mxx - Myy`.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix3, Matrix4, SMatrix, SVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master_equation::{PhysicalParams, RateSet, Superoperator};
use crate::spin::{identity, pauli, pauli_pair, Axis, Operator, Qubit};

pub const N_OBSERVABLES: usize = 15;

pub type StateArray = SVector<f64, N_OBSERVABLES>;
pub type SystemMatrix = SMatrix<f64, N_OBSERVABLES, N_OBSERVABLES>;

/// Column names in serialization order.
pub const FIELD_NAMES: [&str; N_OBSERVABLES] = [
    "Mz", "Mzz", "Mc", "Mx", "My", "Mxy", "Mxz", "Myz", "Ax", "Ay", "Az", "Axy", "Axz", "Ayz", "Ac",
];

/// Positions of each block's variables in the serialization order.
pub const BLOCK_INDICES: [&[usize]; 5] = [&[0, 1, 2], &[3, 4, 6, 7], &[5, 14], &[11, 10], &[8, 9, 12, 13]];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableVector {
    #[serde(rename = "Mz", default)]
    pub mz: f64,
    #[serde(rename = "Mzz", default)]
    pub mzz: f64,
    #[serde(rename = "Mc", default)]
    pub mc: f64,
    #[serde(rename = "Mx", default)]
    pub mx: f64,
    #[serde(rename = "My", default)]
    pub my: f64,
    #[serde(rename = "Mxy", default)]
    pub mxy: f64,
    #[serde(rename = "Mxz", default)]
    pub mxz: f64,
    #[serde(rename = "Myz", default)]
    pub myz: f64,
    #[serde(rename = "Ax", default)]
    pub ax: f64,
    #[serde(rename = "Ay", default)]
    pub ay: f64,
    #[serde(rename = "Az", default)]
    pub az: f64,
    #[serde(rename = "Axy", default)]
    pub axy: f64,
    #[serde(rename = "Axz", default)]
    pub axz: f64,
    #[serde(rename = "Ayz", default)]
    pub ayz: f64,
    #[serde(rename = "Ac", default)]
    pub ac: f64,
}

impl ObservableVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// State with only the polarization block populated.
    pub fn block1(mz: f64, mzz: f64, mc: f64) -> Self {
        ObservableVector { mz, mzz, mc, ..Default::default() }
    }

    pub fn to_array(&self) -> [f64; N_OBSERVABLES] {
        [
            self.mz, self.mzz, self.mc, self.mx, self.my, self.mxy, self.mxz, self.myz, self.ax,
            self.ay, self.az, self.axy, self.axz, self.ayz, self.ac,
        ]
    }

    pub fn from_array(a: [f64; N_OBSERVABLES]) -> Self {
        let [mz, mzz, mc, mx, my, mxy, mxz, myz, ax, ay, az, axy, axz, ayz, ac] = a;
        ObservableVector { mz, mzz, mc, mx, my, mxy, mxz, myz, ax, ay, az, axy, axz, ayz, ac }
    }

    pub fn to_vector(&self) -> StateArray {
        StateArray::from(self.to_array())
    }

    pub fn from_vector(v: &StateArray) -> Self {
        let mut a = [0.0; N_OBSERVABLES];
        a.copy_from_slice(v.as_slice());
        Self::from_array(a)
    }

    /// `Mxx + Myy + Mzz`, conserved by the common environment.
    pub fn conserved_sum(&self) -> f64 {
        self.mc + self.mzz
    }

    /// Largest magnitude among observables outside the polarization block.
    pub fn off_block1_norm(&self) -> f64 {
        self.to_array()[3..].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn build_operators() -> [Operator; N_OBSERVABLES] {
    let half = Complex64::from(0.5);
    let quarter = Complex64::from(0.25);
    let sym = |a: Axis| (pauli(a, Qubit::One) + pauli(a, Qubit::Two)) * half;
    let anti = |a: Axis| (pauli(a, Qubit::One) - pauli(a, Qubit::Two)) * half;
    let sym2 = |a: Axis, b: Axis| (pauli_pair(a, b) + pauli_pair(b, a)) * quarter;
    let anti2 = |a: Axis, b: Axis| (pauli_pair(a, b) - pauli_pair(b, a)) * quarter;
    let xx = pauli_pair(Axis::X, Axis::X);
    let yy = pauli_pair(Axis::Y, Axis::Y);
    [
        sym(Axis::Z),
        pauli_pair(Axis::Z, Axis::Z) * quarter,
        (xx + yy) * quarter,
        sym(Axis::X),
        sym(Axis::Y),
        sym2(Axis::X, Axis::Y),
        sym2(Axis::X, Axis::Z),
        sym2(Axis::Y, Axis::Z),
        anti(Axis::X),
        anti(Axis::Y),
        anti(Axis::Z),
        anti2(Axis::X, Axis::Y),
        anti2(Axis::X, Axis::Z),
        anti2(Axis::Y, Axis::Z),
        (xx - yy) * quarter,
    ]
}

/// Hermitian operators whose expectation values are the observables.
pub fn observable_operators() -> &'static [Operator; N_OBSERVABLES] {
    static OPS: OnceLock<[Operator; N_OBSERVABLES]> = OnceLock::new();
    OPS.get_or_init(build_operators)
}

/// `Tr(O_k^2)`; the operators are mutually orthogonal in the trace inner product.
fn gram_diagonal() -> &'static [f64; N_OBSERVABLES] {
    static GRAM: OnceLock<[f64; N_OBSERVABLES]> = OnceLock::new();
    GRAM.get_or_init(|| observable_operators().map(|o| (o * o).trace().re))
}

fn expectations(rho: &Operator) -> [f64; N_OBSERVABLES] {
    observable_operators().map(|o| (o * rho).trace().re)
}

/// Expectation values without the unit-trace check.
pub fn expectation_values(rho: &Operator) -> ObservableVector {
    ObservableVector::from_array(expectations(rho))
}

pub fn rho_to_observables(rho: &Operator) -> Result<ObservableVector> {
    let tr = rho.trace();
    if (tr - Complex64::from(1.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    Ok(ObservableVector::from_array(expectations(rho)))
}

/// Linear inverse of [`rho_to_observables`]; positivity is not enforced.
pub fn observables_to_rho(v: &ObservableVector) -> Operator {
    let gram = gram_diagonal();
    let mut rho = identity() * Complex64::from(0.25);
    for ((o, g), x) in observable_operators().iter().zip(gram).zip(v.to_array()) {
        rho += o * Complex64::from(x / g);
    }
    rho
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &Operator) -> f64 {
    let h = (rho + rho.adjoint()) * Complex64::from(0.5);
    h.symmetric_eigenvalues().min()
}

/// Matrix of a generator restricted to observable space: `d v / dt = M v + b`.
pub fn project_generator(gen: &Superoperator) -> (SystemMatrix, StateArray) {
    let ops = observable_operators();
    let gram = gram_diagonal();
    let images: Vec<Operator> = ops
        .iter()
        .zip(gram)
        .map(|(o, g)| gen.apply(&(o * Complex64::from(1.0 / g))))
        .collect();
    let m = SystemMatrix::from_fn(|k, l| (ops[k] * images[l]).trace().re);
    let fixed = gen.apply(&(identity() * Complex64::from(0.25)));
    let b = StateArray::from_fn(|k, _| (ops[k] * fixed).trace().re);
    (m, b)
}

/// Block-diagonal linear system for the 15 observables, in physical rate units.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    /// Over `(Mz, Mzz, Mc)`.
    pub l1: Matrix3<f64>,
    pub b1: Vector3<f64>,
    /// Over `(Mx, My, Mxz, Myz)`.
    pub l2: Matrix4<f64>,
    /// Over `(Mxy, Ac)`.
    pub l3: Matrix2<f64>,
    /// Over `(Axy, Az)`.
    pub l4: Matrix2<f64>,
    /// Over `(Ax, Ay, Axz, Ayz)`.
    pub l5: Matrix4<f64>,
    /// Rate defining the scaled time unit.
    pub j: f64,
}

impl BlockSystem {
    /// Embedding into the full 15x15 system in serialization order.
    pub fn full_matrix(&self) -> SystemMatrix {
        let mut m = SystemMatrix::zeros();
        let mut place = |idx: &[usize], get: &dyn Fn(usize, usize) -> f64| {
            for (a, &r) in idx.iter().enumerate() {
                for (b, &c) in idx.iter().enumerate() {
                    m[(r, c)] = get(a, b);
                }
            }
        };
        place(BLOCK_INDICES[0], &|a, b| self.l1[(a, b)]);
        place(BLOCK_INDICES[1], &|a, b| self.l2[(a, b)]);
        place(BLOCK_INDICES[2], &|a, b| self.l3[(a, b)]);
        place(BLOCK_INDICES[3], &|a, b| self.l4[(a, b)]);
        place(BLOCK_INDICES[4], &|a, b| self.l5[(a, b)]);
        m
    }

    pub fn offset(&self) -> StateArray {
        let mut b = StateArray::zeros();
        b.fixed_rows_mut::<3>(0).copy_from(&self.b1);
        b
    }

    /// Same dynamics with time measured in units of `1 / J`.
    pub fn scaled(&self) -> BlockSystem {
        let s = 1.0 / self.j;
        BlockSystem {
            l1: self.l1 * s,
            b1: self.b1 * s,
            l2: self.l2 * s,
            l3: self.l3 * s,
            l4: self.l4 * s,
            l5: self.l5 * s,
            j: 1.0,
        }
    }

    pub fn derivative(&self, v: &ObservableVector) -> ObservableVector {
        ObservableVector::from_vector(&(self.full_matrix() * v.to_vector() + self.offset()))
    }
}

/// Builds the block system from the parameters and rates.
///
/// Secular coefficients (`kappa_0`, `omega_{d,0}`) appear below through
/// `k0 = kappa_0 / 6` and `w0 = omega_{d,0} / sqrt 6`, which is their
/// natural scale for a `T_0` that is `sqrt 6` times the one used in
/// [`crate::spin`]; the integer coefficients then read directly.
pub fn build_block_system(p: &PhysicalParams, r: &RateSet) -> BlockSystem {
    let j = p.j;
    let m0 = p.m0;
    let al = p.alpha;
    let dw = p.delta_omega;
    let [_, k1, k2] = r.kappa;
    let [_, dk1, dk2] = r.delta_kappa;
    let k0 = r.kappa[0] / 6.0;
    let w0 = r.omega_d0 / 6f64.sqrt();

    let l1 = Matrix3::new(
        -2.0 * j - k1 - 4.0 * k2, 0.0, 4.0 * m0 * al * j,
        m0 * j, -4.0 * j - 2.0 * k1, 2.0 * al * j + k1,
        -m0 * al * j, 4.0 * al * j + 2.0 * k1, -2.0 * j - k1,
    );
    let b1 = Vector3::new(2.0 * m0 * j, 0.0, 0.0);

    let shift = -dk1 / 2.0 - dk2 + dw;

    let d2 = -(2.5 * k1 + k2 + 9.0 * k0 + j);
    let d2b = -(0.5 * k1 + k2 + 9.0 * k0 + 3.0 * j + 2.0 * j * al);
    let c2 = 2.0 * m0 * al * dw + 6.0 * w0;
    let e2 = m0 * al * dw / 2.0 + 1.5 * w0;
    let f2 = m0 * j + m0 * j * al / 2.0;
    let g2 = 2.0 * m0 * j * al;
    let l2 = Matrix4::new(
        d2, shift, -g2, c2,
        -shift, d2, -c2, -g2,
        f2, e2, d2b, shift,
        -e2, f2, -shift, d2b,
    );

    let d3 = -(k1 + 2.0 * k2 + 2.0 * j);
    let o3 = dk1 + 2.0 * dk2 - 2.0 * dw;
    let l3 = Matrix2::new(d3, o3, -o3, d3);

    let d4 = -(k1 + 4.0 * k0 + 2.0 * j);
    let o4 = m0 * al * dw + w0;
    let l4 = Matrix2::new(d4, o4, -4.0 * o4, d4);

    let d5 = -(0.5 * k1 + k2 + k0 + j);
    let d5b = -(0.5 * k1 + k2 + k0 + 3.0 * j - 2.0 * j * al);
    let c5 = -2.0 * m0 * al * dw + 2.0 * w0;
    let e5 = -m0 * al * dw / 2.0 + w0 / 2.0;
    let f5 = m0 * j - m0 * j * al / 2.0;
    let l5 = Matrix4::new(
        d5, shift, g2, c5,
        -shift, d5, -c5, g2,
        f5, e5, d5b, shift,
        -e5, f5, -shift, d5b,
    );

    BlockSystem { l1, b1, l2, l3, l4, l5, j }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master_equation::{assemble_with_rates, compute_rates, DipolarCoupling};
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pure(v: [f64; 4]) -> Operator {
        let s = Vector4::from(v).map(Complex64::from).normalize();
        s * s.adjoint()
    }

    fn random_rho(rng: &mut ChaCha8Rng) -> Operator {
        let a = Operator::from_fn(|_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p = a * a.adjoint();
        p / p.trace()
    }

    #[test]
    fn operators_are_orthogonal() {
        let ops = observable_operators();
        for (k, a) in ops.iter().enumerate() {
            assert!(crate::spin::hermiticity_residual(a) < 1e-15);
            assert!(a.trace().norm() < 1e-15);
            for b in &ops[k + 1..] {
                assert!((a * b).trace().norm() < 1e-15);
            }
        }
    }

    #[test]
    fn singlet_and_triplet_values() {
        let s = rho_to_observables(&pure([0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(s.max_abs_diff(&ObservableVector::block1(0.0, -0.25, -0.5)) < 1e-15);
        let t = rho_to_observables(&pure([0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(t.max_abs_diff(&ObservableVector::block1(0.0, -0.25, 0.5)) < 1e-15);
        let mixed = rho_to_observables(&(identity() / Complex64::from(4.0))).unwrap();
        assert_eq!(mixed, ObservableVector::zero());
    }

    #[test]
    fn dipolar_order_reconstruction() {
        let rho = observables_to_rho(&ObservableVector::block1(0.0, -0.25, 0.0));
        let expect = (identity() - pauli_pair(Axis::Z, Axis::Z)) / Complex64::from(4.0);
        assert!(crate::spin::max_abs(&(rho - expect)) < 1e-15);
        assert_eq!(observables_to_rho(&ObservableVector::zero()), identity() / Complex64::from(4.0));
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let rho = random_rho(&mut rng);
            let back = observables_to_rho(&rho_to_observables(&rho).unwrap());
            assert!(crate::spin::max_abs(&(back - rho)) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_trace() {
        let rho = identity() / Complex64::from(2.0);
        assert!(matches!(rho_to_observables(&rho), Err(Error::InvalidState(_))));
    }

    #[test]
    fn array_order_matches_names() {
        let v = ObservableVector::from_array(std::array::from_fn(|k| k as f64));
        let json = serde_json::to_value(v).unwrap();
        for (k, name) in FIELD_NAMES.iter().enumerate() {
            assert_eq!(json[name].as_f64().unwrap(), k as f64);
        }
    }

    #[test]
    fn singular_at_common_environment() {
        let p = PhysicalParams::scaled(1.0, 0.9, 1.0, 0.0, 0.0);
        let b = build_block_system(&p, &compute_rates(&p).unwrap());
        assert!(b.l1.determinant().abs() < 1e-12);
        // Row 2 + row 3 vanish: Mzz + Mc is conserved.
        let rows = b.l1.row(1) + b.l1.row(2);
        assert!(rows.amax() < 1e-15);
    }

    #[test]
    fn regular_steady_state_without_dipolar_terms() {
        let p = PhysicalParams::scaled(1.0, 0.9, 0.5, 0.0, 0.0);
        let b = build_block_system(&p, &compute_rates(&p).unwrap());
        let v = b.l1.lu().solve(&-b.b1).unwrap();
        assert!((v - Vector3::new(0.9, 0.2025, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn conserved_sum_rate_proportional_to_departure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k1 = 0.3;
        let p1 = PhysicalParams::scaled(1.0, 0.4, 0.5, k1, 0.2);
        let p2 = PhysicalParams { alpha: 0.75, ..p1.clone() };
        let b1 = build_block_system(&p1, &compute_rates(&p1).unwrap());
        let b2 = build_block_system(&p2, &compute_rates(&p2).unwrap());
        for _ in 0..5 {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.25..0.25), rng.random_range(-0.5..0.5));
            let rate = |b: &BlockSystem| {
                let d = b.l1 * v + b.b1;
                d[1] + d[2]
            };
            // With the alpha-independent part removed, the remainder scales with (1 - alpha).
            let at_one = {
                let p = PhysicalParams { alpha: 1.0, ..p1.clone() };
                rate(&build_block_system(&p, &compute_rates(&p).unwrap()))
            };
            assert!(at_one.abs() < 1e-14);
            let r1 = rate(&b1);
            let r2 = rate(&b2);
            assert!((r1 / 0.5 - r2 / 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn blocks_stable_for_local_environment() {
        let p = PhysicalParams::scaled(1.0, 0.9, 0.0, 0.0, 0.0);
        let b = build_block_system(&p, &compute_rates(&p).unwrap());
        let eig = b.full_matrix().complex_eigenvalues();
        assert!(eig.iter().all(|z| z.re <= 1e-12));
    }

    #[test]
    fn scaled_view_divides_by_j() {
        let p = PhysicalParams::scaled(2.5, 0.3, 0.7, 1.0, 2.0);
        let b = build_block_system(&p, &compute_rates(&p).unwrap());
        let s = b.scaled();
        assert!((s.l1 * 2.5 - b.l1).amax() < 1e-14);
        assert_eq!(s.j, 1.0);
    }

    #[test]
    fn blocks_match_projected_liouvillian() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..25 {
            let p = PhysicalParams {
                j: rng.random_range(0.2..3.0),
                delta_omega: rng.random_range(-2.0..2.0),
                m0: rng.random_range(-1.0..1.0),
                alpha: rng.random_range(0.0..1.0),
                dipolar: DipolarCoupling::Physical {
                    omega_d: rng.random_range(0.0..3.0),
                    omega0: rng.random_range(0.0..5.0),
                    tau_c: rng.random_range(0.05..1.0),
                    theta: rng.random_range(0.0..3.0),
                    phi: rng.random_range(0.0..6.0),
                },
            };
            let r = compute_rates(&p).unwrap();
            let (m, b) = project_generator(&assemble_with_rates(&p, &r));
            let blocks = build_block_system(&p, &r);
            assert!((m - blocks.full_matrix()).amax() < 1e-12, "{}", (m - blocks.full_matrix()).amax());
            assert!((b - blocks.offset()).amax() < 1e-12);
        }
    }

    #[test]
    fn min_eigenvalue_of_projector() {
        assert!(min_eigenvalue(&pure([1.0, 0.0, 0.0, 0.0])).abs() < 1e-15);
        let bad = observables_to_rho(&ObservableVector::block1(0.0, 0.0, 2.0));
        assert!(min_eigenvalue(&bad) < -0.5);
    }
}
