use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::master_equation::{LiouvilleVector, Superoperator};

#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    /// Eigenvalues sorted by decreasing real part (slowest modes first).
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal basis of the numerical null space.
    pub null_space: Vec<LiouvilleVector>,
}

impl SpectralAnalysis {
    pub fn null_dimension(&self) -> usize {
        self.null_space.len()
    }

    /// Smallest `|Re lambda|` among eigenvalues with `|lambda| > zero_tol`.
    pub fn slowest_decay_rate(&self, zero_tol: f64) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| z.norm() > zero_tol)
            .map(|z| z.re.abs())
            .min_by(f64::total_cmp)
    }

    /// Norm of the component of `v` outside the null space.
    pub fn null_space_residual(&self, v: &LiouvilleVector) -> f64 {
        let mut r = *v;
        for n in &self.null_space {
            r -= n * n.dotc(v);
        }
        r.norm()
    }
}

/// Eigenvalues (complex Schur form) and null space (SVD). Singular values
/// below `null_tol` times the largest one count as zero.
pub fn spectral_analysis(gen: &Superoperator, null_tol: f64) -> Result<SpectralAnalysis> {
    let m = *gen.matrix();
    let schur = Schur::try_new(m, 1e-15, 10_000)
        .ok_or_else(|| Error::Eigensolver("complex Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut eigenvalues: Vec<Complex64> = (0..16).map(|k| t[(k, k)]).collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re));

    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Eigensolver("SVD did not return right vectors".into()))?;
    let smax = svd.singular_values.max();
    let null_space = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= null_tol * smax.max(f64::MIN_POSITIVE))
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect();
    Ok(SpectralAnalysis { eigenvalues, null_space })
}
