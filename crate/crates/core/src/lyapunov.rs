//! Stationary covariance from the continuous Lyapunov equation
//! `A V + V Aᵀ = −D`.

use nalgebra::{DMatrix, DVector, SMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::linear_dynamics::{spectral_abscissa, StabilityError};

pub mod integral;

/// Largest relative residual accepted for a returned solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("drift matrix is not Hurwitz (spectral abscissa {spectral_abscissa:e}); no unique stationary covariance")]
    Unstable { spectral_abscissa: f64 },
    #[error("diffusion matrix must be symmetric positive semidefinite")]
    InvalidDiffusion,
    #[error("Kronecker system is numerically singular (pivot ratio {pivot_ratio:e})")]
    Singular { pivot_ratio: f64 },
    #[error("solution residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}")]
    Inaccurate { residual: f64 },
    #[error("solution is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrix<const N: usize> {
    pub v: SMatrix<f64, N, N>,
    /// `‖AV + VAᵀ + D‖_F / max(‖D‖_F, ε)`.
    pub residual_norm: f64,
}

/// Relative Lyapunov residual of a candidate solution.
pub fn relative_residual<const N: usize>(
    a: &SMatrix<f64, N, N>,
    d: &SMatrix<f64, N, N>,
    v: &SMatrix<f64, N, N>,
) -> f64 {
    let r = a * v + v * a.transpose() + d;
    r.norm() / d.norm().max(f64::MIN_POSITIVE)
}

fn min_symmetric_eigenvalue<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let dm = DMatrix::from_column_slice(N, N, m.as_slice());
    SymmetricEigen::new(dm).eigenvalues.min()
}

/// Solve `A V + V Aᵀ = −D` by vectorization.
///
/// `(I⊗A + A⊗I) vec V = −vec D` is factored with partial-pivot LU, refined
/// once, and the result symmetrized.
pub fn solve_lyapunov<const N: usize>(
    a: &SMatrix<f64, N, N>,
    d: &SMatrix<f64, N, N>,
) -> Result<CovarianceMatrix<N>, LyapunovError> {
    let d_norm = d.norm();
    if (d - d.transpose()).norm() > 1e-12 * d_norm
        || min_symmetric_eigenvalue(d) < -1e-12 * d_norm
    {
        return Err(LyapunovError::InvalidDiffusion);
    }

    let a_dyn = DMatrix::from_column_slice(N, N, a.as_slice());
    let abscissa = spectral_abscissa(&a_dyn)?;
    if abscissa >= -1e-12 * a.norm().max(f64::MIN_POSITIVE) {
        return Err(LyapunovError::Unstable { spectral_abscissa: abscissa });
    }

    let n2 = N * N;
    // Column-major vec: vec(AV) = (I⊗A) vec V and vec(VAᵀ) = (A⊗I) vec V.
    let kron = DMatrix::from_fn(n2, n2, |row, col| {
        let (i, j) = (row % N, row / N);
        let (k, l) = (col % N, col / N);
        let mut x = 0.0;
        if j == l {
            x += a[(i, k)];
        }
        if i == k {
            x += a[(j, l)];
        }
        x
    });
    let lu = kron.clone().lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let pivot_ratio = pivots.min() / pivots.max().max(f64::MIN_POSITIVE);
    if !(pivot_ratio > 1e-15) {
        return Err(LyapunovError::Singular { pivot_ratio });
    }

    let rhs = -DVector::from_column_slice(d.as_slice());
    let mut x = lu.solve(&rhs).ok_or(LyapunovError::Singular { pivot_ratio })?;
    // One step of iterative refinement on the vectorized system.
    let correction = lu
        .solve(&(&rhs - &kron * &x))
        .ok_or(LyapunovError::Singular { pivot_ratio })?;
    x += correction;

    let raw = SMatrix::<f64, N, N>::from_column_slice(x.as_slice());
    let v = (raw + raw.transpose()) * 0.5;
    let residual_norm = relative_residual(a, d, &v);
    if !(residual_norm <= RESIDUAL_TOLERANCE) {
        return Err(LyapunovError::Inaccurate { residual: residual_norm });
    }
    let min_eigenvalue = min_symmetric_eigenvalue(&v);
    if min_eigenvalue < -1e-10 * v.norm() {
        return Err(LyapunovError::NotPositive { min_eigenvalue });
    }
    Ok(CovarianceMatrix { v, residual_norm })
}
