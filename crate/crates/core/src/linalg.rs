//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Const, DMatrix, DimMin, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub type Vec2 = SVector<f64, 2>;
pub type Vec4 = SVector<f64, 4>;
pub type Mat2 = SMatrix<f64, 2, 2>;
pub type Mat4 = SMatrix<f64, 4, 4>;
pub type Mat2x4 = SMatrix<f64, 2, 4>;
pub type Mat4x2 = SMatrix<f64, 4, 2>;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    } else if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// Lower factor `L` with `L Lᵀ ≈ cov` for a symmetric positive semidefinite
/// matrix.
///
/// Plain Cholesky first; singular covariances get a diagonal jitter starting
/// at 1e-12 (relative to the largest diagonal entry) that grows tenfold until
/// the factorization succeeds. An all-zero matrix factors to zero.
pub fn psd_factor<const D: usize>(cov: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    if cov.iter().all(|&v| v == 0.0) {
        return SMatrix::zeros();
    }
    if let Some(ch) = cov.cholesky() {
        return ch.l();
    }
    let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-12 * scale;
    for _ in 0..12 {
        let shifted = cov + SMatrix::<f64, D, D>::identity() * jitter;
        if let Some(ch) = shifted.cholesky() {
            return ch.l();
        }
        jitter *= 10.0;
    }
    // Indefinite beyond rounding: fall back to the clipped eigen-square-root.
    let eig = DMatrix::from_column_slice(D, D, cov.as_slice()).symmetric_eigen();
    SMatrix::from_fn(|i, j| eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt())
}

/// One draw of `factor · n` with `n` standard normal.
pub fn correlated_normal<const D: usize, R: Rng + ?Sized>(
    factor: &SMatrix<f64, D, D>,
    rng: &mut R,
) -> SVector<f64, D> {
    let n = SVector::<f64, D>::from_fn(|_, _| rng.sample(StandardNormal));
    factor * n
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym2_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}
