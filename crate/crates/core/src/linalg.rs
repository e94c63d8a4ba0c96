//! Small dense linear-algebra helpers over fixed-size matrices.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::{Error, Result};

pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
///
/// Each eigenvector's largest-magnitude entry is made positive so the
/// decomposition is reproducible.
pub fn sym_eigen<const N: usize>(m: &SMatrix<f64, N, N>) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let dm = DMatrix::from_column_slice(N, N, m.as_slice());
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut values = SVector::<f64, N>::zeros();
    let mut vectors = SMatrix::<f64, N, N>::zeros();
    for (k, &src) in order.iter().enumerate() {
        values[k] = eig.eigenvalues[src];
        let mut col = SVector::<f64, N>::from_iterator(eig.eigenvectors.column(src).iter().copied());
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col = -col;
        }
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

/// Symmetrizes and clamps eigenvalues below `1e-12 * trace / n`.
pub fn repair_spd<const N: usize>(m: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let sym = symmetrize(m);
    let trace = sym.trace();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::IllConditioned("covariance trace is not positive"));
    }
    let floor = 1e-12 * trace / N as f64;
    let (values, vectors) = sym_eigen(&sym);
    if values.iter().all(|&v| v >= floor) {
        return Ok(sym);
    }
    let clamped = values.map(|v| v.max(floor));
    let out = vectors * SMatrix::<f64, N, N>::from_diagonal(&clamped) * vectors.transpose();
    let out = symmetrize(&out);
    if out.cholesky().is_none() {
        return Err(Error::IllConditioned("cholesky failed after eigenvalue clamp"));
    }
    Ok(out)
}

/// Natural log of the multivariate normal density N(x; mean, cov).
pub fn log_gaussian<const N: usize>(
    x: &SVector<f64, N>,
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
) -> Result<f64> {
    let chol = cov.cholesky().ok_or(Error::IllConditioned("covariance not positive definite"))?;
    Ok(log_gaussian_residual(&(x - mean), &chol))
}

pub(crate) fn log_gaussian_residual<const N: usize>(
    residual: &SVector<f64, N>,
    chol: &nalgebra::Cholesky<f64, nalgebra::Const<N>>,
) -> f64 {
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for k in 0..N {
        log_det += 2.0 * l[(k, k)].ln();
    }
    let y = chol
        .l()
        .solve_lower_triangular(residual)
        .unwrap_or_else(|| SVector::<f64, N>::from_element(f64::INFINITY));
    -0.5 * (N as f64 * TAU.ln() + log_det + y.norm_squared())
}

pub fn gaussian<const N: usize>(
    x: &SVector<f64, N>,
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
) -> Result<f64> {
    log_gaussian(x, mean, cov).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Matrix3, Vector2};

    #[test]
    fn eigen_sorted_descending() {
        let m = Matrix3::new(2.5, 0.5, 1.5, 0.5, 3.5, 1.0, 1.5, 1.0, 3.0);
        let (vals, vecs) = sym_eigen(&m);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let rebuilt = vecs * Matrix3::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!(rebuilt, m, epsilon = 1e-12);
    }

    #[test]
    fn repair_clamps_negative_eigenvalues() {
        let m = Matrix2::new(1.0, 1.0, 1.0, 1.0 - 1e-15);
        let fixed = repair_spd(&m).unwrap();
        assert!(fixed.cholesky().is_some());
        assert_relative_eq!(fixed, m, epsilon = 1e-10);
    }

    #[test]
    fn standard_normal_peak() {
        let d = gaussian(&Vector2::zeros(), &Vector2::zeros(), &Matrix2::identity()).unwrap();
        assert_relative_eq!(d, 1.0 / TAU, max_relative = 1e-14);
    }
}
