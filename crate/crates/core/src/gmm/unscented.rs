use nalgebra::{SMatrix, SVector};

use super::GaussianComponent;
use crate::error::{Error, Result};
use crate::linalg::repair_spd;

/// Scaling of the symmetric sigma-point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnscentedParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UnscentedParams {
    /// alpha = 1, beta = 2, kappa = 0: all weights nonnegative for any n.
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, kappa: 0.0 }
    }
}

/// Pushes a Gaussian through `map` with the symmetric `2n + 1` sigma-point set.
///
/// The output covariance is symmetrized and eigenvalue-clamped.
pub fn unscented_transform<const N: usize, const M: usize, F>(
    comp: &GaussianComponent<N>,
    params: &UnscentedParams,
    map: F,
) -> Result<(SVector<f64, M>, SMatrix<f64, M, M>)>
where
    F: Fn(&SVector<f64, N>) -> Result<SVector<f64, M>>,
{
    let n = N as f64;
    let lambda = params.alpha * params.alpha * (n + params.kappa) - n;
    let spread = (n + lambda).sqrt();
    let chol = comp
        .cov
        .cholesky()
        .or_else(|| repair_spd(&comp.cov).ok().and_then(|c| c.cholesky()))
        .ok_or(Error::IllConditioned("unscented transform input covariance"))?;
    let l = chol.l();

    let w0_mean = lambda / (n + lambda);
    let w0_cov = w0_mean + (1.0 - params.alpha * params.alpha + params.beta);
    let wi = 1.0 / (2.0 * (n + lambda));

    let center = map(&comp.mean)?;
    let mut points = Vec::with_capacity(2 * N);
    for k in 0..N {
        let offset = l.column(k) * spread;
        points.push(map(&(comp.mean + offset))?);
        points.push(map(&(comp.mean - offset))?);
    }

    let mut mean = center * w0_mean;
    for p in &points {
        mean += p * wi;
    }
    let d0 = center - mean;
    let mut cov = d0 * d0.transpose() * w0_cov;
    for p in &points {
        let d = p - mean;
        cov += d * d.transpose() * wi;
    }
    let cov = repair_spd(&cov)?;
    Ok((mean, cov))
}
