//! Gaussian mixtures and the operations that maintain them: the unscented
//! transform, projection into the field of regard, field-of-view driven
//! splitting, L2 distances and pruning/merging.

mod fov;
mod l2;
mod maintenance;
mod split;
mod unscented;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::astro::{measure_radec, measurement_jacobian, StateVector};
use crate::error::{Error, Result};
use crate::linalg;

pub use fov::{mahalanobis_to_fov, FovRect};
pub use l2::gmm_l2_distance;
pub use maintenance::{prune_and_merge, PruneConfig};
pub use split::{
    recursive_fov_split, select_split_direction, split_component, SplitConfig, SplitDirection, SplitLibrary,
};
pub use unscented::{unscented_transform, UnscentedParams};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent<const N: usize> {
    pub weight: f64,
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
}

impl<const N: usize> GaussianComponent<N> {
    pub fn new(weight: f64, mean: SVector<f64, N>, cov: SMatrix<f64, N, N>) -> Self {
        Self { weight, mean, cov }
    }

    /// Unweighted density of this component at `x`.
    pub fn density(&self, x: &SVector<f64, N>) -> Result<f64> {
        linalg::gaussian(x, &self.mean, &self.cov)
    }
}

/// Weighted sum of Gaussians sharing dimension `N`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianMixture<const N: usize> {
    pub components: Vec<GaussianComponent<N>>,
}

impl<const N: usize> GaussianMixture<N> {
    pub fn new(components: Vec<GaussianComponent<N>>) -> Self {
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Weighted mean of the mixture (normalized by total weight).
    pub fn mean(&self) -> SVector<f64, N> {
        let total = self.total_weight();
        self.components.iter().fold(SVector::zeros(), |acc, c| acc + c.mean * c.weight) / total
    }

    /// Moment-matched covariance of the normalized mixture.
    pub fn covariance(&self) -> SMatrix<f64, N, N> {
        let total = self.total_weight();
        let mean = self.mean();
        self.components.iter().fold(SMatrix::zeros(), |acc, c| {
            let d = c.mean - mean;
            acc + (c.cov + d * d.transpose()) * c.weight
        }) / total
    }

    /// Intensity (weighted density sum) at `x`.
    pub fn evaluate(&self, x: &SVector<f64, N>) -> Result<f64> {
        self.components.iter().map(|c| c.density(x).map(|d| d * c.weight)).sum()
    }

    pub fn scale_weights(&mut self, factor: f64) {
        for c in &mut self.components {
            c.weight *= factor;
        }
    }
}

/// Nonlinear map from state space to the two-dimensional field of regard.
pub trait MeasurementMap<const N: usize> {
    fn eval(&self, x: &SVector<f64, N>) -> Result<Vector2<f64>>;
    fn jacobian(&self, x: &SVector<f64, N>) -> Result<SMatrix<f64, 2, N>>;
}

/// Right ascension / declination seen from a fixed observer state.
#[derive(Debug, Clone, Copy)]
pub struct RaDecSensor {
    pub observer: StateVector,
}

impl MeasurementMap<6> for RaDecSensor {
    fn eval(&self, x: &SVector<f64, 6>) -> Result<Vector2<f64>> {
        measure_radec(&StateVector::from_vector(x), &self.observer).map(|z| z.to_vector())
    }

    fn jacobian(&self, x: &SVector<f64, 6>) -> Result<SMatrix<f64, 2, 6>> {
        measurement_jacobian(&StateVector::from_vector(x), &self.observer)
    }
}

/// Linear map `z = H x`.
#[derive(Debug, Clone, Copy)]
pub struct LinearMap<const N: usize> {
    pub h: SMatrix<f64, 2, N>,
}

impl<const N: usize> MeasurementMap<N> for LinearMap<N> {
    fn eval(&self, x: &SVector<f64, N>) -> Result<Vector2<f64>> {
        Ok(self.h * x)
    }

    fn jacobian(&self, _x: &SVector<f64, N>) -> Result<SMatrix<f64, 2, N>> {
        Ok(self.h)
    }
}

/// Projected mean `h(mu)` and covariance `H P H^T` of a component.
pub fn project_to_for<const N: usize>(
    comp: &GaussianComponent<N>,
    map: &impl MeasurementMap<N>,
) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let mu = map.eval(&comp.mean)?;
    let h = map.jacobian(&comp.mean)?;
    let p = h * comp.cov * h.transpose();
    Ok((mu, linalg::symmetrize(&p)))
}

pub(crate) fn require_positive_weight<const N: usize>(mix: &GaussianMixture<N>) -> Result<f64> {
    let total = mix.total_weight();
    if mix.is_empty() || !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeight);
    }
    Ok(total)
}
