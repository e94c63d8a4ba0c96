//! Admissible-region search sets from a single optical attributable.
//!
//! An attributable fixes the line of sight and its rate; range and range-rate
//! are unknown. A uniform grid over (range, range-rate) is filtered by
//! semimajor-axis, eccentricity and periapsis constraints, and every surviving
//! point becomes one equally weighted, equally shaped Gaussian in the polar
//! coordinates (ra, dec, ra_rate, dec_rate, range, range_rate). Each Gaussian
//! is carried to inertial Cartesian coordinates with the unscented transform.

use nalgebra::{Matrix4, SMatrix, SVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::astro::{Epoch, StateVector, MU_EARTH};
use crate::error::{Error, Result};
use crate::gmm::{unscented_transform, GaussianComponent, GaussianMixture, UnscentedParams};

/// Angles, angle rates and observer state of a short optical track.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributableVector {
    pub ra: f64,
    pub dec: f64,
    pub ra_rate: f64,
    pub dec_rate: f64,
    pub epoch: Epoch,
    pub observer: StateVector,
    /// Covariance of (ra, dec, ra_rate, dec_rate).
    pub noise: Matrix4<f64>,
}

/// Bounds defining the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArConstraints {
    pub e_min: f64,
    pub e_max: f64,
    /// km
    pub a_min: f64,
    /// km
    pub a_max: f64,
    /// km
    pub r_periapsis_min: f64,
}

impl ArConstraints {
    /// True if semimajor axis, eccentricity and periapsis of an elliptical
    /// orbit with these invariants lie within bounds.
    pub fn accepts(&self, a: f64, e: f64) -> bool {
        a.is_finite()
            && a > 0.0
            && e < 1.0
            && (self.a_min..=self.a_max).contains(&a)
            && (self.e_min..=self.e_max).contains(&e)
            && a * (1.0 - e) >= self.r_periapsis_min
    }

    /// Constraint check on an inertial state.
    pub fn accepts_state(&self, sv: &StateVector) -> bool {
        let energy = sv.specific_energy(MU_EARTH);
        if !(energy < 0.0) {
            return false;
        }
        let a = -MU_EARTH / (2.0 * energy);
        let e = sv.eccentricity_vector(MU_EARTH).norm();
        self.accepts(a, e)
    }
}

/// Uniform (range, range-rate) test grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArGridSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_rate_min: f64,
    pub rho_rate_max: f64,
    pub n_rho: usize,
    pub n_rho_rate: usize,
}

impl ArGridSpec {
    /// Range from the periapsis floor (at least 500 km) to twice the largest
    /// semimajor axis, range-rate within ±10 km/s.
    pub fn default_for(att: &AttributableVector, c: &ArConstraints, n_rho: usize, n_rho_rate: usize) -> Self {
        let rho_min = (c.r_periapsis_min - att.observer.position.norm()).max(500.0);
        Self { rho_min, rho_max: 2.0 * c.a_max, rho_rate_min: -10.0, rho_rate_max: 10.0, n_rho, n_rho_rate }
    }

    fn validate(&self) -> Result<()> {
        if self.n_rho == 0 || self.n_rho_rate == 0 {
            return Err(Error::InvalidArgument("admissible-region grid needs positive counts".into()));
        }
        if !(self.rho_min > 0.0 && self.rho_max >= self.rho_min && self.rho_rate_max >= self.rho_rate_min) {
            return Err(Error::InvalidArgument("admissible-region grid bounds are not ordered".into()));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize) -> (Vec<f64>, f64) {
        if n == 1 {
            return (vec![min], max - min);
        }
        let step = (max - min) / (n - 1) as f64;
        ((0..n).map(|k| min + step * k as f64).collect(), step)
    }
}

/// Admissible grid points, row-major over range then range-rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ArPointSet {
    pub points: Vec<(f64, f64)>,
    pub d_rho: f64,
    pub d_rho_rate: f64,
}

impl ArPointSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn line_of_sight(ra: f64, dec: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (sa, ca) = ra.sin_cos();
    let (sd, cd) = dec.sin_cos();
    let u = Vector3::new(cd * ca, cd * sa, sd);
    let du_dra = Vector3::new(-cd * sa, cd * ca, 0.0);
    let du_ddec = Vector3::new(-sd * ca, -sd * sa, cd);
    (u, du_dra, du_ddec)
}

fn polar_to_state(polar: &SVector<f64, 6>, observer: &StateVector) -> StateVector {
    let (ra, dec, ra_rate, dec_rate, rho, rho_rate) = (polar[0], polar[1], polar[2], polar[3], polar[4], polar[5]);
    let (u, du_dra, du_ddec) = line_of_sight(ra, dec);
    let u_dot = du_dra * ra_rate + du_ddec * dec_rate;
    StateVector::new(
        observer.position + u * rho,
        observer.velocity + u * rho_rate + u_dot * rho,
    )
}

/// Inertial state for a hypothesized range and range-rate along the attributable.
pub fn range_state(att: &AttributableVector, rho: f64, rho_rate: f64) -> StateVector {
    let polar = SVector::<f64, 6>::from_column_slice(&[att.ra, att.dec, att.ra_rate, att.dec_rate, rho, rho_rate]);
    polar_to_state(&polar, &att.observer)
}

pub fn admissible(att: &AttributableVector, rho: f64, rho_rate: f64, c: &ArConstraints) -> bool {
    rho > 0.0 && c.accepts_state(&range_state(att, rho, rho_rate))
}

/// Evaluates every grid point against the constraints.
pub fn admissible_points(att: &AttributableVector, c: &ArConstraints, grid: &ArGridSpec) -> Result<ArPointSet> {
    grid.validate()?;
    let (rhos, d_rho) = ArGridSpec::axis(grid.rho_min, grid.rho_max, grid.n_rho);
    let (rates, d_rho_rate) = ArGridSpec::axis(grid.rho_rate_min, grid.rho_rate_max, grid.n_rho_rate);
    let points = rhos
        .par_iter()
        .flat_map_iter(|&rho| {
            rates.iter().filter(move |&&rr| admissible(att, rho, rr, c)).map(move |&rr| (rho, rr))
        })
        .collect();
    Ok(ArPointSet { points, d_rho, d_rho_rate })
}

/// Shared polar covariance: attributable noise plus half-spacing grid sigmas.
pub fn polar_covariance(att: &AttributableVector, set: &ArPointSet) -> SMatrix<f64, 6, 6> {
    let mut cov = SMatrix::<f64, 6, 6>::zeros();
    cov.fixed_view_mut::<4, 4>(0, 0).copy_from(&att.noise);
    cov[(4, 4)] = (0.5 * set.d_rho).powi(2);
    cov[(5, 5)] = (0.5 * set.d_rho_rate).powi(2);
    cov
}

/// Cartesian mixture approximating a uniform density over the admissible
/// region, with total weight `expected_count`.
pub fn build_ar_gmm(
    att: &AttributableVector,
    c: &ArConstraints,
    grid: &ArGridSpec,
    expected_count: f64,
) -> Result<GaussianMixture<6>> {
    let set = admissible_points(att, c, grid)?;
    gmm_from_points(att, &set, expected_count)
}

/// Unscented transform of each admissible point's polar Gaussian.
pub fn gmm_from_points(att: &AttributableVector, set: &ArPointSet, expected_count: f64) -> Result<GaussianMixture<6>> {
    if set.is_empty() {
        return Err(Error::EmptyAdmissibleRegion);
    }
    let cov = polar_covariance(att, set);
    let weight = expected_count / set.points.len() as f64;
    let params = UnscentedParams::default();
    let observer = att.observer;
    let components = set
        .points
        .par_iter()
        .map(|&(rho, rho_rate)| {
            let mean =
                SVector::<f64, 6>::from_column_slice(&[att.ra, att.dec, att.ra_rate, att.dec_rate, rho, rho_rate]);
            let polar = GaussianComponent::new(weight, mean, cov);
            let (m, p) = unscented_transform(&polar, &params, |x| Ok(polar_to_state(x, &observer).to_vector()))?;
            Ok(GaussianComponent::new(weight, m, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianMixture::new(components))
}
