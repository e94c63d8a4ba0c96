use nalgebra::{SMatrix, SVector};

use super::{mahalanobis_to_fov, project_to_for, FovRect, GaussianComponent, GaussianMixture, MeasurementMap};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

/// Univariate split of a standard normal into weighted narrower Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitLibrary {
    pub alphas: Vec<f64>,
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl SplitLibrary {
    /// Three-component library fit with an L2 (beta = 2) objective and a
    /// sigma penalty of 0.001.
    pub fn three_component() -> Self {
        Self {
            alphas: vec![0.2252246249, 0.5495507502, 0.2252246249],
            means: vec![-1.0575154615, 0.0, 1.0575154615],
            sigmas: vec![0.6715662887, 0.6715662887, 0.6715662887],
        }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Second moment of the library, the variance retained along a split axis.
    pub fn variance(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.means)
            .zip(&self.sigmas)
            .map(|((a, m), s)| a * (m * m + s * s))
            .sum()
    }
}

impl Default for SplitLibrary {
    fn default() -> Self {
        Self::three_component()
    }
}

/// Eigenpair of the state covariance chosen as split axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDirection<const N: usize> {
    pub vector: SVector<f64, N>,
    pub value: f64,
    pub index: usize,
}

/// Eigenpair of `cov` whose scaled image under `h` best aligns with the major
/// axis of the projected covariance.
///
/// Eigenpairs are ordered by descending eigenvalue; ties keep the lowest index.
pub fn select_split_direction<const N: usize>(
    cov: &SMatrix<f64, N, N>,
    h: &SMatrix<f64, 2, N>,
) -> SplitDirection<N> {
    let (values, vectors) = sym_eigen(cov);
    let projected = h * cov * h.transpose();
    let (_, pvecs) = sym_eigen(&projected);
    let major = pvecs.column(0).into_owned();

    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..N {
        let v = vectors.column(k);
        let score = (values[k].max(0.0).sqrt() * major.dot(&(h * v))).abs();
        if score > best.1 {
            best = (k, score);
        }
    }
    let index = best.0;
    SplitDirection { vector: vectors.column(index).into_owned(), value: values[index], index }
}

/// Replaces one component by `lib.len()` components spread along `dir`.
pub fn split_component<const N: usize>(
    comp: &GaussianComponent<N>,
    dir: &SplitDirection<N>,
    lib: &SplitLibrary,
) -> GaussianMixture<N> {
    let sqrt_lambda = dir.value.max(0.0).sqrt();
    let outer = dir.vector * dir.vector.transpose();
    let components = (0..lib.len())
        .map(|i| {
            let mean = comp.mean + dir.vector * (sqrt_lambda * lib.means[i]);
            let shrink = (lib.sigmas[i] * lib.sigmas[i] - 1.0) * dir.value;
            let cov = comp.cov + outer * shrink;
            GaussianComponent::new(comp.weight * lib.alphas[i], mean, (cov + cov.transpose()) * 0.5)
        })
        .collect();
    GaussianMixture::new(components)
}

/// Controls for field-of-view driven splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    /// Whitened distance to the FOV boundary at or below which a component splits.
    pub d_m: f64,
    pub max_depth: usize,
    pub max_components: usize,
    pub library: SplitLibrary,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { d_m: 3.0, max_depth: 6, max_components: 10_000, library: SplitLibrary::default() }
    }
}

/// Splits every component whose projection lies within `d_m` whitened units of
/// the FOV boundary, recursing on the children until none triggers or the
/// depth cap is reached.
///
/// Output order is parent order, then library index.
pub fn recursive_fov_split<const N: usize>(
    mix: &GaussianMixture<N>,
    fov: &FovRect,
    map: &impl MeasurementMap<N>,
    cfg: &SplitConfig,
) -> Result<GaussianMixture<N>> {
    if !(cfg.d_m > 0.0) {
        return Err(Error::InvalidArgument(format!("split threshold d_m = {} must be positive", cfg.d_m)));
    }
    if fov.covers_sky() {
        return Ok(mix.clone());
    }
    let mut out = Vec::with_capacity(mix.len());
    for comp in &mix.components {
        split_into(comp, 0, fov, map, cfg, &mut out)?;
    }
    Ok(GaussianMixture::new(out))
}

fn split_into<const N: usize>(
    comp: &GaussianComponent<N>,
    depth: usize,
    fov: &FovRect,
    map: &impl MeasurementMap<N>,
    cfg: &SplitConfig,
    out: &mut Vec<GaussianComponent<N>>,
) -> Result<()> {
    let triggers = depth < cfg.max_depth && {
        let (mu, p) = project_to_for(comp, map)?;
        mahalanobis_to_fov(&mu, &p, fov).0 <= cfg.d_m
    };
    if !triggers {
        if out.len() >= cfg.max_components {
            return Err(Error::ComponentExplosion { cap: cfg.max_components });
        }
        out.push(comp.clone());
        return Ok(());
    }
    let h = map.jacobian(&comp.mean)?;
    let dir = select_split_direction(&comp.cov, &h);
    for child in split_component(comp, &dir, &cfg.library).components {
        split_into(&child, depth + 1, fov, map, cfg, out)?;
    }
    Ok(())
}
