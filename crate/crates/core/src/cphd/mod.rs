//! Gaussian-mixture CPHD filter without births or deaths, with a detection
//! probability that is constant inside a rectangular field of view and zero
//! outside, and clutter generated by a catalog of known objects.

mod cardinality;
mod esf;
pub(crate) mod terms;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use rayon::prelude::*;

use crate::astro::{wrap_pi, wrap_two_pi, AngleMeasurement, Epoch, Propagator, StateVector};
use crate::error::{Error, Result};
use crate::gmm::{
    project_to_for, unscented_transform, FovRect, GaussianComponent, GaussianMixture, MeasurementMap, RaDecSensor,
    UnscentedParams,
};
use crate::linalg::{log_gaussian_residual, repair_spd, symmetrize};

pub use cardinality::{CardinalityPmf, DEFAULT_N_MAX};
pub use esf::{esf, esf_truncated, pair_polynomial};
use terms::{update_terms, LogEvidence};

/// Floor applied to the clutter density at a measurement.
pub const CLUTTER_DENSITY_FLOOR: f64 = 1e-300;

/// Intensity and cardinality distribution of the multi-target state.
#[derive(Debug, Clone, PartialEq)]
pub struct CphdState<const N: usize = 6> {
    pub intensity: GaussianMixture<N>,
    pub cardinality: CardinalityPmf,
}

impl<const N: usize> CphdState<N> {
    pub fn new(intensity: GaussianMixture<N>, cardinality: CardinalityPmf) -> Self {
        Self { intensity, cardinality }
    }

    pub fn expected_cardinality(&self) -> f64 {
        self.cardinality.mean()
    }

    pub fn map_cardinality(&self) -> usize {
        self.cardinality.map()
    }

    /// |sum w - sum n rho(n)| / max(1, sum n rho(n)).
    pub fn consistency_error(&self) -> f64 {
        let mean = self.cardinality.mean();
        (self.intensity.total_weight() - mean).abs() / mean.max(1.0)
    }
}

/// Detection probability `p_d` inside `fov`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel<M> {
    pub p_d: f64,
    pub fov: FovRect,
    pub sensor: M,
}

impl DetectionModel<RaDecSensor> {
    pub fn radec(p_d: f64, fov: FovRect, observer: StateVector) -> Self {
        Self { p_d, fov, sensor: RaDecSensor { observer } }
    }
}

/// Known catalog objects, each generating a return with probability `p_d`
/// when inside the field of view.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClutterModel {
    pub catalog: Vec<GaussianComponent<6>>,
    pub p_d: f64,
}

impl ClutterModel {
    pub fn new(objects: impl IntoIterator<Item = (SVector<f64, 6>, SMatrix<f64, 6, 6>)>, p_d: f64) -> Self {
        Self { catalog: objects.into_iter().map(|(m, p)| GaussianComponent::new(1.0, m, p)).collect(), p_d }
    }

    /// Propagates every catalog object by `dt` seconds.
    pub fn propagate(&self, dt: f64, propagator: &dyn Propagator) -> Result<Self> {
        let catalog = propagate_components(&self.catalog, dt, propagator)?;
        Ok(Self { catalog, p_d: self.p_d })
    }
}

/// One scan's returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub measurements: Vec<AngleMeasurement>,
    pub epoch: Epoch,
    /// Noise covariance of (ra, dec), rad^2.
    pub noise: Matrix2<f64>,
}

impl MeasurementSet {
    pub fn empty(epoch: Epoch, noise: Matrix2<f64>) -> Self {
        Self { measurements: Vec::new(), epoch, noise }
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }
}

/// Difference of two (ra, dec) points with the ra part wrapped to (-pi, pi].
pub(crate) fn angle_residual(z: &Vector2<f64>, mean: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(wrap_pi(z.x - mean.x), z.y - mean.y)
}

fn propagate_components(
    comps: &[GaussianComponent<6>],
    dt: f64,
    propagator: &dyn Propagator,
) -> Result<Vec<GaussianComponent<6>>> {
    if dt == 0.0 {
        return Ok(comps.to_vec());
    }
    let params = UnscentedParams::default();
    comps
        .par_iter()
        .enumerate()
        .map(|(index, c)| {
            let (mean, cov) = unscented_transform(c, &params, |x| {
                propagator.propagate(&StateVector::from_vector(x), dt).map(|s| s.to_vector())
            })
            .map_err(|e| Error::ComponentPropagation { index, source: Box::new(e) })?;
            Ok(GaussianComponent::new(c.weight, mean, cov))
        })
        .collect()
}

/// Pushes every component through the dynamics; the cardinality is unchanged.
pub fn predict(state: &CphdState<6>, dt: f64, propagator: &dyn Propagator) -> Result<CphdState<6>> {
    let components = propagate_components(&state.intensity.components, dt, propagator)?;
    Ok(CphdState::new(GaussianMixture::new(components), state.cardinality.clone()))
}

/// Measurement-space clutter intensity: one unit-weight component per catalog
/// object with mean h(mu) and covariance H P H^T + R.
pub fn clutter_intensity(clutter: &ClutterModel, observer: &StateVector, noise: &Matrix2<f64>) -> Result<GaussianMixture<2>> {
    let sensor = RaDecSensor { observer: *observer };
    let components = clutter
        .catalog
        .iter()
        .map(|c| {
            let (mu, p) = project_to_for(c, &sensor)?;
            let mu = Vector2::new(wrap_two_pi(mu.x), mu.y);
            Ok(GaussianComponent::new(1.0, mu, symmetrize(&(p + noise))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianMixture::new(components))
}

/// Binomial distribution of the number of clutter returns.
pub fn clutter_cardinality(n_kappa_fov: usize, p_d: f64) -> Result<CardinalityPmf> {
    CardinalityPmf::binomial(n_kappa_fov, p_d)
}

/// Clutter components whose mean lies inside `fov`.
pub fn clutter_in_fov(kappa: &GaussianMixture<2>, fov: &FovRect) -> GaussianMixture<2> {
    GaussianMixture::new(kappa.components.iter().filter(|c| fov.contains(&c.mean)).cloned().collect())
}

/// ln kappa(z) / <1, kappa> for a unit-weight clutter mixture, floored.
pub(crate) fn ln_normalized_clutter(kappa: &[(Vector2<f64>, nalgebra::Cholesky<f64, nalgebra::U2>)], z: &Vector2<f64>) -> f64 {
    if kappa.is_empty() {
        return f64::NEG_INFINITY;
    }
    let dens: f64 = kappa.iter().map(|(m, ch)| log_gaussian_residual(&angle_residual(z, m), ch).exp()).sum();
    dens.max(CLUTTER_DENSITY_FLOOR).ln() - (kappa.len() as f64).ln()
}

pub(crate) fn clutter_factors(kappa: &GaussianMixture<2>) -> Result<Vec<(Vector2<f64>, nalgebra::Cholesky<f64, nalgebra::U2>)>> {
    kappa
        .components
        .iter()
        .map(|c| {
            let ch = c.cov.cholesky().ok_or(Error::IllConditioned("clutter measurement covariance"))?;
            Ok((c.mean, ch))
        })
        .collect()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Per-component quantities of an extended Kalman update.
struct Gain<const N: usize> {
    z_pred: Vector2<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::U2>,
    gain: SMatrix<f64, N, 2>,
    cov: SMatrix<f64, N, N>,
}

fn kalman_gain<const N: usize>(
    comp: &GaussianComponent<N>,
    map: &impl MeasurementMap<N>,
    noise: &Matrix2<f64>,
) -> Result<Gain<N>> {
    let z_pred = map.eval(&comp.mean)?;
    let h = map.jacobian(&comp.mean)?;
    let s = symmetrize(&(h * comp.cov * h.transpose() + noise));
    let chol = s.cholesky().ok_or(Error::IllConditioned("innovation covariance"))?;
    let pht = comp.cov * h.transpose();
    let gain = pht * chol.inverse();
    let ikh = SMatrix::<f64, N, N>::identity() - gain * h;
    // Joseph form keeps the posterior covariance symmetric positive definite.
    let cov = ikh * comp.cov * ikh.transpose() + gain * noise * gain.transpose();
    let cov = repair_spd(&cov)?;
    Ok(Gain { z_pred, chol, gain, cov })
}

/// CPHD measurement update for an intensity already split against the FOV.
///
/// `kappa_fov` is the measurement-space clutter intensity restricted to
/// objects inside the FOV (unit weights); its size sets the binomial clutter
/// cardinality. Each component counts as detectable when its projected mean
/// lies inside the FOV.
pub fn update_with_map<const N: usize, M: MeasurementMap<N> + Sync>(
    state: &CphdState<N>,
    z: &MeasurementSet,
    det: &DetectionModel<M>,
    kappa_fov: &GaussianMixture<2>,
    clutter_p_d: f64,
) -> Result<CphdState<N>> {
    if !(0.0..=1.0).contains(&det.p_d) {
        return Err(Error::InvalidArgument(format!("detection probability {} outside [0, 1]", det.p_d)));
    }
    let comps = &state.intensity.components;
    let n_hat = state.intensity.total_weight();
    let zs: Vec<Vector2<f64>> = z.measurements.iter().map(|m| m.to_vector()).collect();

    let detectable: Vec<bool> = comps
        .iter()
        .map(|c| det.sensor.eval(&c.mean).map(|mu| det.p_d > 0.0 && det.fov.contains(&mu)))
        .collect::<Result<_>>()?;
    let gains: Vec<Option<Gain<N>>> = comps
        .par_iter()
        .zip(detectable.par_iter())
        .map(|(c, &d)| if d { kalman_gain(c, &det.sensor, &z.noise).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;

    // ln g_i(z) for every detectable component and measurement.
    let ln_lik: Vec<Vec<f64>> = gains
        .iter()
        .map(|g| match g {
            Some(g) => zs.iter().map(|zk| log_gaussian_residual(&angle_residual(zk, &g.z_pred), &g.chol)).collect(),
            None => Vec::new(),
        })
        .collect();

    let detect_mass: f64 = comps.iter().zip(&detectable).filter(|(_, d)| **d).map(|(c, _)| c.weight).sum();
    let q_missed = if n_hat > 0.0 { (1.0 - det.p_d * detect_mass / n_hat).clamp(0.0, 1.0) } else { 1.0 };

    let kappa = clutter_factors(kappa_fov)?;
    let evidence: Vec<LogEvidence> = (0..zs.len())
        .map(|k| {
            let terms: Vec<f64> = comps
                .iter()
                .zip(&ln_lik)
                .filter(|(c, l)| !l.is_empty() && c.weight > 0.0)
                .map(|(c, l)| c.weight.ln() + l[k])
                .collect();
            LogEvidence {
                ln_target: det.p_d.ln() + log_sum_exp(&terms),
                ln_clutter: ln_normalized_clutter(&kappa, &zs[k]),
            }
        })
        .collect();
    let clutter_card = clutter_cardinality(kappa_fov.len(), clutter_p_d)?;
    let t = update_terms(&state.cardinality, &clutter_card, n_hat, q_missed, &evidence)?;

    let ln_pd = det.p_d.ln();
    let mut out = Vec::with_capacity(comps.len() * (1 + zs.len()));
    for ((c, gain), lik) in comps.iter().zip(&gains).zip(&ln_lik) {
        let missed_pd = if gain.is_some() { 1.0 - det.p_d } else { 1.0 };
        out.push(GaussianComponent::new(c.weight * missed_pd * t.missed, c.mean, c.cov));
        if let Some(g) = gain {
            for (k, zk) in zs.iter().enumerate() {
                let w = (c.weight.ln() + lik[k] + ln_pd + t.ln_detect[k]).exp();
                let innovation = angle_residual(zk, &g.z_pred);
                out.push(GaussianComponent::new(w, c.mean + g.gain * innovation, g.cov));
            }
        }
    }
    out.retain(|c| c.weight > 0.0);

    let mut intensity = GaussianMixture::new(out);
    let total = intensity.total_weight();
    let target = t.posterior.mean();
    if total > 0.0 {
        intensity.scale_weights(target / total);
    }
    Ok(CphdState::new(intensity, t.posterior))
}

/// CPHD update of a Cartesian state with angles-only measurements and the
/// catalog clutter model.
pub fn update(
    state: &CphdState<6>,
    z: &MeasurementSet,
    det: &DetectionModel<RaDecSensor>,
    clutter: &ClutterModel,
) -> Result<CphdState<6>> {
    let kappa = clutter_intensity(clutter, &det.sensor.observer, &z.noise)?;
    let kappa_fov = clutter_in_fov(&kappa, &det.fov);
    update_with_map(state, z, det, &kappa_fov, clutter.p_d)
}
